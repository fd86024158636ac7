#include "bip/nn.hpp"

#include <algorithm>
#include <cmath>

#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace bip {

namespace {

Layout build_layout(const std::vector<LayerSpec>& layers) {
    Layout lo;
    std::int64_t off = 0;
    int idx = 0;
    auto push = [&](const std::string& name, std::vector<int> shape) {
        LayoutEntry e;
        e.name = name;
        e.shape = std::move(shape);
        e.offset = off;
        e.size = shape_numel(e.shape);
        off += e.size;
        lo.entries.push_back(std::move(e));
    };
    for (const LayerSpec& l : layers) {
        if (const auto* d = std::get_if<DenseSpec>(&l)) {
            push("dense" + std::to_string(idx) + ".w", {d->in, d->out});
            push("dense" + std::to_string(idx) + ".b", {d->out});
        } else if (const auto* c = std::get_if<ConvSpec>(&l)) {
            push("conv" + std::to_string(idx) + ".w", {c->cout, c->cin, c->k, c->k});
            push("conv" + std::to_string(idx) + ".b", {c->cout});
        }
        ++idx;
    }
    lo.total = off;
    return lo;
}

}  // namespace

Network::Network(std::string id, std::vector<LayerSpec> layers, std::vector<int> input_shape, int classes)
    : id_(std::move(id)), layers_(std::move(layers)), input_shape_(std::move(input_shape)), classes_(classes) {
    layout_ = build_layout(layers_);
}

Network Network::mlp_tiny() {
    return Network("mlp-tiny",
                   {DenseSpec{2, 8, Act::tanh}, DenseSpec{8, 2, Act::none}},
                   {2}, 2);
}

Network Network::mlp_small(int input_dim, int classes) {
    return Network("mlp-small",
                   {DenseSpec{input_dim, 32, Act::relu}, DenseSpec{32, 32, Act::relu},
                    DenseSpec{32, classes, Act::none}},
                   {input_dim}, classes);
}

Network Network::cnn_tiny(int classes) {
    // 1x8x8 -> conv3x3 (8) -> 8x6x6 -> conv3x3 (8) -> 8x4x4 -> flatten -> dense
    return Network("cnn-tiny",
                   {ConvSpec{1, 8, 3, Act::relu}, ConvSpec{8, 8, 3, Act::relu}, FlattenSpec{},
                    DenseSpec{8 * 4 * 4, classes, Act::none}},
                   {1, 8, 8}, classes);
}

Network Network::by_id(const std::string& id, int input_dim, int classes) {
    if (id == "mlp-tiny") return mlp_tiny();
    if (id == "mlp-small") return mlp_small(input_dim, classes);
    if (id == "cnn-tiny") return cnn_tiny(classes);
    throw config_error("unknown model id '" + id + "' (mlp-tiny|mlp-small|cnn-tiny)");
}

bool Network::uses_relu() const {
    for (const LayerSpec& l : layers_) {
        if (const auto* d = std::get_if<DenseSpec>(&l); d && d->act == Act::relu) return true;
        if (const auto* c = std::get_if<ConvSpec>(&l); c && c->act == Act::relu) return true;
    }
    return false;
}

Tape::NodeId Network::build_forward(Tape& tape, std::span<const double> z, const Tensor& x,
                                    std::vector<Tape::NodeId>* param_nodes) const {
    if (static_cast<std::int64_t>(z.size()) != layout_.total) {
        throw usage_error(id_ + ": parameter vector has length " + std::to_string(z.size()) +
                          ", expected " + std::to_string(layout_.total));
    }
    std::size_t entry = 0;
    auto next_param = [&]() {
        const LayoutEntry& e = layout_.entries[entry++];
        Tensor t(e.shape, std::vector<double>(z.begin() + e.offset, z.begin() + e.offset + e.size));
        const Tape::NodeId id = tape.input(std::move(t));
        if (param_nodes) param_nodes->push_back(id);
        return id;
    };

    Tape::NodeId cur = tape.input(x);
    int idx = 0;
    for (const LayerSpec& l : layers_) {
        tape.set_context("layer " + std::to_string(idx) + " of " + id_);
        if (const auto* d = std::get_if<DenseSpec>(&l)) {
            const Tape::NodeId w = next_param();
            const Tape::NodeId b = next_param();
            cur = tape.bias_add(tape.matmul(cur, w), b);
            if (d->act == Act::relu) cur = tape.relu(cur);
            if (d->act == Act::tanh) cur = tape.tanh(cur);
        } else if (const auto* c = std::get_if<ConvSpec>(&l)) {
            const Tape::NodeId w = next_param();
            const Tape::NodeId b = next_param();
            cur = tape.bias_add(tape.conv2d(cur, w), b);
            if (c->act == Act::relu) cur = tape.relu(cur);
            if (c->act == Act::tanh) cur = tape.tanh(cur);
        } else {
            cur = tape.flatten(cur);
        }
        ++idx;
    }
    tape.set_context("");
    return cur;
}

double Network::loss_at(std::span<const double> z, const Batch& batch) const {
    if (batch.size() == 0) throw usage_error("loss_at: empty batch");
    Tape tape;
    const Tape::NodeId logits = build_forward(tape, z, batch.x, nullptr);
    return tape.value(tape.softmax_cross_entropy(logits, batch.y)).data[0];
}

ParamVector Network::grad_z(std::span<const double> z, const Batch& batch, double* loss_out) const {
    if (batch.size() == 0) throw usage_error("grad_z: empty batch");
    Tape tape;
    std::vector<Tape::NodeId> params;
    const Tape::NodeId logits = build_forward(tape, z, batch.x, &params);
    const Tape::NodeId loss = tape.softmax_cross_entropy(logits, batch.y);
    if (loss_out) *loss_out = tape.value(loss).data[0];
    tape.backward(loss, Tensor::scalar(1.0));
    ParamVector g(static_cast<std::size_t>(layout_.total), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const LayoutEntry& e = layout_.entries[i];
        const Tensor& pg = tape.grad(params[i]);
        std::copy(pg.data.begin(), pg.data.end(), g.begin() + e.offset);
    }
    return g;
}

ParamVector Network::init_params(std::uint64_t seed) const {
    ParamVector p(static_cast<std::size_t>(layout_.total), 0.0);
    Rng rng(mix64(seed, 0x1417));
    std::size_t entry = 0;
    for (const LayerSpec& l : layers_) {
        double fan_in = 1.0;
        int tensors = 0;
        if (const auto* d = std::get_if<DenseSpec>(&l)) {
            fan_in = d->in;
            tensors = 2;
        } else if (const auto* c = std::get_if<ConvSpec>(&l)) {
            fan_in = static_cast<double>(c->cin) * c->k * c->k;
            tensors = 2;
        }
        const double scale = std::sqrt(2.0 / fan_in);
        for (int t = 0; t < tensors; ++t) {
            const LayoutEntry& e = layout_.entries[entry++];
            for (std::int64_t i = 0; i < e.size; ++i) {
                p[static_cast<std::size_t>(e.offset + i)] = scale * rng.gauss();
            }
        }
    }
    return p;
}

double Network::accuracy(std::span<const double> z, const Dataset& ds) const {
    if (ds.size() == 0) throw usage_error("accuracy: empty dataset");
    std::vector<int> all(static_cast<std::size_t>(ds.size()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

    std::int64_t hits = 0;
    const int chunk = 256;
    for (std::size_t begin = 0; begin < all.size(); begin += chunk) {
        const std::size_t end = std::min(all.size(), begin + chunk);
        const Batch b = ds.gather(std::span<const int>(all).subspan(begin, end - begin));
        Tape tape;
        const Tensor& logits = tape.value(build_forward(tape, z, b.x, nullptr));
        const int C = logits.shape[1];
        for (int r = 0; r < b.size(); ++r) {
            int best = 0;  // ties resolve to the lowest class index
            for (int c = 1; c < C; ++c) {
                if (logits.data[static_cast<std::size_t>(r * C + c)] > logits.data[static_cast<std::size_t>(r * C + best)]) best = c;
            }
            if (best == b.y[static_cast<std::size_t>(r)]) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

}  // namespace bip

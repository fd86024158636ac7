#include "bip/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bip/errors.hpp"

namespace bip {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    for (int dim : shape) {
        if (dim <= 0) throw usage_error("tensor dimensions must be positive");
    }
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
        throw usage_error("tensor data length does not match shape");
    }
}

Tensor Tensor::zeros(std::vector<int> shape) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

void Tape::check_id(NodeId id, const char* who) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
        throw usage_error(std::string(who) + ": invalid node id");
    }
}

void Tape::check_finite(const Tensor& t, const char* op) const {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw numeric_error((context_.empty() ? std::string() : context_ + ": ") +
                                std::string(op) + " produced a non-finite value");
        }
    }
}

void Tape::fail_shape(const char* op, const std::string& detail) const {
    throw usage_error((context_.empty() ? std::string() : context_ + ": ") + std::string(op) +
                      ": shape mismatch, " + detail);
}

Tape::NodeId Tape::push(Node n) {
    check_finite(n.value, "op");
    nodes_.push_back(std::move(n));
    backward_done_ = false;
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::input(Tensor value) {
    Node n;
    n.op = Op::input;
    n.value = std::move(value);
    return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    check_id(a, "matmul");
    check_id(b, "matmul");
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.shape.size() != 2 || B.shape.size() != 2 || A.shape[1] != B.shape[0]) {
        fail_shape("matmul", A.shape_str() + " * " + B.shape_str());
    }
    const int m = A.shape[0], k = A.shape[1], n = B.shape[1];
    Tensor out = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        for (int t = 0; t < k; ++t) {
            const double av = A.data[static_cast<std::size_t>(i * k + t)];
            if (av == 0.0) continue;
            const double* brow = &B.data[static_cast<std::size_t>(t * n)];
            double* orow = &out.data[static_cast<std::size_t>(i * n)];
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    Node node;
    node.op = Op::matmul;
    node.parents = {a, b};
    node.value = std::move(out);
    return push(std::move(node));
}

Tape::NodeId Tape::conv2d(NodeId x, NodeId kernel) {
    check_id(x, "conv2d");
    check_id(kernel, "conv2d");
    const Tensor& X = val(x);
    const Tensor& K = val(kernel);
    if (X.shape.size() != 4 || K.shape.size() != 4 || X.shape[1] != K.shape[1]) {
        fail_shape("conv2d", X.shape_str() + " * " + K.shape_str());
    }
    const int B = X.shape[0], C = X.shape[1], H = X.shape[2], W = X.shape[3];
    const int F = K.shape[0], kh = K.shape[2], kw = K.shape[3];
    const int oh = H - kh + 1, ow = W - kw + 1;
    if (oh <= 0 || ow <= 0) fail_shape("conv2d", "kernel larger than input " + X.shape_str());
    Tensor out = Tensor::zeros({B, F, oh, ow});
    auto xat = [&](int b, int c, int i, int j) {
        return X.data[static_cast<std::size_t>(((b * C + c) * H + i) * W + j)];
    };
    auto kat = [&](int f, int c, int i, int j) {
        return K.data[static_cast<std::size_t>(((f * C + c) * kh + i) * kw + j)];
    };
    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F; ++f)
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j) {
                    double acc = 0.0;
                    for (int c = 0; c < C; ++c)
                        for (int u = 0; u < kh; ++u)
                            for (int v = 0; v < kw; ++v) acc += xat(b, c, i + u, j + v) * kat(f, c, u, v);
                    out.data[static_cast<std::size_t>(((b * F + f) * oh + i) * ow + j)] = acc;
                }
    Node node;
    node.op = Op::conv2d;
    node.parents = {x, kernel};
    node.value = std::move(out);
    return push(std::move(node));
}

Tape::NodeId Tape::bias_add(NodeId x, NodeId bias) {
    check_id(x, "bias_add");
    check_id(bias, "bias_add");
    const Tensor& X = val(x);
    const Tensor& Bv = val(bias);
    Tensor out = X;
    if (Bv.shape.size() != 1) fail_shape("bias_add", "bias must be rank 1, got " + Bv.shape_str());
    if (X.shape.size() == 2 && X.shape[1] == Bv.shape[0]) {
        const int B = X.shape[0], D = X.shape[1];
        for (int b = 0; b < B; ++b)
            for (int d = 0; d < D; ++d) out.data[static_cast<std::size_t>(b * D + d)] += Bv.data[static_cast<std::size_t>(d)];
    } else if (X.shape.size() == 4 && X.shape[1] == Bv.shape[0]) {
        const int B = X.shape[0], C = X.shape[1], hw = X.shape[2] * X.shape[3];
        for (int b = 0; b < B; ++b)
            for (int c = 0; c < C; ++c)
                for (int p = 0; p < hw; ++p)
                    out.data[static_cast<std::size_t>((b * C + c) * hw + p)] += Bv.data[static_cast<std::size_t>(c)];
    } else {
        fail_shape("bias_add", X.shape_str() + " + " + Bv.shape_str());
    }
    Node node;
    node.op = Op::bias_add;
    node.parents = {x, bias};
    node.value = std::move(out);
    return push(std::move(node));
}

Tape::NodeId Tape::relu(NodeId x) {
    check_id(x, "relu");
    Tensor out = val(x);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    Node node;
    node.op = Op::relu;
    node.parents = {x, -1};
    node.value = std::move(out);
    return push(std::move(node));
}

Tape::NodeId Tape::tanh(NodeId x) {
    check_id(x, "tanh");
    Tensor out = val(x);
    for (double& v : out.data) v = std::tanh(v);
    Node node;
    node.op = Op::tanh;
    node.parents = {x, -1};
    node.value = std::move(out);
    return push(std::move(node));
}

Tape::NodeId Tape::flatten(NodeId x) {
    check_id(x, "flatten");
    const Tensor& X = val(x);
    if (X.shape.empty()) fail_shape("flatten", "rank 0");
    const int B = X.shape[0];
    const int rest = static_cast<int>(shape_numel(X.shape) / B);
    Tensor out({B, rest}, X.data);
    Node node;
    node.op = Op::flatten;
    node.parents = {x, -1};
    node.value = std::move(out);
    return push(std::move(node));
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
    check_id(a, "mul");
    check_id(b, "mul");
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) fail_shape("mul", A.shape_str() + " vs " + B.shape_str());
    Tensor out = A;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= B.data[i];
    Node node;
    node.op = Op::mul;
    node.parents = {a, b};
    node.value = std::move(out);
    return push(std::move(node));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    check_id(a, "add");
    check_id(b, "add");
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) fail_shape("add", A.shape_str() + " vs " + B.shape_str());
    Tensor out = A;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += B.data[i];
    Node node;
    node.op = Op::add;
    node.parents = {a, b};
    node.value = std::move(out);
    return push(std::move(node));
}

Tape::NodeId Tape::sum(NodeId x) {
    check_id(x, "sum");
    double acc = 0.0;
    for (double v : val(x).data) acc += v;
    Node node;
    node.op = Op::sum;
    node.parents = {x, -1};
    node.value = Tensor::scalar(acc);
    return push(std::move(node));
}

Tape::NodeId Tape::softmax_cross_entropy(NodeId logits, std::vector<int> labels) {
    check_id(logits, "softmax_cross_entropy");
    const Tensor& L = val(logits);
    if (L.shape.size() != 2) fail_shape("softmax_cross_entropy", "logits must be [B,C], got " + L.shape_str());
    const int B = L.shape[0], C = L.shape[1];
    if (static_cast<int>(labels.size()) != B) {
        fail_shape("softmax_cross_entropy", "labels length != batch size");
    }
    for (int y : labels) {
        if (y < 0 || y >= C) throw usage_error("softmax_cross_entropy: label out of range");
    }
    Tensor probs = Tensor::zeros({B, C});
    double loss = 0.0;
    for (int b = 0; b < B; ++b) {
        const double* row = &L.data[static_cast<std::size_t>(b * C)];
        double mx = row[0];
        for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        double z = 0.0;
        for (int c = 0; c < C; ++c) z += std::exp(row[c] - mx);
        const double logz = std::log(z) + mx;
        for (int c = 0; c < C; ++c) probs.data[static_cast<std::size_t>(b * C + c)] = std::exp(row[c] - logz);
        loss += logz - row[labels[static_cast<std::size_t>(b)]];
    }
    Node node;
    node.op = Op::softmax_ce;
    node.parents = {logits, -1};
    node.value = Tensor::scalar(loss / B);
    node.aux = std::move(probs);
    node.labels = std::move(labels);
    return push(std::move(node));
}

const Tensor& Tape::value(NodeId id) const {
    check_id(id, "value");
    return nodes_[static_cast<std::size_t>(id)].value;
}

const Tensor& Tape::grad(NodeId id) const {
    if (!backward_done_) throw usage_error("grad() called before backward()");
    check_id(id, "grad");
    return grads_[static_cast<std::size_t>(id)];
}

void Tape::backward(NodeId output, const Tensor& seed) {
    check_id(output, "backward");
    if (nodes_.empty()) throw usage_error("backward() on empty tape");
    const Tensor& out = val(output);
    if (!seed.same_shape(out)) {
        throw usage_error("backward: seed shape " + seed.shape_str() + " != output shape " + out.shape_str());
    }
    grads_.clear();
    grads_.reserve(nodes_.size());
    for (const Node& n : nodes_) grads_.push_back(Tensor::zeros(n.value.shape));
    grads_[static_cast<std::size_t>(output)] = seed;

    for (NodeId id = output; id >= 0; --id) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        const Tensor& g = grads_[static_cast<std::size_t>(id)];
        switch (n.op) {
            case Op::input:
                break;
            case Op::matmul: {
                const Tensor& A = val(n.parents[0]);
                const Tensor& B = val(n.parents[1]);
                Tensor& ga = grads_[static_cast<std::size_t>(n.parents[0])];
                Tensor& gb = grads_[static_cast<std::size_t>(n.parents[1])];
                const int m = A.shape[0], k = A.shape[1], nn = B.shape[1];
                // ga += g * B^T ; gb += A^T * g
                for (int i = 0; i < m; ++i)
                    for (int t = 0; t < k; ++t) {
                        double acc = 0.0;
                        for (int j = 0; j < nn; ++j)
                            acc += g.data[static_cast<std::size_t>(i * nn + j)] * B.data[static_cast<std::size_t>(t * nn + j)];
                        ga.data[static_cast<std::size_t>(i * k + t)] += acc;
                    }
                for (int t = 0; t < k; ++t)
                    for (int j = 0; j < nn; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < m; ++i)
                            acc += A.data[static_cast<std::size_t>(i * k + t)] * g.data[static_cast<std::size_t>(i * nn + j)];
                        gb.data[static_cast<std::size_t>(t * nn + j)] += acc;
                    }
                break;
            }
            case Op::conv2d: {
                const Tensor& X = val(n.parents[0]);
                const Tensor& K = val(n.parents[1]);
                Tensor& gx = grads_[static_cast<std::size_t>(n.parents[0])];
                Tensor& gk = grads_[static_cast<std::size_t>(n.parents[1])];
                const int B = X.shape[0], C = X.shape[1], H = X.shape[2], W = X.shape[3];
                const int F = K.shape[0], kh = K.shape[2], kw = K.shape[3];
                const int oh = H - kh + 1, ow = W - kw + 1;
                for (int b = 0; b < B; ++b)
                    for (int f = 0; f < F; ++f)
                        for (int i = 0; i < oh; ++i)
                            for (int j = 0; j < ow; ++j) {
                                const double go = g.data[static_cast<std::size_t>(((b * F + f) * oh + i) * ow + j)];
                                if (go == 0.0) continue;
                                for (int c = 0; c < C; ++c)
                                    for (int u = 0; u < kh; ++u)
                                        for (int v = 0; v < kw; ++v) {
                                            gx.data[static_cast<std::size_t>(((b * C + c) * H + i + u) * W + j + v)] +=
                                                go * K.data[static_cast<std::size_t>(((f * C + c) * kh + u) * kw + v)];
                                            gk.data[static_cast<std::size_t>(((f * C + c) * kh + u) * kw + v)] +=
                                                go * X.data[static_cast<std::size_t>(((b * C + c) * H + i + u) * W + j + v)];
                                        }
                            }
                break;
            }
            case Op::bias_add: {
                Tensor& gx = grads_[static_cast<std::size_t>(n.parents[0])];
                Tensor& gb = grads_[static_cast<std::size_t>(n.parents[1])];
                for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
                const Tensor& X = val(n.parents[0]);
                if (X.shape.size() == 2) {
                    const int B = X.shape[0], D = X.shape[1];
                    for (int b = 0; b < B; ++b)
                        for (int d = 0; d < D; ++d) gb.data[static_cast<std::size_t>(d)] += g.data[static_cast<std::size_t>(b * D + d)];
                } else {
                    const int B = X.shape[0], C = X.shape[1], hw = X.shape[2] * X.shape[3];
                    for (int b = 0; b < B; ++b)
                        for (int c = 0; c < C; ++c)
                            for (int p = 0; p < hw; ++p)
                                gb.data[static_cast<std::size_t>(c)] += g.data[static_cast<std::size_t>((b * C + c) * hw + p)];
                }
                break;
            }
            case Op::relu: {
                const Tensor& X = val(n.parents[0]);
                Tensor& gx = grads_[static_cast<std::size_t>(n.parents[0])];
                // subgradient at 0 is 0
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    if (X.data[i] > 0.0) gx.data[i] += g.data[i];
                break;
            }
            case Op::tanh: {
                Tensor& gx = grads_[static_cast<std::size_t>(n.parents[0])];
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    const double y = n.value.data[i];
                    gx.data[i] += g.data[i] * (1.0 - y * y);
                }
                break;
            }
            case Op::flatten: {
                Tensor& gx = grads_[static_cast<std::size_t>(n.parents[0])];
                for (std::size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
                break;
            }
            case Op::mul: {
                const Tensor& A = val(n.parents[0]);
                const Tensor& B = val(n.parents[1]);
                Tensor& ga = grads_[static_cast<std::size_t>(n.parents[0])];
                Tensor& gb = grads_[static_cast<std::size_t>(n.parents[1])];
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    ga.data[i] += g.data[i] * B.data[i];
                    gb.data[i] += g.data[i] * A.data[i];
                }
                break;
            }
            case Op::add: {
                Tensor& ga = grads_[static_cast<std::size_t>(n.parents[0])];
                Tensor& gb = grads_[static_cast<std::size_t>(n.parents[1])];
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    ga.data[i] += g.data[i];
                    gb.data[i] += g.data[i];
                }
                break;
            }
            case Op::sum: {
                Tensor& gx = grads_[static_cast<std::size_t>(n.parents[0])];
                const double s = g.data[0];
                for (double& v : gx.data) v += s;
                break;
            }
            case Op::softmax_ce: {
                Tensor& gl = grads_[static_cast<std::size_t>(n.parents[0])];
                const int B = n.aux.shape[0], C = n.aux.shape[1];
                const double s = g.data[0] / B;
                for (int b = 0; b < B; ++b)
                    for (int c = 0; c < C; ++c) {
                        double d = n.aux.data[static_cast<std::size_t>(b * C + c)];
                        if (c == n.labels[static_cast<std::size_t>(b)]) d -= 1.0;
                        gl.data[static_cast<std::size_t>(b * C + c)] += s * d;
                    }
                break;
            }
        }
    }
    backward_done_ = true;
}

}  // namespace bip

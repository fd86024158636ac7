#include "bip/masking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "bip/errors.hpp"

namespace bip {

Granularity parse_granularity(const std::string& s) {
    if (s == "element") return Granularity::element;
    if (s == "filter") return Granularity::filter;
    if (s == "channel") return Granularity::channel;
    throw config_error("unknown granularity '" + s + "' (element|filter|channel)");
}

std::string to_string(Granularity g) {
    switch (g) {
        case Granularity::element: return "element";
        case Granularity::filter: return "filter";
        case Granularity::channel: return "channel";
    }
    return "?";
}

SparsityTarget SparsityTarget::make(double p, std::int64_t n, std::int64_t groups, bool per_layer) {
    if (p < 0.0 || p >= 1.0) throw config_error("pruning ratio must be in [0,1)");
    if (n <= 0 || groups <= 0) throw config_error("empty parameter space");
    SparsityTarget t;
    t.p = p;
    t.k = std::clamp<std::int64_t>(std::llround((1.0 - p) * static_cast<double>(n)), 1, n);
    t.k_g = std::clamp<std::int64_t>(std::llround((1.0 - p) * static_cast<double>(groups)), 1, groups);
    t.per_layer = per_layer;
    return t;
}

GroupMap build_group_map(const Network& net, Granularity g) {
    GroupMap gm;
    gm.n = net.num_params();
    const Layout& lo = net.layout();
    const auto& layers = net.layers();

    auto element_groups = [&](const LayoutEntry& e, int layer) {
        for (std::int64_t i = 0; i < e.size; ++i) {
            gm.groups.push_back({e.offset + i});
            gm.group_layer.push_back(layer);
        }
    };

    std::size_t entry = 0;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto* conv = std::get_if<ConvSpec>(&layers[li]);
        if (std::holds_alternative<FlattenSpec>(layers[li])) continue;
        const LayoutEntry& w = lo.entries[entry++];
        const LayoutEntry& b = lo.entries[entry++];
        if (conv && g == Granularity::filter) {
            const std::int64_t per_filter = static_cast<std::int64_t>(conv->cin) * conv->k * conv->k;
            for (int f = 0; f < conv->cout; ++f) {
                std::vector<std::int64_t> idx(static_cast<std::size_t>(per_filter));
                std::iota(idx.begin(), idx.end(), w.offset + f * per_filter);
                gm.groups.push_back(std::move(idx));
                gm.group_layer.push_back(static_cast<int>(li));
            }
            element_groups(b, static_cast<int>(li));
        } else if (conv && g == Granularity::channel) {
            const int k2 = conv->k * conv->k;
            for (int c = 0; c < conv->cin; ++c) {
                std::vector<std::int64_t> idx;
                idx.reserve(static_cast<std::size_t>(conv->cout) * k2);
                for (int f = 0; f < conv->cout; ++f) {
                    const std::int64_t base = w.offset + (static_cast<std::int64_t>(f) * conv->cin + c) * k2;
                    for (int p = 0; p < k2; ++p) idx.push_back(base + p);
                }
                gm.groups.push_back(std::move(idx));
                gm.group_layer.push_back(static_cast<int>(li));
            }
            element_groups(b, static_cast<int>(li));
        } else {
            element_groups(w, static_cast<int>(li));
            element_groups(b, static_cast<int>(li));
        }
    }
    return gm;
}

namespace {

std::vector<std::int64_t> ranked_groups(const MaskScores& scores) {
    std::vector<std::int64_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
            return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
        return a < b;
    });
    return order;
}

BinaryMask expand_selection(const std::vector<char>& selected, const GroupMap& gm) {
    BinaryMask m;
    m.bits.assign(static_cast<std::size_t>(gm.n), 0);
    for (std::size_t g = 0; g < gm.groups.size(); ++g) {
        if (!selected[g]) continue;
        for (std::int64_t i : gm.groups[g]) {
            m.bits[static_cast<std::size_t>(i)] = 1;
            ++m.retained;
        }
    }
    return m;
}

}  // namespace

BinaryMask project_topk(const MaskScores& scores, const SparsityTarget& target, const GroupMap& gm) {
    if (static_cast<std::int64_t>(scores.size()) != gm.group_count()) {
        throw usage_error("project_topk: score length != group count");
    }
    if (target.per_layer) return project_topk_per_layer(scores, target, gm);
    const auto order = ranked_groups(scores);
    std::vector<char> selected(scores.size(), 0);
    for (std::int64_t i = 0; i < target.k_g; ++i) selected[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
    return expand_selection(selected, gm);
}

BinaryMask project_topk_per_layer(const MaskScores& scores, const SparsityTarget& target, const GroupMap& gm) {
    if (static_cast<std::int64_t>(scores.size()) != gm.group_count()) {
        throw usage_error("project_topk: score length != group count");
    }
    std::vector<char> selected(scores.size(), 0);
    int max_layer = 0;
    for (int l : gm.group_layer) max_layer = std::max(max_layer, l);
    for (int layer = 0; layer <= max_layer; ++layer) {
        std::vector<std::int64_t> mine;
        for (std::size_t g = 0; g < scores.size(); ++g)
            if (gm.group_layer[g] == layer) mine.push_back(static_cast<std::int64_t>(g));
        if (mine.empty()) continue;
        std::sort(mine.begin(), mine.end(), [&](std::int64_t a, std::int64_t b) {
            if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
                return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
            return a < b;
        });
        const auto keep = std::clamp<std::int64_t>(
            std::llround((1.0 - target.p) * static_cast<double>(mine.size())), 1,
            static_cast<std::int64_t>(mine.size()));
        for (std::int64_t i = 0; i < keep; ++i) selected[static_cast<std::size_t>(mine[static_cast<std::size_t>(i)])] = 1;
    }
    return expand_selection(selected, gm);
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.size() != b.size()) throw usage_error("mask_iou: length mismatch");
    std::int64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        inter += (a.bits[i] & b.bits[i]);
        uni += (a.bits[i] | b.bits[i]);
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

MaskScores init_scores(std::span<const double> theta, const GroupMap& gm) {
    if (static_cast<std::int64_t>(theta.size()) != gm.n) throw usage_error("init_scores: theta length != n");
    MaskScores s(gm.groups.size(), 0.0);
    double max_mean = 0.0;
    for (std::size_t g = 0; g < gm.groups.size(); ++g) {
        double acc = 0.0;
        for (std::int64_t i : gm.groups[g]) acc += std::abs(theta[static_cast<std::size_t>(i)]);
        s[g] = acc / static_cast<double>(gm.groups[g].size());
        max_mean = std::max(max_mean, s[g]);
    }
    if (max_mean > 0.0) {
        for (double& v : s) v /= max_mean;
    }
    return s;
}

std::vector<double> expand_scores(const MaskScores& scores, const GroupMap& gm) {
    if (static_cast<std::int64_t>(scores.size()) != gm.group_count()) {
        throw usage_error("expand_scores: score length != group count");
    }
    std::vector<double> out(static_cast<std::size_t>(gm.n), 0.0);
    for (std::size_t g = 0; g < gm.groups.size(); ++g)
        for (std::int64_t i : gm.groups[g]) out[static_cast<std::size_t>(i)] = scores[g];
    return out;
}

std::vector<double> reduce_to_groups(std::span<const double> per_param, const GroupMap& gm, bool mean) {
    if (static_cast<std::int64_t>(per_param.size()) != gm.n) {
        throw usage_error("reduce_to_groups: vector length != n");
    }
    std::vector<double> out(gm.groups.size(), 0.0);
    for (std::size_t g = 0; g < gm.groups.size(); ++g) {
        double acc = 0.0;
        for (std::int64_t i : gm.groups[g]) acc += per_param[static_cast<std::size_t>(i)];
        out[g] = mean ? acc / static_cast<double>(gm.groups[g].size()) : acc;
    }
    return out;
}

void write_mask_csv(std::ostream& os, const MaskScores& scores, const BinaryMask& mask, const GroupMap& gm) {
    os << "group_id,score,selected\n";
    char buf[64];
    for (std::size_t g = 0; g < gm.groups.size(); ++g) {
        const bool sel = !gm.groups[g].empty() && mask.bits[static_cast<std::size_t>(gm.groups[g][0])] != 0;
        std::snprintf(buf, sizeof buf, "%.17g", scores[g]);
        os << g << ',' << buf << ',' << (sel ? 1 : 0) << '\n';
    }
}

void apply_mask(ParamVector& theta, const BinaryMask& mask) {
    if (static_cast<std::int64_t>(theta.size()) != mask.size()) throw usage_error("apply_mask: length mismatch");
    for (std::size_t i = 0; i < theta.size(); ++i)
        if (!mask.bits[i]) theta[i] = 0.0;
}

}  // namespace bip

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bip/nn.hpp"

namespace bip {

// Pruning unit. element: one group per parameter. filter: one group per conv
// output channel (its [cin, k, k] slab); channel: one group per conv input
// channel (the [cout, k, k] cross-section). Biases and dense layers fall back
// to element groups in the structured modes.
enum class Granularity { element, filter, channel };

Granularity parse_granularity(const std::string& s);
std::string to_string(Granularity g);

// Partition of [0, n) into scoring groups. group_layer tags each group with
// the index of the layer it came from (for the optional per-layer budget).
struct GroupMap {
    std::int64_t n = 0;
    std::vector<std::vector<std::int64_t>> groups;
    std::vector<int> group_layer;

    std::int64_t group_count() const { return static_cast<std::int64_t>(groups.size()); }
};

// Retained counts for pruning ratio p: k parameters, k_g groups, both
// rounded from (1-p) and clamped to at least 1. per_layer switches the
// budget from a global top-k_g to round((1-p)*G_layer) within each layer.
struct SparsityTarget {
    double p = 0.0;
    std::int64_t k = 0;
    std::int64_t k_g = 0;
    bool per_layer = false;

    static SparsityTarget make(double p, std::int64_t n, std::int64_t groups, bool per_layer = false);
};

// Relaxed per-group scores in [0,1].
using MaskScores = std::vector<double>;

struct BinaryMask {
    std::vector<std::uint8_t> bits;
    std::int64_t retained = 0;

    std::int64_t size() const { return static_cast<std::int64_t>(bits.size()); }
};

GroupMap build_group_map(const Network& net, Granularity g);

// Top-k_g hard thresholding: the k_g groups with the largest scores are
// retained, ties broken by the lower group index.
BinaryMask project_topk(const MaskScores& scores, const SparsityTarget& target, const GroupMap& gm);

// Same budget applied within each layer separately (round((1-p)*G_layer)
// groups per layer, at least one).
BinaryMask project_topk_per_layer(const MaskScores& scores, const SparsityTarget& target, const GroupMap& gm);

// |a AND b| / |a OR b|; two all-zero masks compare equal (1.0).
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Per-group mean |theta|, normalized so the largest group score is 1. An
// all-zero theta yields all-zero scores.
MaskScores init_scores(std::span<const double> theta, const GroupMap& gm);

std::vector<double> expand_scores(const MaskScores& scores, const GroupMap& gm);
std::vector<double> reduce_to_groups(std::span<const double> per_param, const GroupMap& gm, bool mean);

void write_mask_csv(std::ostream& os, const MaskScores& scores, const BinaryMask& mask, const GroupMap& gm);

void apply_mask(ParamVector& theta, const BinaryMask& mask);

}  // namespace bip

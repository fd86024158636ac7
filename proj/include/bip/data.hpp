#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bip/tensor.hpp"

namespace bip {

struct Batch {
    Tensor x;
    std::vector<int> y;
    int size() const { return static_cast<int>(y.size()); }
};

struct Dataset {
    Tensor inputs;  // [N, D] or [N, C, H, W]
    std::vector<int> labels;
    int classes = 0;
    std::string split = "train";

    std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
    Batch gather(std::span<const int> idx) const;
};

struct DatasetPair {
    Dataset train;
    Dataset test;
};

// Gaussian class clusters placed on a circle of the given radius in the first
// two feature dimensions, unit noise everywhere. 80/20 train/test split,
// features standardized with train-split statistics.
DatasetPair make_blobs(int classes, int per_class, int dim, double separation, std::uint64_t seed);

// IDX (MNIST-style) ingestion. pool8 block-averages each image down to 8x8
// for the small conv model. Pixels are scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path, bool pool8 = false);

enum class BatchScheme { random, same, reverse };

BatchScheme parse_batch_scheme(const std::string& s);
std::string to_string(BatchScheme s);

// Deterministic two-stream batching. The lower stream (B1) is the epoch's
// seeded permutation chopped into batches; the upper stream (B2) depends on
// the scheme. Everything is a pure function of (seed, epoch, step), so there
// is no cursor state to save or restore.
class BatchScheduler {
public:
    BatchScheduler(const Dataset& ds, BatchScheme scheme, int batch_size, std::uint64_t seed);

    int batches_per_epoch() const { return batches_; }
    BatchScheme scheme() const { return scheme_; }

    std::pair<Batch, Batch> next_batches(int epoch, int step) const;

    // Fresh lower-level batches for multi-step inner loops: extra = 0 is B1
    // itself, extra = j is the epoch's batch at (step + j) mod batches.
    Batch lower_batch(int epoch, int step, int extra) const;

    std::vector<int> lower_indices(int epoch, int step) const;
    std::vector<int> upper_indices(int epoch, int step) const;

private:
    std::vector<int> perm(int epoch, int level) const;
    std::vector<int> slice(const std::vector<int>& p, int step) const;

    const Dataset* ds_;
    BatchScheme scheme_;
    int batch_size_;
    int batches_;
    std::uint64_t seed_;
};

}  // namespace bip

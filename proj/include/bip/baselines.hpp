#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bip/data.hpp"
#include "bip/masking.hpp"
#include "bip/nn.hpp"
#include "bip/optimizer.hpp"
#include "bip/record.hpp"
#include "bip/schedule.hpp"

namespace bip {

struct RetrainConfig {
    int epochs = 40;
    double lr = 0.1;
    LrSchedule schedule = LrSchedule::step;
    double weight_decay = 5e-4;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

struct ImpSchedule {
    double p = 0.9;          // final pruning ratio
    int rounds = 3;          // T
    int retrain_epochs = 0;  // per round; 0 means reuse the dense epoch count
    int rewind_epoch = -1;   // -1 means 10% of the dense epochs (at least 1)

    // per-round keep ratio r = (1-p)^(1/T)
    double keep_ratio() const;
};

struct DenseResult {
    ParamVector theta;
    std::vector<Snapshot> snapshots;  // epochs {0, rewind}
    RunRecord record;
};

struct PruneResult {
    BinaryMask mask;
    ParamVector theta;
    RunRecord record;
};

// Plain SGD with weight decay and cosine schedule by default. Snapshots are
// taken before the first update of epochs 0 and rewind_epoch.
DenseResult train_dense(const Network& net, const Dataset& train, const Dataset& test,
                        const RetrainConfig& cfg, const ParamVector& theta0, int rewind_epoch);

// Shared masked retraining loop: theta <- theta - lr*(m .* grad + wd*theta).
// Masked coordinates are zeroed first and stay exactly zero.
void retrain_masked(const Network& net, const Dataset& train, const Dataset& test,
                    const BinaryMask& mask, const RetrainConfig& cfg, ParamVector& theta,
                    RunRecord& rec, GradCounters& counters);

// Top groups by mean |theta|.
BinaryMask magnitude_mask(std::span<const double> theta, const SparsityTarget& target, const GroupMap& gm);

// One-shot magnitude pruning: mask from the trained dense weights, weights
// rewound to the early snapshot, single retraining pass with the mask frozen.
PruneResult omp_run(const Network& net, const Dataset& train, const Dataset& test,
                    const SparsityTarget& target, const GroupMap& gm, const RetrainConfig& retrain,
                    const ParamVector& theta_dense, const ParamVector& theta_rewind);

// Iterative magnitude pruning with geometric schedule and weight rewinding.
// Owns its own dense phase so the recorded cost covers the full pipeline.
PruneResult imp_run(const Network& net, const Dataset& train, const Dataset& test,
                    const GroupMap& gm, const ImpSchedule& sched, const RetrainConfig& dense_cfg,
                    const ParamVector& theta0);

BinaryMask random_mask(const SparsityTarget& target, const GroupMap& gm, std::uint64_t seed);

// Saliency |theta0 .* grad| at initialization, summed per group.
BinaryMask snip_mask(const Network& net, const ParamVector& theta0, const Batch& batch,
                     const SparsityTarget& target, const GroupMap& gm);

// Single-level mask optimization on frozen weights, then masked retraining.
PruneResult hydra_run(const Network& net, const Dataset& train, const Dataset& test,
                      const SparsityTarget& target, const GroupMap& gm, const BipConfig& mask_cfg,
                      const RetrainConfig& retrain, const ParamVector& theta_dense);

}  // namespace bip

#pragma once

#include <cstdint>
#include <span>

#include "bip/data.hpp"
#include "bip/masking.hpp"
#include "bip/nn.hpp"
#include "bip/record.hpp"

namespace bip {

struct BipConfig {
    double alpha = 0.01;  // lower-level (weight) learning rate
    double beta = 0.1;    // upper-level (score) learning rate
    double gamma = 1.0;   // convexification coefficient in the IG correction

    // Decay coefficient applied to theta inside the theta step. The formulas
    // reuse gamma here, but without normalization layers a coefficient of 1.0
    // shrinks the logits to the uniform-prediction fixed point on small dense
    // models, so the two are kept separate. Negative means "use gamma".
    double theta_decay = 0.1;

    int lower_steps = 1;  // SGD steps per iteration at the lower level
    int epochs = 30;
    int batch_size = 64;
    BatchScheme batch_scheme = BatchScheme::random;
    std::uint64_t seed = 0;

    double effective_theta_decay() const { return theta_decay < 0.0 ? gamma : theta_decay; }

    bool ig_free = false;            // drop the implicit-gradient correction (gamma -> inf)
    bool group_reduce_mean = false;  // mean instead of sum when collapsing to group scores
    bool ig_binary_mask = false;       // binary mask inside the correction term instead of the scores
    bool debug_checks = false;       // per-step algebraic decomposition assertion
};

struct GradCounters {
    std::int64_t theta = 0;
    std::int64_t mask = 0;
};

struct BipState {
    ParamVector theta;
    MaskScores scores;
    BinaryMask mask;
    std::int64_t iteration = 0;
    GradCounters counters;
    std::int64_t debug_checks_run = 0;
};

struct BipResult {
    BinaryMask mask;
    ParamVector theta;
    MaskScores scores;
    RunRecord record;
    std::int64_t debug_checks_run = 0;
};

// One lower-level SGD update: theta <- theta - alpha * (m .* g + gamma * theta),
// with g the loss gradient at z = m .* theta on the step's batch.
void theta_step_update(ParamVector& theta, const BinaryMask& mask, std::span<const double> g,
                       double alpha, double gamma);

// Gradient of the bilevel objective w.r.t. the mask, elementwise:
// (theta - (1/gamma) * m_ig .* g) .* g. m_ig is the relaxed score vector
// expanded to length n (or the binary mask in the main-text variant).
std::vector<double> objective_grad_m(std::span<const double> theta, std::span<const double> m_ig,
                                     std::span<const double> g, double gamma);

// The gamma -> inf limit: theta .* g (no implicit-gradient correction).
std::vector<double> objective_grad_m_ig_free(std::span<const double> theta, std::span<const double> g);

// One upper-level projected step: evaluates the gradient at
// z = m^(t-1) .* theta^(t), updates the relaxed scores, clamps to [0,1],
// re-projects the binary mask.
void m_step(BipState& state, const Network& net, const Batch& batch, double beta_t,
            const SparsityTarget& target, const GroupMap& gm, const BipConfig& cfg);

// Full alternating loop. theta0 is expected to come from dense pretraining;
// scores start from init_scores(theta0).
BipResult bip_train(const Network& net, const Dataset& train, const Dataset& test,
                    const SparsityTarget& target, const GroupMap& gm, const BipConfig& cfg,
                    const ParamVector& theta0);

}  // namespace bip

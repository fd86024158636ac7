#include "bip/optimizer.hpp"

#include <cmath>

#include "bip/errors.hpp"
#include "bip/schedule.hpp"

namespace bip {

void theta_step_update(ParamVector& theta, const BinaryMask& mask, std::span<const double> g,
                       double alpha, double gamma) {
    if (theta.size() != g.size() || static_cast<std::int64_t>(theta.size()) != mask.size()) {
        throw usage_error("theta_step: length mismatch");
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double masked_g = mask.bits[i] ? g[i] : 0.0;
        theta[i] -= alpha * (masked_g + gamma * theta[i]);
    }
}

std::vector<double> objective_grad_m(std::span<const double> theta, std::span<const double> m_ig,
                                     std::span<const double> g, double gamma) {
    if (gamma <= 0.0) throw config_error("objective_grad_m: gamma must be positive");
    if (theta.size() != g.size() || m_ig.size() != g.size()) {
        throw usage_error("objective_grad_m: length mismatch");
    }
    std::vector<double> out(theta.size());
    const double inv = 1.0 / gamma;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (theta[i] - inv * m_ig[i] * g[i]) * g[i];
    }
    return out;
}

std::vector<double> objective_grad_m_ig_free(std::span<const double> theta, std::span<const double> g) {
    if (theta.size() != g.size()) throw usage_error("objective_grad_m: length mismatch");
    std::vector<double> out(theta.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = theta[i] * g[i];
    return out;
}

namespace {

void validate(const BipConfig& cfg) {
    if (cfg.alpha <= 0.0) throw config_error("bip: alpha must be positive");
    if (cfg.beta <= 0.0) throw config_error("bip: beta must be positive");
    if (cfg.gamma <= 0.0) throw config_error("bip: gamma must be positive");
    if (cfg.lower_steps < 1) throw config_error("bip: lower_steps must be >= 1");
    if (cfg.epochs < 1) throw config_error("bip: epochs must be >= 1");
}

// The full update and the ig-free update differ by exactly (1/gamma)(m.*g).*g;
// recompute both routes and compare.
void check_decomposition(const BipState& state, std::span<const double> full,
                         std::span<const double> m_ig, std::span<const double> g, double gamma) {
    double scale = 1e-30;
    for (std::size_t i = 0; i < full.size(); ++i) scale = std::max(scale, std::abs(full[i]));
    const double inv = 1.0 / gamma;
    for (std::size_t i = 0; i < full.size(); ++i) {
        const double free_route = state.theta[i] * g[i];
        const double correction = inv * (m_ig[i] * g[i]) * g[i];
        if (std::abs(free_route - full[i] - correction) > 1e-9 * std::max(1.0, scale)) {
            throw numeric_error("bip: IG decomposition check failed at coordinate " + std::to_string(i));
        }
    }
}

}  // namespace

void m_step(BipState& state, const Network& net, const Batch& batch, double beta_t,
            const SparsityTarget& target, const GroupMap& gm, const BipConfig& cfg) {
    // z^(t+1/2) = m^(t-1) .* theta^(t)
    ParamVector z = state.theta;
    apply_mask(z, state.mask);
    const ParamVector g = net.grad_z(z, batch);
    ++state.counters.mask;

    std::vector<double> per_param;
    if (cfg.ig_free) {
        per_param = objective_grad_m_ig_free(state.theta, g);
        if (cfg.debug_checks) {
            const auto again = objective_grad_m_ig_free(state.theta, g);
            for (std::size_t i = 0; i < per_param.size(); ++i) {
                if (again[i] != per_param[i]) throw numeric_error("bip: ig-free update not reproducible");
            }
            ++state.debug_checks_run;
        }
    } else {
        std::vector<double> m_ig;
        if (cfg.ig_binary_mask) {
            m_ig.assign(state.mask.bits.begin(), state.mask.bits.end());
        } else {
            m_ig = expand_scores(state.scores, gm);
        }
        per_param = objective_grad_m(state.theta, m_ig, g, cfg.gamma);
        if (cfg.debug_checks) {
            check_decomposition(state, per_param, m_ig, g, cfg.gamma);
            ++state.debug_checks_run;
        }
    }

    const std::vector<double> group_grad = reduce_to_groups(per_param, gm, cfg.group_reduce_mean);
    for (std::size_t gi = 0; gi < state.scores.size(); ++gi) {
        double v = state.scores[gi] - beta_t * group_grad[gi];
        state.scores[gi] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    state.mask = project_topk(state.scores, target, gm);
}

BipResult bip_train(const Network& net, const Dataset& train, const Dataset& test,
                    const SparsityTarget& target, const GroupMap& gm, const BipConfig& cfg,
                    const ParamVector& theta0) {
    validate(cfg);
    if (static_cast<std::int64_t>(theta0.size()) != net.num_params()) {
        throw config_error("bip: theta0 length != model parameter count");
    }
    BatchScheduler sched(train, cfg.batch_scheme, cfg.batch_size, cfg.seed);
    if (cfg.batch_scheme == BatchScheme::random && sched.batches_per_epoch() < 2) {
        throw config_error("bip: random batch scheme needs at least 2 batches per epoch");
    }

    BipState state;
    state.theta = theta0;
    state.scores = init_scores(theta0, gm);
    state.mask = project_topk(state.scores, target, gm);

    RunRecord rec;
    rec.method = "bip";
    rec.seed = cfg.seed;
    rec.target_sparsity = target.p;

    const int B = sched.batches_per_epoch();
    const double decay = cfg.effective_theta_decay();
    BinaryMask prev_mask = state.mask;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double alpha_t = cosine_lr(cfg.alpha, epoch, cfg.epochs);
        const double beta_t = cosine_lr(cfg.beta, epoch, cfg.epochs);
        double loss_sum = 0.0;
        std::int64_t loss_count = 0;
        for (int step = 0; step < B; ++step) {
            for (int j = 0; j < cfg.lower_steps; ++j) {
                const Batch b1 = sched.lower_batch(epoch, step, j);
                ParamVector z = state.theta;
                apply_mask(z, state.mask);
                double loss = 0.0;
                const ParamVector g = net.grad_z(z, b1, &loss);
                ++state.counters.theta;
                loss_sum += loss;
                ++loss_count;
                theta_step_update(state.theta, state.mask, g, alpha_t, decay);
            }
            const Batch b2 = train.gather(sched.upper_indices(epoch, step));
            m_step(state, net, b2, beta_t, target, gm, cfg);
            ++state.iteration;
        }
        EpochRow row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(loss_count);
        ParamVector z = state.theta;
        apply_mask(z, state.mask);
        row.test_acc = net.accuracy(z, test);
        row.sparsity = 1.0 - static_cast<double>(state.mask.retained) / static_cast<double>(gm.n);
        row.mask_iou = mask_iou(prev_mask, state.mask);
        row.theta_grad_evals = state.counters.theta;
        row.m_grad_evals = state.counters.mask;
        rec.rows.push_back(row);
        prev_mask = state.mask;
    }

    BipResult res;
    res.mask = state.mask;
    res.theta = state.theta;
    apply_mask(res.theta, res.mask);
    res.scores = state.scores;
    res.debug_checks_run = state.debug_checks_run;
    rec.final_test_acc = rec.rows.back().test_acc;
    rec.realized_sparsity = rec.rows.back().sparsity;
    rec.theta_grad_evals = state.counters.theta;
    rec.m_grad_evals = state.counters.mask;
    res.record = std::move(rec);
    return res;
}

}  // namespace bip

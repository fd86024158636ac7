#include "bip/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace bip {

double ImpSchedule::keep_ratio() const { return std::pow(1.0 - p, 1.0 / rounds); }

namespace {

void check_divergence(double loss) {
    if (!std::isfinite(loss) || loss > 1e3) {
        throw numeric_error("training diverged (loss " + std::to_string(loss) + ")");
    }
}

BinaryMask all_ones(std::int64_t n) {
    BinaryMask m;
    m.bits.assign(static_cast<std::size_t>(n), 1);
    m.retained = n;
    return m;
}

}  // namespace

DenseResult train_dense(const Network& net, const Dataset& train, const Dataset& test,
                        const RetrainConfig& cfg, const ParamVector& theta0, int rewind_epoch) {
    if (cfg.epochs < 1) throw config_error("dense training: epochs must be >= 1");
    BatchScheduler sched(train, BatchScheme::same, cfg.batch_size, cfg.seed);
    DenseResult res;
    res.theta = theta0;
    res.record.method = "dense";
    res.record.seed = cfg.seed;
    res.record.target_sparsity = 0.0;

    GradCounters counters;
    const int B = sched.batches_per_epoch();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (epoch == 0 || epoch == rewind_epoch) {
            res.snapshots.push_back(Snapshot{epoch, res.theta, cfg.seed});
        }
        const double lr = scheduled_lr(LrSchedule::cosine, cfg.lr, epoch, cfg.epochs);
        double loss_sum = 0.0;
        for (int step = 0; step < B; ++step) {
            const Batch b = train.gather(sched.lower_indices(epoch, step));
            double loss = 0.0;
            const ParamVector g = net.grad_z(res.theta, b, &loss);
            ++counters.theta;
            check_divergence(loss);
            loss_sum += loss;
            for (std::size_t i = 0; i < res.theta.size(); ++i) {
                res.theta[i] -= lr * (g[i] + cfg.weight_decay * res.theta[i]);
            }
        }
        EpochRow row;
        row.epoch = epoch;
        row.train_loss = loss_sum / B;
        row.test_acc = net.accuracy(res.theta, test);
        row.sparsity = 0.0;
        row.mask_iou = 1.0;
        row.theta_grad_evals = counters.theta;
        row.m_grad_evals = 0;
        res.record.rows.push_back(row);
    }
    res.record.final_test_acc = res.record.rows.back().test_acc;
    res.record.realized_sparsity = 0.0;
    res.record.theta_grad_evals = counters.theta;
    return res;
}

void retrain_masked(const Network& net, const Dataset& train, const Dataset& test,
                    const BinaryMask& mask, const RetrainConfig& cfg, ParamVector& theta,
                    RunRecord& rec, GradCounters& counters) {
    apply_mask(theta, mask);
    BatchScheduler sched(train, BatchScheme::same, cfg.batch_size, mix64(cfg.seed, 0x7e7a));
    const int B = sched.batches_per_epoch();
    const double sparsity = 1.0 - static_cast<double>(mask.retained) / static_cast<double>(mask.size());
    const int epoch_base = rec.rows.empty() ? 0 : rec.rows.back().epoch + 1;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = scheduled_lr(cfg.schedule, cfg.lr, epoch, cfg.epochs);
        double loss_sum = 0.0;
        for (int step = 0; step < B; ++step) {
            const Batch b = train.gather(sched.lower_indices(epoch, step));
            double loss = 0.0;
            const ParamVector g = net.grad_z(theta, b, &loss);
            ++counters.theta;
            check_divergence(loss);
            loss_sum += loss;
            for (std::size_t i = 0; i < theta.size(); ++i) {
                const double mg = mask.bits[i] ? g[i] : 0.0;
                theta[i] -= lr * (mg + cfg.weight_decay * theta[i]);
            }
        }
        EpochRow row;
        row.epoch = epoch_base + epoch;
        row.train_loss = loss_sum / B;
        row.test_acc = net.accuracy(theta, test);
        row.sparsity = sparsity;
        row.mask_iou = 1.0;
        row.theta_grad_evals = counters.theta;
        row.m_grad_evals = counters.mask;
        rec.rows.push_back(row);
    }
}

BinaryMask magnitude_mask(std::span<const double> theta, const SparsityTarget& target, const GroupMap& gm) {
    MaskScores scores(gm.groups.size(), 0.0);
    for (std::size_t g = 0; g < gm.groups.size(); ++g) {
        double acc = 0.0;
        for (std::int64_t i : gm.groups[g]) acc += std::abs(theta[static_cast<std::size_t>(i)]);
        scores[g] = acc / static_cast<double>(gm.groups[g].size());
    }
    return project_topk(scores, target, gm);
}

PruneResult omp_run(const Network& net, const Dataset& train, const Dataset& test,
                    const SparsityTarget& target, const GroupMap& gm, const RetrainConfig& retrain,
                    const ParamVector& theta_dense, const ParamVector& theta_rewind) {
    PruneResult res;
    res.mask = magnitude_mask(theta_dense, target, gm);
    res.theta = theta_rewind;
    res.record.method = "omp";
    res.record.seed = retrain.seed;
    res.record.target_sparsity = target.p;
    GradCounters counters;
    retrain_masked(net, train, test, res.mask, retrain, res.theta, res.record, counters);
    res.record.final_test_acc = res.record.rows.back().test_acc;
    res.record.realized_sparsity = res.record.rows.back().sparsity;
    res.record.theta_grad_evals = counters.theta;
    res.record.m_grad_evals = counters.mask;
    return res;
}

PruneResult imp_run(const Network& net, const Dataset& train, const Dataset& test,
                    const GroupMap& gm, const ImpSchedule& sched, const RetrainConfig& dense_cfg,
                    const ParamVector& theta0) {
    if (sched.rounds < 1) throw config_error("imp: rounds must be >= 1");
    const int rewind = sched.rewind_epoch >= 0 ? sched.rewind_epoch
                                               : std::max(1, dense_cfg.epochs / 10);
    if (rewind >= dense_cfg.epochs) throw config_error("imp: rewind epoch beyond dense training");

    const SparsityTarget final_target = SparsityTarget::make(sched.p, gm.n, gm.group_count());
    const double r = sched.keep_ratio();
    const std::int64_t G = gm.group_count();

    // per-round retained group counts, non-increasing, ending exactly at k_g
    std::vector<std::int64_t> ks;
    std::int64_t prev = G;
    for (int t = 1; t <= sched.rounds; ++t) {
        std::int64_t k = std::llround(std::pow(r, t) * static_cast<double>(G));
        if (t == sched.rounds) k = final_target.k_g;
        k = std::min(k, prev);
        k = std::max(k, final_target.k_g);
        if (k <= 0) throw config_error("imp: schedule reaches zero retained groups at round " + std::to_string(t));
        ks.push_back(k);
        prev = k;
    }

    DenseResult dense = train_dense(net, train, test, dense_cfg, theta0, rewind);
    const ParamVector theta_rewind = dense.snapshots.back().params;

    PruneResult res;
    res.record = dense.record;
    res.record.method = "imp";
    res.record.target_sparsity = sched.p;
    res.record.rounds = sched.rounds;
    res.theta = dense.theta;
    res.mask = all_ones(gm.n);

    GradCounters counters;
    counters.theta = dense.record.theta_grad_evals;

    RetrainConfig round_cfg = dense_cfg;
    round_cfg.epochs = sched.retrain_epochs > 0 ? sched.retrain_epochs : dense_cfg.epochs;
    round_cfg.schedule = LrSchedule::step;

    for (int t = 0; t < sched.rounds; ++t) {
        // rank surviving groups by magnitude; pruned groups stay pruned
        MaskScores scores(gm.groups.size(), -1.0);
        for (std::size_t g = 0; g < gm.groups.size(); ++g) {
            if (!res.mask.bits[static_cast<std::size_t>(gm.groups[g][0])]) continue;
            double acc = 0.0;
            for (std::int64_t i : gm.groups[g]) acc += std::abs(res.theta[static_cast<std::size_t>(i)]);
            scores[g] = acc / static_cast<double>(gm.groups[g].size());
        }
        SparsityTarget round_target = final_target;
        round_target.k_g = ks[static_cast<std::size_t>(t)];
        res.mask = project_topk(scores, round_target, gm);
        res.theta = theta_rewind;
        retrain_masked(net, train, test, res.mask, round_cfg, res.theta, res.record, counters);
    }
    res.record.final_test_acc = res.record.rows.back().test_acc;
    res.record.realized_sparsity =
        1.0 - static_cast<double>(res.mask.retained) / static_cast<double>(gm.n);
    res.record.theta_grad_evals = counters.theta;
    res.record.m_grad_evals = counters.mask;
    return res;
}

BinaryMask random_mask(const SparsityTarget& target, const GroupMap& gm, std::uint64_t seed) {
    std::vector<std::int64_t> order(static_cast<std::size_t>(gm.group_count()));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix64(seed, 0xa5c3d));
    rng.shuffle(order);
    MaskScores scores(order.size(), 0.0);
    for (std::int64_t i = 0; i < target.k_g; ++i) scores[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1.0;
    return project_topk(scores, target, gm);
}

BinaryMask snip_mask(const Network& net, const ParamVector& theta0, const Batch& batch,
                     const SparsityTarget& target, const GroupMap& gm) {
    const ParamVector g = net.grad_z(theta0, batch);
    std::vector<double> saliency(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) saliency[i] = std::abs(theta0[i] * g[i]);
    const MaskScores scores = reduce_to_groups(saliency, gm, /*mean=*/false);
    return project_topk(scores, target, gm);
}

PruneResult hydra_run(const Network& net, const Dataset& train, const Dataset& test,
                      const SparsityTarget& target, const GroupMap& gm, const BipConfig& mask_cfg,
                      const RetrainConfig& retrain, const ParamVector& theta_dense) {
    PruneResult res;
    res.record.method = "hydra";
    res.record.seed = mask_cfg.seed;
    res.record.target_sparsity = target.p;

    MaskScores scores = init_scores(theta_dense, gm);
    res.mask = project_topk(scores, target, gm);
    GradCounters counters;

    // phase 1: optimize the scores on frozen weights
    if (mask_cfg.epochs > 0) {
        BatchScheduler sched(train, BatchScheme::same, mask_cfg.batch_size, mask_cfg.seed);
        const int B = sched.batches_per_epoch();
        for (int epoch = 0; epoch < mask_cfg.epochs; ++epoch) {
            const double beta_t = cosine_lr(mask_cfg.beta, epoch, mask_cfg.epochs);
            double loss_sum = 0.0;
            for (int step = 0; step < B; ++step) {
                const Batch b = train.gather(sched.lower_indices(epoch, step));
                ParamVector z = theta_dense;
                apply_mask(z, res.mask);
                double loss = 0.0;
                const ParamVector g = net.grad_z(z, b, &loss);
                ++counters.mask;
                loss_sum += loss;
                const auto per_param = objective_grad_m_ig_free(theta_dense, g);
                const auto group_grad = reduce_to_groups(per_param, gm, mask_cfg.group_reduce_mean);
                for (std::size_t gi = 0; gi < scores.size(); ++gi) {
                    double v = scores[gi] - beta_t * group_grad[gi];
                    scores[gi] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                }
                res.mask = project_topk(scores, target, gm);
            }
            EpochRow row;
            row.epoch = epoch;
            row.train_loss = loss_sum / B;
            ParamVector z = theta_dense;
            apply_mask(z, res.mask);
            row.test_acc = net.accuracy(z, test);
            row.sparsity = 1.0 - static_cast<double>(res.mask.retained) / static_cast<double>(gm.n);
            row.theta_grad_evals = counters.theta;
            row.m_grad_evals = counters.mask;
            res.record.rows.push_back(row);
        }
    }

    // phase 2: masked retraining from the dense weights
    res.theta = theta_dense;
    retrain_masked(net, train, test, res.mask, retrain, res.theta, res.record, counters);
    res.record.final_test_acc = res.record.rows.back().test_acc;
    res.record.realized_sparsity = res.record.rows.back().sparsity;
    res.record.theta_grad_evals = counters.theta;
    res.record.m_grad_evals = counters.mask;
    return res;
}

}  // namespace bip

#include "doctest.h"

#include <cmath>
#include <numeric>

#include "bip/baselines.hpp"
#include "bip/data.hpp"
#include "bip/errors.hpp"
#include "bip/rng.hpp"

using namespace bip;

namespace {

struct Bench {
    DatasetPair data = make_blobs(4, 100, 10, 6.0, 7);
    Network net = Network::mlp_small(10, 4);
    GroupMap gm = build_group_map(net, Granularity::element);
};

const Bench& bench() {
    static Bench b;
    return b;
}

}  // namespace

TEST_CASE("dense training on separable blobs reaches 0.95 (5 seeds)") {
    const Bench& b = bench();
    double mean = 0.0;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        RetrainConfig cfg{50, 0.1, LrSchedule::cosine, 5e-4, 64, seed};
        const DenseResult res = train_dense(b.net, b.data.train, b.data.test, cfg, b.net.init_params(seed), 5);
        mean += res.record.final_test_acc / 5;
        CHECK(res.snapshots.size() == 2);
        CHECK(res.snapshots[0].epoch == 0);
        CHECK(res.snapshots[0].params == b.net.init_params(seed));  // epoch-0 snapshot is theta0
        CHECK(res.snapshots[1].epoch == 5);
    }
    CHECK(mean >= 0.95);
}

TEST_CASE("overlapping dense runs: zero learning rate leaves theta unchanged") {
    const Bench& b = bench();
    RetrainConfig cfg{3, 0.0, LrSchedule::cosine, 0.0, 64, 1};
    const ParamVector theta0 = b.net.init_params(9);
    const DenseResult res = train_dense(b.net, b.data.train, b.data.test, cfg, theta0, 1);
    CHECK(res.theta == theta0);
}

TEST_CASE("zero-separation blobs cannot be learned past the Bayes floor") {
    const DatasetPair noise = make_blobs(4, 50, 6, 0.0, 13);
    const Network net = Network::mlp_small(6, 4);
    double mean = 0.0;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        RetrainConfig cfg{15, 0.1, LrSchedule::cosine, 5e-4, 64, seed};
        const DenseResult res = train_dense(net, noise.train, noise.test, cfg, net.init_params(seed), 1);
        mean += res.record.final_test_acc / 5;
    }
    CHECK(mean <= 0.25 + 0.1);
}

TEST_CASE("dense loss on separable blobs drops under 0.1 within 200 steps") {
    const Bench& b = bench();
    RetrainConfig cfg{40, 0.1, LrSchedule::cosine, 0.0, 64, 3};  // 5 batches/epoch -> 200 steps
    const DenseResult res = train_dense(b.net, b.data.train, b.data.test, cfg, b.net.init_params(3), 4);
    CHECK(res.record.rows.back().train_loss < 0.1);
}

TEST_CASE("snapshot restore replays the identical trajectory") {
    const Bench& b = bench();
    RetrainConfig cfg{8, 0.1, LrSchedule::cosine, 5e-4, 64, 21};
    const ParamVector theta0 = b.net.init_params(21);
    const DenseResult full = train_dense(b.net, b.data.train, b.data.test, cfg, theta0, 3);

    // restart from the rewind snapshot; the batch stream is a pure function
    // of (seed, epoch), so replaying epochs 3..7 must reproduce run one
    ParamVector theta = full.snapshots[1].params;
    BatchScheduler sched(b.data.train, BatchScheme::same, cfg.batch_size, cfg.seed);
    for (int epoch = 3; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
        for (int step = 0; step < sched.batches_per_epoch(); ++step) {
            const Batch batch = b.data.train.gather(sched.lower_indices(epoch, step));
            const ParamVector g = b.net.grad_z(theta, batch);
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * (g[i] + cfg.weight_decay * theta[i]);
        }
    }
    CHECK(theta == full.theta);
}

TEST_CASE("magnitude mask") {
    GroupMap gm;
    gm.n = 3;
    gm.groups = {{0}, {1}, {2}};
    gm.group_layer = {0, 0, 0};

    SUBCASE("selects the largest magnitudes") {
        const std::vector<double> theta = {3.0, -5.0, 1.0};
        const auto mask = magnitude_mask(theta, SparsityTarget::make(1.0 / 3, 3, 3), gm);
        CHECK(mask.bits == std::vector<std::uint8_t>{1, 1, 0});
    }

    SUBCASE("positive scaling does not change the mask") {
        Rng rng(2);
        std::vector<double> theta(20);
        for (double& v : theta) v = rng.gauss();
        GroupMap g20;
        g20.n = 20;
        for (std::int64_t i = 0; i < 20; ++i) {
            g20.groups.push_back({i});
            g20.group_layer.push_back(0);
        }
        const auto t = SparsityTarget::make(0.6, 20, 20);
        const auto base = magnitude_mask(theta, t, g20);
        for (double& v : theta) v *= 17.5;
        CHECK(magnitude_mask(theta, t, g20).bits == base.bits);
    }

    SUBCASE("all-equal magnitudes keep the lowest indices") {
        const std::vector<double> theta = {2.0, -2.0, 2.0};
        auto t = SparsityTarget::make(0.5, 3, 3);
        CHECK(t.k_g == 2);
        const auto mask = magnitude_mask(theta, t, gm);
        CHECK(mask.bits == std::vector<std::uint8_t>{1, 1, 0});
    }
}

TEST_CASE("omp") {
    const Bench& b = bench();
    RetrainConfig dense_cfg{20, 0.1, LrSchedule::cosine, 5e-4, 64, 2};
    const DenseResult dres = train_dense(b.net, b.data.train, b.data.test, dense_cfg, b.net.init_params(2), 2);
    RetrainConfig retrain{10, 0.1, LrSchedule::step, 5e-4, 64, 2};

    SUBCASE("p = 0 keeps every weight and fine-tunes") {
        const auto target = SparsityTarget::make(0.0, b.gm.n, b.gm.group_count());
        const PruneResult res = omp_run(b.net, b.data.train, b.data.test, target, b.gm, retrain,
                                        dres.theta, dres.snapshots.back().params);
        CHECK(res.mask.retained == b.gm.n);
        CHECK(res.record.realized_sparsity == 0.0);
    }

    SUBCASE("masked weights stay exactly zero through retraining") {
        const auto target = SparsityTarget::make(0.7, b.gm.n, b.gm.group_count());
        const PruneResult res = omp_run(b.net, b.data.train, b.data.test, target, b.gm, retrain,
                                        dres.theta, dres.snapshots.back().params);
        for (std::size_t i = 0; i < res.theta.size(); ++i) {
            if (!res.mask.bits[i]) CHECK(res.theta[i] == 0.0);
        }
        CHECK(res.record.theta_grad_evals == 10 * 5);  // epochs x batches, retrain only
    }

    SUBCASE("p = 0.5 stays within 2% of dense (5-seed mean)") {
        double dense_mean = 0.0, sparse_mean = 0.0;
        const auto target = SparsityTarget::make(0.5, b.gm.n, b.gm.group_count());
        for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
            RetrainConfig dc{50, 0.1, LrSchedule::cosine, 5e-4, 64, seed};
            const DenseResult dr = train_dense(b.net, b.data.train, b.data.test, dc, b.net.init_params(seed), 5);
            dense_mean += dr.record.final_test_acc / 5;
            RetrainConfig rc{40, 0.1, LrSchedule::step, 5e-4, 64, seed};
            const PruneResult pr = omp_run(b.net, b.data.train, b.data.test, target, b.gm, rc,
                                           dr.theta, dr.snapshots.back().params);
            sparse_mean += pr.record.final_test_acc / 5;
        }
        CHECK(sparse_mean >= dense_mean - 0.02);
    }
}

TEST_CASE("imp") {
    const Bench& b = bench();

    SUBCASE("per-round keep ratio and retained fractions for p=0.9, T=3") {
        ImpSchedule sched;
        sched.p = 0.9;
        sched.rounds = 3;
        CHECK(sched.keep_ratio() == doctest::Approx(std::pow(0.1, 1.0 / 3)));
        CHECK(std::pow(sched.keep_ratio(), 1) == doctest::Approx(0.464).epsilon(0.01));
        CHECK(std::pow(sched.keep_ratio(), 2) == doctest::Approx(0.215).epsilon(0.01));
        CHECK(std::pow(sched.keep_ratio(), 3) == doctest::Approx(0.100).epsilon(0.01));
    }

    SUBCASE("T=1 reproduces the omp mask") {
        RetrainConfig dense_cfg{20, 0.1, LrSchedule::cosine, 5e-4, 64, 4};
        const ParamVector theta0 = b.net.init_params(4);
        const DenseResult dres = train_dense(b.net, b.data.train, b.data.test, dense_cfg, theta0, 2);
        const auto target = SparsityTarget::make(0.8, b.gm.n, b.gm.group_count());
        const auto omp_mask = magnitude_mask(dres.theta, target, b.gm);

        ImpSchedule sched;
        sched.p = 0.8;
        sched.rounds = 1;
        sched.retrain_epochs = 5;
        sched.rewind_epoch = 2;
        const PruneResult res = imp_run(b.net, b.data.train, b.data.test, b.gm, sched, dense_cfg, theta0);
        CHECK(res.mask.bits == omp_mask.bits);
    }

    SUBCASE("cost grows linearly with rounds and final sparsity is exact") {
        RetrainConfig dense_cfg{10, 0.1, LrSchedule::cosine, 5e-4, 64, 6};
        const ParamVector theta0 = b.net.init_params(6);
        std::vector<std::int64_t> evals;
        for (int rounds : {1, 2, 4}) {
            ImpSchedule sched;
            sched.p = 0.9;
            sched.rounds = rounds;
            sched.retrain_epochs = 5;
            sched.rewind_epoch = 1;
            const PruneResult res = imp_run(b.net, b.data.train, b.data.test, b.gm, sched, dense_cfg, theta0);
            evals.push_back(res.record.theta_grad_evals);
            const auto target = SparsityTarget::make(0.9, b.gm.n, b.gm.group_count());
            CHECK(res.mask.retained == target.k);
            CHECK(res.record.rounds == rounds);
            // accounting: batches * (dense_epochs + T * retrain_epochs)
            CHECK(res.record.theta_grad_evals == 5 * (10 + rounds * 5));
        }
        CHECK(evals[1] - evals[0] == 25);
        CHECK(evals[2] - evals[1] == 50);
    }

    SUBCASE("successive rounds only prune, never revive") {
        RetrainConfig dense_cfg{10, 0.1, LrSchedule::cosine, 5e-4, 64, 8};
        ImpSchedule sched;
        sched.p = 0.75;
        sched.rounds = 2;
        sched.retrain_epochs = 4;
        sched.rewind_epoch = 1;
        // run the two-round pipeline, then check the one-round p for nesting
        const PruneResult two = imp_run(b.net, b.data.train, b.data.test, b.gm, sched, dense_cfg,
                                        b.net.init_params(8));
        ImpSchedule first = sched;
        first.p = 1.0 - std::pow(1.0 - sched.p, 0.5);
        first.rounds = 1;
        const PruneResult one = imp_run(b.net, b.data.train, b.data.test, b.gm, first, dense_cfg,
                                        b.net.init_params(8));
        for (std::size_t i = 0; i < two.mask.bits.size(); ++i) {
            if (two.mask.bits[i]) CHECK(one.mask.bits[i] == 1);
        }
    }

    SUBCASE("schedule that reaches zero groups is rejected") {
        GroupMap tiny;
        tiny.n = 4;
        tiny.groups = {{0}, {1}, {2}, {3}};
        tiny.group_layer = {0, 0, 0, 0};
        ImpSchedule sched;
        sched.p = 0.99;
        sched.rounds = 4;
        sched.retrain_epochs = 1;
        sched.rewind_epoch = 1;
        RetrainConfig dense_cfg{4, 0.1, LrSchedule::cosine, 5e-4, 64, 1};
        const Network tiny_net = Network::mlp_tiny();
        // mlp-tiny has 42 params; use its own group map but force absurd sparsity
        // by overriding k via p; k_g clamps to 1 so rounds cannot hit zero here,
        // hence craft the failing case through the tiny 4-group map directly
        CHECK_THROWS_AS(imp_run(tiny_net, b.data.train, b.data.test, tiny, sched, dense_cfg,
                                tiny_net.init_params(1)),
                        std::exception);
    }
}

TEST_CASE("divergent dense training aborts with a numeric error") {
    const Bench& b = bench();
    RetrainConfig cfg{5, 5e3, LrSchedule::cosine, 0.0, 64, 1};
    CHECK_THROWS_AS(train_dense(b.net, b.data.train, b.data.test, cfg, b.net.init_params(1), 1),
                    numeric_error);
}

TEST_CASE("imp is bit-reproducible for fixed seeds") {
    const Bench& b = bench();
    ImpSchedule sched;
    sched.p = 0.8;
    sched.rounds = 2;
    sched.retrain_epochs = 3;
    sched.rewind_epoch = 1;
    RetrainConfig dense_cfg{6, 0.1, LrSchedule::cosine, 5e-4, 64, 5};
    const PruneResult a = imp_run(b.net, b.data.train, b.data.test, b.gm, sched, dense_cfg, b.net.init_params(5));
    const PruneResult c = imp_run(b.net, b.data.train, b.data.test, b.gm, sched, dense_cfg, b.net.init_params(5));
    CHECK(a.theta == c.theta);
    CHECK(a.mask.bits == c.mask.bits);
    CHECK(a.record.final_test_acc == c.record.final_test_acc);
}

TEST_CASE("random mask") {
    GroupMap gm;
    gm.n = 100;
    for (std::int64_t i = 0; i < 100; ++i) {
        gm.groups.push_back({i});
        gm.group_layer.push_back(0);
    }
    const auto target = SparsityTarget::make(0.5, 100, 100);
    const auto a = random_mask(target, gm, 1);
    const auto b = random_mask(target, gm, 2);
    CHECK(a.retained == 50);
    CHECK(b.retained == 50);
    CHECK(a.bits != b.bits);
    CHECK(random_mask(target, gm, 1).bits == a.bits);
    const auto full = random_mask(SparsityTarget::make(0.0, 100, 100), gm, 3);
    CHECK(full.retained == 100);
}

TEST_CASE("snip saliency") {
    const Bench& b = bench();
    const auto target = SparsityTarget::make(0.5, b.gm.n, b.gm.group_count());

    SUBCASE("zero gradient falls back to the index tie rule") {
        // theta0 = 0 gives zero saliency everywhere
        const ParamVector theta0(static_cast<std::size_t>(b.net.num_params()), 0.0);
        std::vector<int> idx(32);
        std::iota(idx.begin(), idx.end(), 0);
        const auto mask = snip_mask(b.net, theta0, b.data.train.gather(idx), target, b.gm);
        CHECK(mask.retained == target.k);
        for (std::int64_t i = 0; i < target.k; ++i) CHECK(mask.bits[static_cast<std::size_t>(i)] == 1);
    }

    SUBCASE("doubling a weight raises its saliency rank for equal gradients") {
        // direct check on the scoring rule through a crafted gradient
        const std::vector<double> theta = {1.0, 2.0, 1.0};
        const std::vector<double> g = {0.5, 0.5, 0.25};
        std::vector<double> sal(3);
        for (int i = 0; i < 3; ++i) sal[static_cast<std::size_t>(i)] = std::abs(theta[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)]);
        CHECK(sal[1] > sal[0]);
        CHECK(sal[0] > sal[2]);
    }

    SUBCASE("snip beats random after retraining (5-seed mean)") {
        double snip_mean = 0.0, rand_mean = 0.0;
        for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
            const ParamVector theta0 = b.net.init_params(seed);
            std::vector<int> idx(64);
            std::iota(idx.begin(), idx.end(), 0);
            RetrainConfig rc{30, 0.1, LrSchedule::step, 5e-4, 64, seed};

            const auto smask = snip_mask(b.net, theta0, b.data.train.gather(idx), target, b.gm);
            ParamVector st = theta0;
            RunRecord srec;
            GradCounters sc;
            retrain_masked(b.net, b.data.train, b.data.test, smask, rc, st, srec, sc);
            snip_mean += srec.rows.back().test_acc / 5;

            const auto rmask = random_mask(target, b.gm, seed);
            ParamVector rt = theta0;
            RunRecord rrec;
            GradCounters rcnt;
            retrain_masked(b.net, b.data.train, b.data.test, rmask, rc, rt, rrec, rcnt);
            rand_mean += rrec.rows.back().test_acc / 5;
        }
        CHECK(snip_mean >= rand_mean);
    }
}

TEST_CASE("hydra") {
    const Bench& b = bench();
    RetrainConfig dense_cfg{20, 0.1, LrSchedule::cosine, 5e-4, 64, 12};
    const DenseResult dres = train_dense(b.net, b.data.train, b.data.test, dense_cfg, b.net.init_params(12), 2);
    const auto target = SparsityTarget::make(0.8, b.gm.n, b.gm.group_count());
    RetrainConfig retrain{8, 0.1, LrSchedule::cosine, 5e-4, 64, 12};

    SUBCASE("zero mask epochs reduce to the projected init scores") {
        BipConfig mask_cfg;
        mask_cfg.epochs = 0;
        mask_cfg.batch_size = 64;
        mask_cfg.seed = 12;
        const PruneResult res = hydra_run(b.net, b.data.train, b.data.test, target, b.gm, mask_cfg,
                                          retrain, dres.theta);
        const auto want = project_topk(init_scores(dres.theta, b.gm), target, b.gm);
        CHECK(res.mask.bits == want.bits);
    }

    SUBCASE("phase counters: m evals in phase 1, theta evals in phase 2") {
        BipConfig mask_cfg;
        mask_cfg.epochs = 6;
        mask_cfg.batch_size = 64;
        mask_cfg.seed = 12;
        const PruneResult res = hydra_run(b.net, b.data.train, b.data.test, target, b.gm, mask_cfg,
                                          retrain, dres.theta);
        CHECK(res.record.m_grad_evals == 6 * 5);
        CHECK(res.record.theta_grad_evals == 8 * 5);
        // weights never moved in phase 1: masked retraining starts from theta_dense
        for (std::size_t i = 0; i < res.theta.size(); ++i) {
            if (!res.mask.bits[i]) CHECK(res.theta[i] == 0.0);
        }
    }
}

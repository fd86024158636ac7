#include "doctest.h"

#include <cmath>

#include "bip/errors.hpp"
#include "bip/rng.hpp"
#include "bip/toy_bilevel.hpp"

using namespace bip;

namespace {

std::vector<double> random_mask_vec(int n, Rng& rng, double lo = 0.2, double hi = 0.9) {
    std::vector<double> m(static_cast<std::size_t>(n));
    for (double& v : m) v = lo + (hi - lo) * rng.uniform();
    return m;
}

}  // namespace

TEST_CASE("solve_lower closed forms") {
    SUBCASE("linear family") {
        const ToyBilevel tb = ToyBilevel::linear({2.0, -4.0}, 1.0);
        const auto theta = tb.solve_lower(std::vector<double>{1.0, 1.0});
        CHECK(theta[0] == doctest::Approx(-2.0));
        CHECK(theta[1] == doctest::Approx(4.0));
    }

    SUBCASE("zero mask gives zero solution for both families") {
        const ToyBilevel lin = ToyBilevel::linear({1.0, 2.0, 3.0}, 0.5);
        for (double v : lin.solve_lower(std::vector<double>{0.0, 0.0, 0.0})) CHECK(v == 0.0);
        const ToyBilevel quad = ToyBilevel::quadratic(4, 6, 1.0, 5);
        for (double v : quad.solve_lower(std::vector<double>{0.0, 0.0, 0.0, 0.0})) CHECK(v == doctest::Approx(0.0));
    }

    SUBCASE("quadratic family passes its stationarity self-check") {
        Rng rng(7);
        const ToyBilevel tb = ToyBilevel::quadratic(8, 12, 1.0, 9);
        // solve_lower throws if the residual exceeds 1e-10
        for (int trial = 0; trial < 10; ++trial) {
            CHECK_NOTHROW(tb.solve_lower(random_mask_vec(8, rng, 0.0, 1.0)));
        }
    }
}

TEST_CASE("implicit gradient: linear family is the exact Hessian-free case") {
    Rng rng(3);
    const std::vector<double> c = {2.0, -4.0, 1.5, 0.5};
    const ToyBilevel tb = ToyBilevel::linear(c, 2.0);
    const auto m = random_mask_vec(4, rng);
    const auto fd = ig_fd(tb, m, 1e-5);
    // -(1/gamma) diag(c): theta* is linear in m, so central FD is exact
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double want = i == j ? -c[static_cast<std::size_t>(i)] / 2.0 : 0.0;
            CHECK(std::abs(fd[static_cast<std::size_t>(i * 4 + j)] - want) < 1e-9);
        }
    const auto hf = ig_hessian_free(tb, m);
    CHECK(rel_frobenius_error(hf, fd) < 1e-9);
}

TEST_CASE("implicit gradient: quadratic family matches the exact formula, not the simplification") {
    Rng rng(13);
    const ToyBilevel tb = ToyBilevel::quadratic(10, 14, 1.0, 21);
    const auto m = random_mask_vec(10, rng);

    const auto fd = ig_fd(tb, m, 1e-4);
    const auto exact = ig_exact(tb, m);
    CHECK(rel_frobenius_error(exact, fd) < 1e-5);

    // the Hessian-free shortcut has a real gap here; report-only, never small
    const auto hf = ig_hessian_free(tb, m);
    const double gap = rel_frobenius_error(hf, fd);
    CHECK(gap > 1e-3);
    MESSAGE("hessian-free gap on quadratic family: ", gap);
}

TEST_CASE("implicit gradient commutes with coordinate swaps of symmetric data") {
    // A symmetric under swapping coordinates 0 and 1 (identical columns) and
    // a swap-symmetric mask must give a swap-symmetric FD matrix
    ToyBilevel tb = ToyBilevel::quadratic(3, 4, 1.0, 2);
    for (int r = 0; r < tb.rows; ++r) tb.A[static_cast<std::size_t>(r * 3 + 1)] = tb.A[static_cast<std::size_t>(r * 3 + 0)];
    const std::vector<double> m = {0.6, 0.6, 0.4};
    const auto fd = ig_fd(tb, m, 1e-4);
    auto at = [&](int i, int j) { return fd[static_cast<std::size_t>(j * 3 + i)]; };
    CHECK(at(0, 0) == doctest::Approx(at(1, 1)).epsilon(1e-6));
    CHECK(at(2, 0) == doctest::Approx(at(2, 1)).epsilon(1e-6));
    CHECK(at(0, 2) == doctest::Approx(at(1, 2)).epsilon(1e-6));
}

TEST_CASE("objective gradient against brute force") {
    Rng rng(17);

    SUBCASE("linear family: first-order form is exact") {
        std::vector<double> c(6);
        for (double& v : c) v = rng.gauss();
        const ToyBilevel tb = ToyBilevel::linear(c, 1.0);
        const auto m = random_mask_vec(6, rng);
        const auto fd = objective_grad_fd(tb, m, 1e-5);
        const auto first = objective_grad_first_order(tb, m);
        CHECK(max_rel_error(first, fd) < 1e-6);
        const auto exact = objective_grad_exact(tb, m);
        CHECK(max_rel_error(exact, fd) < 1e-6);
    }

    SUBCASE("quadratic family: exact IG matches, first-order deviates") {
        const ToyBilevel tb = ToyBilevel::quadratic(9, 12, 1.0, 31);
        const auto m = random_mask_vec(9, rng);
        const auto fd = objective_grad_fd(tb, m, 1e-5);
        const auto exact = objective_grad_exact(tb, m);
        CHECK(max_rel_error(exact, fd) < 1e-4);
        const auto first = objective_grad_first_order(tb, m);
        const double gap = max_rel_error(first, fd);
        CHECK(gap > 1e-3);
        MESSAGE("first-order objective gap on quadratic family: ", gap);
    }

    SUBCASE("IG contribution shrinks as 1/gamma") {
        const std::vector<double> gammas = {1.0, 10.0, 100.0};
        const double slope = ig_contribution_slope(gammas, 23);
        CHECK(std::abs(slope + 1.0) < 0.1);
    }
}

TEST_CASE("central differences converge quadratically where truncation exists") {
    Rng rng(29);
    const ToyBilevel tb = ToyBilevel::quadratic(6, 9, 1.0, 41);
    const auto m = random_mask_vec(6, rng);
    const auto exact = ig_exact(tb, m);
    const double e1 = rel_frobenius_error(ig_fd(tb, m, 4e-4), exact);
    const double e2 = rel_frobenius_error(ig_fd(tb, m, 2e-4), exact);
    const double ratio = e1 / e2;
    CHECK(ratio > 2.0);  // ~4 for a clean second-order method
    CHECK(ratio < 8.0);

    // the linear family has no truncation term at all
    std::vector<double> c(6);
    for (double& v : c) v = rng.gauss();
    const ToyBilevel lin = ToyBilevel::linear(c, 1.0);
    const auto lin_exact = ig_exact(lin, m);
    CHECK(rel_frobenius_error(ig_fd(lin, m, 1e-4), lin_exact) < 1e-9);
    CHECK(rel_frobenius_error(ig_fd(lin, m, 5e-5), lin_exact) < 1e-9);
}

TEST_CASE("mixed partial identity") {
    Rng rng(37);

    SUBCASE("tanh network satisfies the identity to 1e-3") {
        const Network net = Network::mlp_tiny();
        const ParamVector theta = net.init_params(3);
        const int n = static_cast<int>(net.num_params());
        const auto m = random_mask_vec(n, rng);
        Tensor x = Tensor::zeros({6, 2});
        for (double& v : x.data) v = rng.gauss();
        const Batch batch{x, {0, 1, 0, 1, 0, 1}};
        CHECK(mixed_partial_check(net, theta, m, batch, 1e-4) < 1e-3);
    }

    SUBCASE("theta = 0 collapses the Hessian term") {
        const Network net = Network::mlp_tiny();
        const ParamVector theta(static_cast<std::size_t>(net.num_params()), 0.0);
        const int n = static_cast<int>(net.num_params());
        const auto m = random_mask_vec(n, rng);
        Tensor x = Tensor::zeros({4, 2});
        for (double& v : x.data) v = rng.gauss();
        const Batch batch{x, {0, 1, 1, 0}};
        CHECK(mixed_partial_check(net, theta, m, batch, 1e-4) < 1e-3);
    }

    SUBCASE("relu networks are rejected") {
        const Network net = Network::mlp_small(3, 2);
        const ParamVector theta = net.init_params(1);
        const std::vector<double> m(theta.size(), 1.0);
        Tensor x = Tensor::zeros({2, 3});
        const Batch batch{x, {0, 1}};
        CHECK_THROWS_AS(mixed_partial_check(net, theta, m, batch, 1e-4), config_error);
    }
}

TEST_CASE("gradcheck table") {
    const auto rows = run_gradcheck(17);
    CHECK(rows.size() >= 8);
    int asserted = 0, reported = 0;
    for (const auto& r : rows) {
        CAPTURE(r.name);
        CAPTURE(r.error);
        if (r.threshold >= 0.0) {
            ++asserted;
            CHECK(r.pass);
        } else {
            ++reported;
            CHECK(r.error > 0.0);  // the measured gaps are real
        }
    }
    CHECK(asserted >= 6);
    CHECK(reported >= 2);
}

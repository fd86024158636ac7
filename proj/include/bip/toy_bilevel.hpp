#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bip/nn.hpp"

namespace bip {

// Small bilevel instances with solvable lower level, used to verify the
// implicit-gradient identities by brute force. The lower-level objective
// g(m, theta) = loss(m .* theta) + gamma/2 ||theta||^2 is gamma-strongly
// convex, so theta*(m) is unique and checkable against its stationarity
// residual.
struct ToyBilevel {
    enum class Family { linear, quadratic };

    Family family = Family::linear;
    int n = 0;
    double gamma = 1.0;
    double tol = 1e-10;
    std::vector<double> c;  // linear: loss(z) = c^T z
    std::vector<double> A;  // quadratic: loss(z) = 0.5 ||A z - b||^2, A is rows x n row-major
    std::vector<double> b;
    int rows = 0;

    static ToyBilevel linear(std::vector<double> c, double gamma);
    static ToyBilevel quadratic(int n, int rows, double gamma, std::uint64_t seed);

    double loss(std::span<const double> z) const;
    std::vector<double> grad(std::span<const double> z) const;  // d loss / dz
    std::vector<double> hessian() const;                        // n x n; A^T A or zero

    // theta*(m): closed form for the linear family, a Cholesky solve of
    // (diag(m) A^T A diag(m) + gamma I) theta = diag(m) A^T b for the
    // quadratic one. The stationarity residual is verified on every call.
    std::vector<double> solve_lower(std::span<const double> m) const;

    // F(m) = loss(m .* theta*(m))
    double objective(std::span<const double> m) const;
};

// All n x n matrices below use the probe orientation: column i holds
// d theta* / d m_i, matching the finite-difference construction.

std::vector<double> ig_fd(const ToyBilevel& tb, std::span<const double> m, double eps);

// Exact implicit gradient from the stationarity condition:
// -[diag(m) H diag(m) + gamma I]^{-1} (diag(g) + diag(m) H diag(theta*)).
std::vector<double> ig_exact(const ToyBilevel& tb, std::span<const double> m);

// First-order form under the Hessian-free assumption: -(1/gamma) diag(g).
std::vector<double> ig_hessian_free(const ToyBilevel& tb, std::span<const double> m);

std::vector<double> objective_grad_fd(const ToyBilevel& tb, std::span<const double> m, double eps);

// Chain rule with the exact implicit gradient plugged in.
std::vector<double> objective_grad_exact(const ToyBilevel& tb, std::span<const double> m);

// First-order objective gradient: (theta* - (1/gamma) m .* g) .* g.
std::vector<double> objective_grad_first_order(const ToyBilevel& tb, std::span<const double> m);

double rel_frobenius_error(std::span<const double> a, std::span<const double> b);
double max_rel_error(std::span<const double> a, std::span<const double> b);

// Verifies the pre-assumption mixed-partial identity on a real network:
// FD_m[ grad_theta loss(m .* theta) ] == diag(g) + diag(theta) Hz diag(m),
// with Hz the z-Hessian probed by finite differences. Returns the max
// elementwise relative error (entry scale floored at 1e-3 of the matrix
// scale, so structural zeros are measured against the matrix magnitude).
// Networks with ReLU activations are rejected; the kink invalidates the
// second differences.
double mixed_partial_check(const Network& net, const ParamVector& theta, std::span<const double> m,
                           const Batch& batch, double eps);

// Log-log slope of the FD-measured IG contribution across the given gammas
// (linear family); the first-order theory predicts -1.
double ig_contribution_slope(std::span<const double> gammas, std::uint64_t seed);

struct GradCheckRow {
    std::string name;
    double error = 0.0;
    double threshold = -1.0;  // negative: reported, not asserted
    bool pass = true;
};

std::vector<GradCheckRow> run_gradcheck(std::uint64_t seed = 17);

}  // namespace bip

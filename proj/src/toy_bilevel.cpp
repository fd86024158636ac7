#include "bip/toy_bilevel.hpp"

#include <algorithm>
#include <cmath>

#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace bip {

namespace {

// Cholesky solve for a symmetric positive-definite system (row-major).
std::vector<double> spd_solve(int n, std::vector<double> A, std::vector<double> rhs) {
    for (int j = 0; j < n; ++j) {
        double d = A[static_cast<std::size_t>(j * n + j)];
        for (int k = 0; k < j; ++k) d -= A[static_cast<std::size_t>(j * n + k)] * A[static_cast<std::size_t>(j * n + k)];
        if (d <= 0.0) throw numeric_error("spd_solve: matrix not positive definite");
        const double L = std::sqrt(d);
        A[static_cast<std::size_t>(j * n + j)] = L;
        for (int i = j + 1; i < n; ++i) {
            double v = A[static_cast<std::size_t>(i * n + j)];
            for (int k = 0; k < j; ++k) v -= A[static_cast<std::size_t>(i * n + k)] * A[static_cast<std::size_t>(j * n + k)];
            A[static_cast<std::size_t>(i * n + j)] = v / L;
        }
    }
    // forward then backward substitution
    for (int i = 0; i < n; ++i) {
        double v = rhs[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) v -= A[static_cast<std::size_t>(i * n + k)] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = v / A[static_cast<std::size_t>(i * n + i)];
    }
    for (int i = n - 1; i >= 0; --i) {
        double v = rhs[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) v -= A[static_cast<std::size_t>(k * n + i)] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = v / A[static_cast<std::size_t>(i * n + i)];
    }
    return rhs;
}

}  // namespace

ToyBilevel ToyBilevel::linear(std::vector<double> c, double gamma) {
    if (gamma <= 0.0) throw config_error("toy bilevel: gamma must be positive");
    ToyBilevel tb;
    tb.family = Family::linear;
    tb.n = static_cast<int>(c.size());
    tb.gamma = gamma;
    tb.c = std::move(c);
    return tb;
}

ToyBilevel ToyBilevel::quadratic(int n, int rows, double gamma, std::uint64_t seed) {
    if (gamma <= 0.0) throw config_error("toy bilevel: gamma must be positive");
    if (n < 1 || n > 20) throw config_error("toy bilevel: n must be in [1,20]");
    ToyBilevel tb;
    tb.family = Family::quadratic;
    tb.n = n;
    tb.rows = rows;
    tb.gamma = gamma;
    Rng rng(mix64(seed, 0x70b1));
    tb.A.resize(static_cast<std::size_t>(rows) * n);
    tb.b.resize(static_cast<std::size_t>(rows));
    for (double& v : tb.A) v = rng.gauss();
    for (double& v : tb.b) v = rng.gauss();
    return tb;
}

double ToyBilevel::loss(std::span<const double> z) const {
    if (family == Family::linear) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += c[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
        return acc;
    }
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) {
        double v = -b[static_cast<std::size_t>(r)];
        for (int i = 0; i < n; ++i) v += A[static_cast<std::size_t>(r * n + i)] * z[static_cast<std::size_t>(i)];
        acc += v * v;
    }
    return 0.5 * acc;
}

std::vector<double> ToyBilevel::grad(std::span<const double> z) const {
    if (family == Family::linear) return c;
    std::vector<double> res(static_cast<std::size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
        double v = -b[static_cast<std::size_t>(r)];
        for (int i = 0; i < n; ++i) v += A[static_cast<std::size_t>(r * n + i)] * z[static_cast<std::size_t>(i)];
        res[static_cast<std::size_t>(r)] = v;
    }
    std::vector<double> g(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int r = 0; r < rows; ++r) acc += A[static_cast<std::size_t>(r * n + i)] * res[static_cast<std::size_t>(r)];
        g[static_cast<std::size_t>(i)] = acc;
    }
    return g;
}

std::vector<double> ToyBilevel::hessian() const {
    std::vector<double> H(static_cast<std::size_t>(n) * n, 0.0);
    if (family == Family::linear) return H;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int r = 0; r < rows; ++r)
                acc += A[static_cast<std::size_t>(r * n + i)] * A[static_cast<std::size_t>(r * n + j)];
            H[static_cast<std::size_t>(i * n + j)] = acc;
        }
    return H;
}

std::vector<double> ToyBilevel::solve_lower(std::span<const double> m) const {
    if (static_cast<int>(m.size()) != n) throw usage_error("solve_lower: mask length != n");
    std::vector<double> theta;
    if (family == Family::linear) {
        theta.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) theta[static_cast<std::size_t>(i)] = -m[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)] / gamma;
    } else {
        std::vector<double> H = hessian();
        std::vector<double> sys(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                sys[static_cast<std::size_t>(i * n + j)] =
                    m[static_cast<std::size_t>(i)] * H[static_cast<std::size_t>(i * n + j)] * m[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) sys[static_cast<std::size_t>(i * n + i)] += gamma;
        std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
        // diag(m) A^T b
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int r = 0; r < rows; ++r) acc += A[static_cast<std::size_t>(r * n + i)] * b[static_cast<std::size_t>(r)];
            rhs[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] * acc;
        }
        theta = spd_solve(n, std::move(sys), std::move(rhs));
    }
    // self check: || grad_theta g ||_inf < tol
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(i)];
    const std::vector<double> g = grad(z);
    for (int i = 0; i < n; ++i) {
        const double r = m[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)] + gamma * theta[static_cast<std::size_t>(i)];
        if (std::abs(r) >= tol) {
            throw numeric_error("solve_lower: stationarity residual " + std::to_string(std::abs(r)) +
                                " exceeds tolerance");
        }
    }
    return theta;
}

double ToyBilevel::objective(std::span<const double> m) const {
    const std::vector<double> theta = solve_lower(m);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(i)];
    return loss(z);
}

std::vector<double> ig_fd(const ToyBilevel& tb, std::span<const double> m, double eps) {
    if (eps < 1e-7 || eps > 1e-3) throw config_error("ig_fd: eps must be in [1e-7, 1e-3]");
    const int n = tb.n;
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> probe(m.begin(), m.end());
    for (int i = 0; i < n; ++i) {
        probe[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] + eps;
        const std::vector<double> hi = tb.solve_lower(probe);
        probe[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] - eps;
        const std::vector<double> lo = tb.solve_lower(probe);
        probe[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j)
            out[static_cast<std::size_t>(j * n + i)] = (hi[static_cast<std::size_t>(j)] - lo[static_cast<std::size_t>(j)]) / (2.0 * eps);
    }
    return out;
}

std::vector<double> ig_exact(const ToyBilevel& tb, std::span<const double> m) {
    const int n = tb.n;
    const std::vector<double> theta = tb.solve_lower(m);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(i)];
    const std::vector<double> g = tb.grad(z);
    const std::vector<double> H = tb.hessian();

    // M[j][i] = delta_ji g_j + m_j H[j][i] theta_i  (column i = derivative
    // of the stationarity condition w.r.t. m_i)
    std::vector<double> M(static_cast<std::size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double v = m[static_cast<std::size_t>(j)] * H[static_cast<std::size_t>(j * n + i)] * theta[static_cast<std::size_t>(i)];
            if (i == j) v += g[static_cast<std::size_t>(j)];
            M[static_cast<std::size_t>(j * n + i)] = v;
        }

    std::vector<double> sys(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            sys[static_cast<std::size_t>(i * n + j)] =
                m[static_cast<std::size_t>(i)] * H[static_cast<std::size_t>(i * n + j)] * m[static_cast<std::size_t>(j)];
    for (int i = 0; i < n; ++i) sys[static_cast<std::size_t>(i * n + i)] += tb.gamma;

    // solve sys * X = -M column by column
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> col(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) col[static_cast<std::size_t>(j)] = -M[static_cast<std::size_t>(j * n + i)];
        const std::vector<double> x = spd_solve(n, sys, col);
        for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j * n + i)] = x[static_cast<std::size_t>(j)];
    }
    return out;
}

std::vector<double> ig_hessian_free(const ToyBilevel& tb, std::span<const double> m) {
    const int n = tb.n;
    const std::vector<double> theta = tb.solve_lower(m);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(i)];
    const std::vector<double> g = tb.grad(z);
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i * n + i)] = -g[static_cast<std::size_t>(i)] / tb.gamma;
    return out;
}

std::vector<double> objective_grad_fd(const ToyBilevel& tb, std::span<const double> m, double eps) {
    const int n = tb.n;
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    std::vector<double> probe(m.begin(), m.end());
    for (int i = 0; i < n; ++i) {
        probe[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] + eps;
        const double hi = tb.objective(probe);
        probe[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] - eps;
        const double lo = tb.objective(probe);
        probe[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] = (hi - lo) / (2.0 * eps);
    }
    return out;
}

std::vector<double> objective_grad_exact(const ToyBilevel& tb, std::span<const double> m) {
    const int n = tb.n;
    const std::vector<double> theta = tb.solve_lower(m);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(i)];
    const std::vector<double> g = tb.grad(z);
    const std::vector<double> ig = ig_exact(tb, m);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = theta[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)];  // partial w.r.t. m
        for (int j = 0; j < n; ++j) {
            acc += ig[static_cast<std::size_t>(j * n + i)] * m[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

std::vector<double> objective_grad_first_order(const ToyBilevel& tb, std::span<const double> m) {
    const int n = tb.n;
    const std::vector<double> theta = tb.solve_lower(m);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(i)];
    const std::vector<double> g = tb.grad(z);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            (theta[static_cast<std::size_t>(i)] - m[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)] / tb.gamma) * g[static_cast<std::size_t>(i)];
    }
    return out;
}

double rel_frobenius_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw usage_error("rel_frobenius_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / (std::sqrt(den) + 1e-12);
}

double max_rel_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw usage_error("max_rel_error: size mismatch");
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    const double floor = 1e-3 * scale + 1e-12;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

double mixed_partial_check(const Network& net, const ParamVector& theta, std::span<const double> m,
                           const Batch& batch, double eps) {
    if (net.uses_relu()) {
        throw config_error("mixed_partial_check: ReLU activations rejected (kink invalidates FD)");
    }
    const int n = static_cast<int>(net.num_params());
    if (static_cast<int>(theta.size()) != n || static_cast<int>(m.size()) != n) {
        throw usage_error("mixed_partial_check: length mismatch");
    }

    auto grad_at = [&](const std::vector<double>& z) { return net.grad_z(z, batch); };
    auto z_of = [&](std::span<const double> mm) {
        std::vector<double> z(theta.size());
        for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = mm[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(i)];
        return z;
    };

    // LHS: FD over m of grad_theta loss(m .* theta) = m .* g(m .* theta)
    std::vector<double> lhs(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> probe(m.begin(), m.end());
    for (int i = 0; i < n; ++i) {
        probe[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] + eps;
        std::vector<double> ghi = grad_at(z_of(probe));
        for (int j = 0; j < n; ++j) ghi[static_cast<std::size_t>(j)] *= probe[static_cast<std::size_t>(j)];
        probe[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] - eps;
        std::vector<double> glo = grad_at(z_of(probe));
        for (int j = 0; j < n; ++j) glo[static_cast<std::size_t>(j)] *= probe[static_cast<std::size_t>(j)];
        probe[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j)
            lhs[static_cast<std::size_t>(i * n + j)] = (ghi[static_cast<std::size_t>(j)] - glo[static_cast<std::size_t>(j)]) / (2.0 * eps);
    }

    // RHS: diag(g) + diag(theta) Hz diag(m), Hz probed by FD over z
    const std::vector<double> z0 = z_of(m);
    const std::vector<double> g0 = grad_at(z0);
    std::vector<double> hz(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> zp = z0;
    for (int k = 0; k < n; ++k) {
        zp[static_cast<std::size_t>(k)] = z0[static_cast<std::size_t>(k)] + eps;
        const std::vector<double> ghi = grad_at(zp);
        zp[static_cast<std::size_t>(k)] = z0[static_cast<std::size_t>(k)] - eps;
        const std::vector<double> glo = grad_at(zp);
        zp[static_cast<std::size_t>(k)] = z0[static_cast<std::size_t>(k)];
        for (int j = 0; j < n; ++j)
            hz[static_cast<std::size_t>(j * n + k)] = (ghi[static_cast<std::size_t>(j)] - glo[static_cast<std::size_t>(j)]) / (2.0 * eps);
    }
    // symmetrize to shave FD noise
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (hz[static_cast<std::size_t>(i * n + j)] + hz[static_cast<std::size_t>(j * n + i)]);
            hz[static_cast<std::size_t>(i * n + j)] = v;
            hz[static_cast<std::size_t>(j * n + i)] = v;
        }

    std::vector<double> rhs(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = theta[static_cast<std::size_t>(i)] * hz[static_cast<std::size_t>(i * n + j)] * m[static_cast<std::size_t>(j)];
            if (i == j) v += g0[static_cast<std::size_t>(i)];
            rhs[static_cast<std::size_t>(i * n + j)] = v;
        }

    return max_rel_error(lhs, rhs);
}

double ig_contribution_slope(std::span<const double> gammas, std::uint64_t seed) {
    Rng rng(mix64(seed, 0x9a99));
    const int n = 6;
    std::vector<double> c(static_cast<std::size_t>(n)), m(static_cast<std::size_t>(n));
    for (double& v : c) v = rng.gauss() + 2.0;
    for (double& v : m) v = 0.3 + 0.6 * rng.uniform();

    std::vector<double> lx, ly;
    for (double gamma : gammas) {
        const ToyBilevel tb = ToyBilevel::linear(c, gamma);
        const std::vector<double> fd = objective_grad_fd(tb, m, 1e-5);
        const std::vector<double> theta = tb.solve_lower(m);
        std::vector<double> z(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(i)];
        const std::vector<double> g = tb.grad(z);
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            const double ig_part = fd[static_cast<std::size_t>(i)] - theta[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)];
            norm += ig_part * ig_part;
        }
        lx.push_back(std::log(gamma));
        ly.push_back(std::log(std::sqrt(norm)));
    }
    // least squares slope
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(ly.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
}

std::vector<GradCheckRow> run_gradcheck(std::uint64_t seed) {
    std::vector<GradCheckRow> rows;
    auto add = [&](std::string name, double err, double threshold) {
        GradCheckRow r;
        r.name = std::move(name);
        r.error = err;
        r.threshold = threshold;
        r.pass = threshold < 0.0 || err < threshold;
        rows.push_back(std::move(r));
    };

    Rng rng(mix64(seed, 0x6c));

    // model gradient vs finite differences on the smooth network
    {
        const Network net = Network::mlp_tiny();
        const int n = static_cast<int>(net.num_params());
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            ParamVector z = net.init_params(mix64(seed, static_cast<std::uint64_t>(trial)));
            Tensor x = Tensor::zeros({4, 2});
            for (double& v : x.data) v = rng.gauss();
            Batch batch{x, {0, 1, 0, 1}};
            const ParamVector g = net.grad_z(z, batch);
            const double eps = 1e-5;
            for (int i = 0; i < n; ++i) {
                const double keep = z[static_cast<std::size_t>(i)];
                z[static_cast<std::size_t>(i)] = keep + eps;
                const double hi = net.loss_at(z, batch);
                z[static_cast<std::size_t>(i)] = keep - eps;
                const double lo = net.loss_at(z, batch);
                z[static_cast<std::size_t>(i)] = keep;
                const double fd = (hi - lo) / (2.0 * eps);
                worst = std::max(worst, std::abs(g[static_cast<std::size_t>(i)] - fd) / (std::abs(fd) + 1e-12));
            }
        }
        add("model-grad-vs-fd (mlp-tiny)", worst, 1e-5);
    }

    std::vector<double> m10(10);
    for (double& v : m10) v = 0.2 + 0.7 * rng.uniform();

    // exact implicit gradient on the quadratic family
    {
        const ToyBilevel tb = ToyBilevel::quadratic(10, 14, 1.0, seed);
        const auto fd = ig_fd(tb, m10, 1e-4);
        const auto exact = ig_exact(tb, m10);
        add("exact-ig-vs-fd (quadratic)", rel_frobenius_error(exact, fd), 1e-5);
        const auto hf = ig_hessian_free(tb, m10);
        add("hessian-free-ig-gap (quadratic)", rel_frobenius_error(hf, fd), -1.0);
        const auto ofd = objective_grad_fd(tb, m10, 1e-5);
        const auto oexact = objective_grad_exact(tb, m10);
        add("objective-grad-exact-vs-fd (quadratic)", max_rel_error(oexact, ofd), 1e-4);
        const auto ofirst = objective_grad_first_order(tb, m10);
        add("first-order-objective-gap (quadratic)", max_rel_error(ofirst, ofd), -1.0);
    }

    // first-order identities are exact for the linear family
    {
        std::vector<double> c(10);
        for (double& v : c) v = rng.gauss() * 2.0;
        const ToyBilevel tb = ToyBilevel::linear(c, 1.0);
        const auto fd = ig_fd(tb, m10, 1e-5);
        const auto hf = ig_hessian_free(tb, m10);
        add("first-order-ig-vs-fd (linear)", rel_frobenius_error(hf, fd), 1e-6);
        const auto ofd = objective_grad_fd(tb, m10, 1e-5);
        const auto ofirst = objective_grad_first_order(tb, m10);
        add("first-order-objective-vs-fd (linear)", max_rel_error(ofirst, ofd), 1e-6);
    }

    // mixed-partial identity on the smooth network
    {
        const Network net = Network::mlp_tiny();
        const int n = static_cast<int>(net.num_params());
        const ParamVector theta = net.init_params(mix64(seed, 0xfeed));
        std::vector<double> m(static_cast<std::size_t>(n));
        for (double& v : m) v = 0.2 + 0.7 * rng.uniform();
        Tensor x = Tensor::zeros({6, 2});
        for (double& v : x.data) v = rng.gauss();
        Batch batch{x, {0, 1, 0, 1, 0, 1}};
        add("mixed-partial-identity (mlp-tiny)", mixed_partial_check(net, theta, m, batch, 1e-4), 1e-3);
    }

    // contribution of the IG term shrinks as 1/gamma
    {
        const std::vector<double> gammas = {1.0, 10.0, 100.0};
        const double slope = ig_contribution_slope(gammas, seed);
        add("ig-contribution-slope (linear, target -1)", std::abs(slope + 1.0), 0.1);
    }

    return rows;
}

}  // namespace bip

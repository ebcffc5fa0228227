#pragma once

// Radially symmetric n-vortex profiles of the Ginzburg-Landau energy
//
//   E = 1/2 int { |grad_A psi|^2 + (curl A)^2 + (lambda/2)(|psi|^2 - 1)^2 }
//
// In the equivariant form psi = f(r) e^{i n theta}, A = a(r) grad(n theta)
// the critical-point equations reduce to the coupled radial system
//
//   f'' + f'/r - n^2 (1-a)^2 f / r^2 + lambda (1 - f^2) f = 0
//   a'' - a'/r + (1 - a) f^2 = 0
//
// with f ~ c r^|n|, a ~ c r^2 at the origin and f, a -> 1 at infinity.  The
// magnetic field is B(r) = n a'(r) / r.  (See docs/math_notes.md for the
// derivation and the boundary-condition choices.)
//
// The solver is damped Newton on a second-order finite-difference
// discretization over a uniform grid r_i = i h, with Dirichlet f = a = 0 at
// the origin and Robin conditions at r_max matching the known tails:
// 1 - f decays at rate m_lambda = min(sqrt(2 lambda), 2) and 1 - a ~ r K1(r).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "glvx/bessel.hpp"
#include "glvx/errors.hpp"
#include "glvx/fit.hpp"

namespace glvx {

inline double m_lambda(double lambda) {
    return std::min(std::sqrt(2.0 * lambda), 2.0);
}

struct ProfileParams {
    int n = 1;           // winding number, nonzero
    double lambda = 1.0; // coupling, > 0
    double r_max = 25.0; // domain radius
    int num_points = 2048;

    void validate() const {
        if (n == 0) throw config_error("ProfileParams: winding number n must be nonzero");
        if (!(lambda > 0.0)) throw config_error("ProfileParams: lambda must be positive");
        double needed = 20.0 / std::min(m_lambda(lambda), 1.0);
        if (!(r_max >= needed))
            throw config_error("ProfileParams: r_max = " + std::to_string(r_max) +
                               " too small; the slowest tail needs r_max >= " +
                               std::to_string(needed));
        if (num_points < 256)
            throw config_error("ProfileParams: num_points must be at least 256");
    }
};

// Default domain: 25 units or whatever the slowest decaying tail needs.
inline ProfileParams default_profile_params(int n, double lambda) {
    ProfileParams p;
    p.n = n;
    p.lambda = lambda;
    if (lambda > 0.0) p.r_max = std::max(25.0, 20.0 / std::min(m_lambda(lambda), 1.0));
    return p;
}

struct RadialGrid {
    std::vector<double> r; // strictly increasing, r.front() = 0, r.back() = r_max

    double spacing() const { return r.size() > 1 ? r[1] - r[0] : 0.0; }
};

struct ProfileScalars {
    double energy = 0.0;     // E^(n)
    double gamma_n = 0.0;    // translational-mode normalization
    double beta_n = 0.0;     // field-strength amplitude: B(r) ~ n beta_n K1(r)
    double beta_residual = 0.0;
    double m_lambda = 0.0;
    double rate_f = 0.0; // fitted tail rate of 1 - f
    double rate_B = 0.0; // fitted tail rate of |B|
};

struct VortexProfile {
    ProfileParams params;
    RadialGrid grid;
    std::vector<double> f, a;   // profile values at the nodes
    std::vector<double> df, da; // centered-difference derivatives
    std::vector<double> B;      // n a'/r, with the r -> 0 limit at the origin
    ProfileScalars scalars;
    double residual_sup = 0.0; // sup-norm of the discrete ODE residual
};

namespace detail {

// Block-tridiagonal solve with 2x2 blocks: B_i x_{i-1} + D_i x_i + C_i x_{i+1} = g_i.
// Off-diagonal blocks here are diagonal 2x2, stored as {b_f, b_a}.
struct BlockTri {
    std::vector<std::array<double, 4>> D; // row-major 2x2
    std::vector<std::array<double, 2>> B, C;
    std::vector<std::array<double, 2>> g;

    explicit BlockTri(size_t n) : D(n), B(n), C(n), g(n) {}

    void solve(std::vector<std::array<double, 2>>& x) {
        size_t n = D.size();
        std::vector<std::array<double, 4>> Dt(n);
        std::vector<std::array<double, 2>> gt(n);
        Dt[0] = D[0];
        gt[0] = g[0];
        for (size_t i = 1; i < n; ++i) {
            // M = B_i * inv(Dt_{i-1}); B_i diagonal
            const auto& P = Dt[i - 1];
            double det = P[0] * P[3] - P[1] * P[2];
            if (std::abs(det) < 1e-300) throw solver_error("profile solve: singular block");
            double inv[4] = {P[3] / det, -P[1] / det, -P[2] / det, P[0] / det};
            double M[4] = {B[i][0] * inv[0], B[i][0] * inv[1],
                           B[i][1] * inv[2], B[i][1] * inv[3]};
            // Dt_i = D_i - M * C_{i-1}; C diagonal
            Dt[i] = {D[i][0] - M[0] * C[i - 1][0], D[i][1] - M[1] * C[i - 1][1],
                     D[i][2] - M[2] * C[i - 1][0], D[i][3] - M[3] * C[i - 1][1]};
            gt[i] = {g[i][0] - M[0] * gt[i - 1][0] - M[1] * gt[i - 1][1],
                     g[i][1] - M[2] * gt[i - 1][0] - M[3] * gt[i - 1][1]};
        }
        x.assign(n, {0.0, 0.0});
        for (size_t ii = n; ii-- > 0;) {
            double rhs0 = gt[ii][0], rhs1 = gt[ii][1];
            if (ii + 1 < n) {
                rhs0 -= C[ii][0] * x[ii + 1][0];
                rhs1 -= C[ii][1] * x[ii + 1][1];
            }
            const auto& P = Dt[ii];
            double det = P[0] * P[3] - P[1] * P[2];
            x[ii] = {(P[3] * rhs0 - P[1] * rhs1) / det, (P[0] * rhs1 - P[2] * rhs0) / det};
        }
    }
};

inline void profile_residual(const ProfileParams& p, const std::vector<double>& r,
                             const std::vector<double>& f, const std::vector<double>& a,
                             double kappa_far, std::vector<std::array<double, 2>>& out) {
    size_t N = r.size();
    double h = r[1] - r[0];
    double n2 = static_cast<double>(p.n) * p.n;
    double ml = m_lambda(p.lambda);
    out.resize(N);
    out[0] = {f[0], a[0]};
    for (size_t i = 1; i + 1 < N; ++i) {
        double ri = r[i];
        double one_a = 1.0 - a[i];
        out[i][0] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h) +
                    (f[i + 1] - f[i - 1]) / (2.0 * h * ri) -
                    n2 * one_a * one_a * f[i] / (ri * ri) +
                    p.lambda * (1.0 - f[i] * f[i]) * f[i];
        out[i][1] = (a[i + 1] - 2.0 * a[i] + a[i - 1]) / (h * h) -
                    (a[i + 1] - a[i - 1]) / (2.0 * h * ri) + one_a * f[i] * f[i];
    }
    size_t L = N - 1;
    out[L][0] = (f[L] - f[L - 1]) / h - ml * (1.0 - f[L]);
    out[L][1] = (a[L] - a[L - 1]) / h - kappa_far * (1.0 - a[L]);
}

inline double sup_norm(const std::vector<std::array<double, 2>>& v) {
    double m = 0.0;
    for (const auto& e : v) m = std::max({m, std::abs(e[0]), std::abs(e[1])});
    return m;
}

} // namespace detail

inline VortexProfile solve_profile(const ProfileParams& params) {
    params.validate();
    size_t N = static_cast<size_t>(params.num_points);
    double h = params.r_max / static_cast<double>(N - 1);
    double n2 = static_cast<double>(params.n) * params.n;
    double ml = m_lambda(params.lambda);
    double kappa_far = bessel_k0(params.r_max) / bessel_k1(params.r_max);

    VortexProfile prof;
    prof.params = params;
    prof.grid.r.resize(N);
    for (size_t i = 0; i < N; ++i) prof.grid.r[i] = h * static_cast<double>(i);
    const std::vector<double>& r = prof.grid.r;

    std::vector<double>& f = prof.f;
    std::vector<double>& a = prof.a;
    f.resize(N);
    a.resize(N);
    for (size_t i = 0; i < N; ++i) {
        f[i] = std::tanh(r[i]);
        a[i] = 1.0 - std::exp(-r[i] * r[i]);
    }

    std::vector<std::array<double, 2>> res, delta;
    detail::profile_residual(params, r, f, a, kappa_far, res);
    double norm = detail::sup_norm(res);

    detail::BlockTri sys(N);
    std::vector<double> f_try(N), a_try(N);
    // Round-off floor of the residual evaluation is ~eps/h^2; stop just above it.
    const double target = 5e-11;
    const int max_iter = 80;
    int iter = 0;
    for (; iter < max_iter && norm > target; ++iter) {
        // Jacobian rows; rhs is -residual
        sys.D[0] = {1.0, 0.0, 0.0, 1.0};
        sys.B[0] = sys.C[0] = {0.0, 0.0};
        sys.g[0] = {-res[0][0], -res[0][1]};
        for (size_t i = 1; i + 1 < N; ++i) {
            double ri = r[i];
            double one_a = 1.0 - a[i];
            sys.B[i] = {1.0 / (h * h) - 1.0 / (2.0 * h * ri),
                        1.0 / (h * h) + 1.0 / (2.0 * h * ri)};
            sys.C[i] = {1.0 / (h * h) + 1.0 / (2.0 * h * ri),
                        1.0 / (h * h) - 1.0 / (2.0 * h * ri)};
            sys.D[i] = {-2.0 / (h * h) - n2 * one_a * one_a / (ri * ri) +
                            params.lambda * (1.0 - 3.0 * f[i] * f[i]),
                        2.0 * n2 * one_a * f[i] / (ri * ri),
                        2.0 * f[i] * one_a,
                        -2.0 / (h * h) - f[i] * f[i]};
            sys.g[i] = {-res[i][0], -res[i][1]};
        }
        size_t L = N - 1;
        sys.B[L] = {-1.0 / h, -1.0 / h};
        sys.C[L] = {0.0, 0.0};
        sys.D[L] = {1.0 / h + ml, 0.0, 0.0, 1.0 / h + kappa_far};
        sys.g[L] = {-res[L][0], -res[L][1]};

        sys.solve(delta);

        double step = 1.0;
        bool accepted = false;
        for (int back = 0; back < 7; ++back, step *= 0.5) {
            for (size_t i = 0; i < N; ++i) {
                f_try[i] = f[i] + step * delta[i][0];
                a_try[i] = a[i] + step * delta[i][1];
            }
            detail::profile_residual(params, r, f_try, a_try, kappa_far, res);
            double norm_try = detail::sup_norm(res);
            if (norm_try < norm) {
                f.swap(f_try);
                a.swap(a_try);
                norm = norm_try;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (norm <= 1e-9) break; // already at the round-off floor
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3e", norm);
            throw solver_error(std::string("solve_profile: line search stalled at residual ") + buf);
        }
    }
    if (norm > 1e-8)
        throw solver_error("solve_profile: Newton did not reach tolerance; residual " +
                           std::to_string(norm) + " after " + std::to_string(iter) +
                           " iterations");
    prof.residual_sup = norm;

    // Derived arrays: centered differences inside, one-sided second order at ends
    prof.df.resize(N);
    prof.da.resize(N);
    prof.B.resize(N);
    for (size_t i = 1; i + 1 < N; ++i) {
        prof.df[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        prof.da[i] = (a[i + 1] - a[i - 1]) / (2.0 * h);
    }
    prof.df[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    prof.da[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * h);
    prof.df[N - 1] = (3.0 * f[N - 1] - 4.0 * f[N - 2] + f[N - 3]) / (2.0 * h);
    prof.da[N - 1] = (3.0 * a[N - 1] - 4.0 * a[N - 2] + a[N - 3]) / (2.0 * h);
    for (size_t i = 1; i < N; ++i) prof.B[i] = params.n * prof.da[i] / r[i];
    // a ~ c r^2 at the origin, so B(0) = 2 n c
    prof.B[0] = 2.0 * params.n * a[1] / (r[1] * r[1]);

    return prof; // scalars are attached by solve_profile_full below
}

// Trapezoid of the radial energy density: E = pi int [ f'^2 + n^2(1-a)^2 f^2/r^2
// + n^2 a'^2/r^2 + (lambda/2)(1-f^2)^2 ] r dr.
inline double vortex_energy(const VortexProfile& p) {
    const auto& r = p.grid.r;
    size_t N = r.size();
    double n2 = static_cast<double>(p.params.n) * p.params.n;
    std::vector<double> integrand(N, 0.0);
    for (size_t i = 1; i < N; ++i) {
        double one_a = 1.0 - p.a[i];
        double pot = 1.0 - p.f[i] * p.f[i];
        integrand[i] = p.df[i] * p.df[i] * r[i] + n2 * one_a * one_a * p.f[i] * p.f[i] / r[i] +
                       n2 * p.da[i] * p.da[i] / r[i] + 0.5 * p.params.lambda * pot * pot * r[i];
    }
    double h = p.grid.spacing(), sum = 0.0;
    for (size_t i = 0; i + 1 < N; ++i) sum += 0.5 * h * (integrand[i] + integrand[i + 1]);
    return M_PI * sum;
}

// gamma_n = pi int [ f'^2 + n^2(1-a)^2 f^2/r^2 ] r dr + 2 pi int n^2 a'^2 / r dr:
// half the squared covariant gradient plus the full squared field strength.
inline double gamma_coefficient(const VortexProfile& p) {
    const auto& r = p.grid.r;
    size_t N = r.size();
    double n2 = static_cast<double>(p.params.n) * p.params.n;
    std::vector<double> ig(N, 0.0), ib(N, 0.0);
    for (size_t i = 1; i < N; ++i) {
        double one_a = 1.0 - p.a[i];
        ig[i] = p.df[i] * p.df[i] * r[i] + n2 * one_a * one_a * p.f[i] * p.f[i] / r[i];
        ib[i] = n2 * p.da[i] * p.da[i] / r[i];
    }
    double h = p.grid.spacing(), sg = 0.0, sb = 0.0;
    for (size_t i = 0; i + 1 < N; ++i) {
        sg += 0.5 * h * (ig[i] + ig[i + 1]);
        sb += 0.5 * h * (ib[i] + ib[i + 1]);
    }
    return M_PI * sg + 2.0 * M_PI * sb;
}

struct BetaFit {
    double beta = 0.0;
    double residual = 0.0; // rms of (ratio - beta) / beta over the window
};

// Least-squares constant of B(r) / (n K1(r) (1 - 1/(2r))) over [r_lo, r_hi].
// The (1 - 1/(2r)) factor is the first tail correction of the field strength;
// dividing by bare K1 would bias the window average by about 1/(2r) ~ 5%,
// which is large enough to corrupt every interaction coefficient downstream.
inline BetaFit beta_coefficient(const VortexProfile& p, double r_lo = 8.0, double r_hi = 12.0) {
    if (!(r_lo > 0.0) || !(r_hi > r_lo))
        throw config_error("beta_coefficient: invalid fit window");
    if (r_hi > p.grid.r.back())
        throw config_error("beta_coefficient: fit window exceeds the grid");
    std::vector<double> ratios;
    for (size_t i = 0; i < p.grid.r.size(); ++i) {
        double r = p.grid.r[i];
        if (r < r_lo || r > r_hi) continue;
        ratios.push_back(p.B[i] / (p.params.n * bessel_k1(r) * (1.0 - 0.5 / r)));
    }
    if (ratios.size() < 4)
        throw config_error("beta_coefficient: fewer than 4 grid nodes in the fit window");
    double beta = 0.0;
    for (double v : ratios) beta += v;
    beta /= static_cast<double>(ratios.size());
    double ss = 0.0;
    for (double v : ratios) ss += (v - beta) * (v - beta);
    double rms = std::sqrt(ss / static_cast<double>(ratios.size()));
    return {beta, std::abs(beta) > 0.0 ? rms / std::abs(beta) : rms};
}

struct DecayRates {
    double rate_f = 0.0;
    double rate_B = 0.0;
};

// Log-linear tail fits of 1 - f and |B| over [r_max/2, r_max - 2] by default.
// Nodes where the deficit has decayed into round-off are dropped; if nothing
// usable remains the window cannot support a fit and we error out.
inline DecayRates decay_exponents(const VortexProfile& p, double r_lo = -1.0, double r_hi = -1.0) {
    if (r_lo < 0.0) r_lo = 0.5 * p.params.r_max;
    if (r_hi < 0.0) r_hi = p.params.r_max - 2.0;
    if (!(r_hi > r_lo)) throw config_error("decay_exponents: empty fit window");

    auto fit_rate = [&](auto value, double floor, const char* what) {
        std::vector<double> xs, ys;
        for (size_t i = 0; i < p.grid.r.size(); ++i) {
            double r = p.grid.r[i];
            if (r < r_lo || r > r_hi) continue;
            double v = value(i);
            if (v < floor) continue;
            xs.push_back(r);
            ys.push_back(std::log(v));
        }
        if (xs.size() < 8 || xs.back() - xs.front() < 1.0)
            throw config_error(std::string("decay_exponents: tail of ") + what +
                               " underflows across the fit window; enlarge the grid or "
                               "shrink the window");
        return -linear_fit(xs, ys).slope;
    };

    DecayRates rates;
    rates.rate_f = fit_rate([&](size_t i) { return 1.0 - p.f[i]; }, 1e-12, "1-f");
    rates.rate_B = fit_rate([&](size_t i) { return std::abs(p.B[i]); }, 1e-11, "B");
    return rates;
}

// Pairwise interaction amplitude entering W(z) ~ sum n_j n_k c_jk e^{-R}/sqrt(R):
//   c_jk = (sqrt(pi/2) beta_j / 2) * 2 pi int [2(1-a_k) f_k f_k' + a_k'(1-f_k^2)] I0(r) dr.
// The integrand is the source (-Delta + 1)B of vortex k against the plane wave
// that the Laplace expansion of vortex j's far field produces.
inline double interaction_coefficient(const VortexProfile& pj, const VortexProfile& pk) {
    if (std::abs(pj.params.lambda - pk.params.lambda) > 1e-12)
        throw config_error("interaction_coefficient: profiles must share lambda");
    if (!(pk.params.lambda > 0.5))
        throw config_error("interaction_coefficient: requires lambda > 1/2 "
                           "(field-strength tail must dominate the scalar tail)");
    const auto& r = pk.grid.r;
    size_t N = r.size();
    std::vector<double> integrand(N, 0.0);
    for (size_t i = 1; i < N; ++i) {
        double g = 2.0 * (1.0 - pk.a[i]) * pk.f[i] * pk.df[i] +
                   pk.da[i] * (1.0 - pk.f[i] * pk.f[i]);
        integrand[i] = g * bessel_i0(r[i]);
    }
    double h = pk.grid.spacing(), sum = 0.0;
    for (size_t i = 0; i + 1 < N; ++i) sum += 0.5 * h * (integrand[i] + integrand[i + 1]);
    double beta_j = beta_coefficient(pj).beta;
    return std::sqrt(M_PI / 2.0) * 0.5 * beta_j * 2.0 * M_PI * sum;
}

// Solves and attaches every derived scalar.
inline VortexProfile solve_profile_full(const ProfileParams& params) {
    VortexProfile p = solve_profile(params);
    p.scalars.energy = vortex_energy(p);
    p.scalars.gamma_n = gamma_coefficient(p);
    p.scalars.m_lambda = m_lambda(params.lambda);
    BetaFit bf = beta_coefficient(p);
    p.scalars.beta_n = bf.beta;
    p.scalars.beta_residual = bf.residual;
    DecayRates dr = decay_exponents(p);
    p.scalars.rate_f = dr.rate_f;
    p.scalars.rate_B = dr.rate_B;
    return p;
}

} // namespace glvx

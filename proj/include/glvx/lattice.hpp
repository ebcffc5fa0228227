#pragma once

// Finite 2D lattice for the gauged Ginzburg-Landau field (psi, A) and its
// conjugate momenta (pi, E) = (-dpsi/dt, -dA/dt).
//
// psi lives on the N x N sites of a square [-L, L]^2, h = 2L/(N-1).  A lives
// on link midpoints: (N-1) x N values on x-directed links, N x (N-1) on
// y-directed links.  The covariant forward difference on a link tail -> head
//
//     (D psi)_l = (e^{-i h A_l} psi_head - psi_tail) / h
//
// picks up only a phase e^{i chi_tail} under the discrete gauge transform
// psi -> e^{i chi} psi, A_l -> A_l + (chi_head - chi_tail)/h, so every
// diagnostic built from |D psi|, plaquette curls, or link currents is gauge
// invariant to round-off.  The discrete energy is
//
//     E_h = (h^2/2) [ sum_links |D psi|^2 + sum_plaq B^2
//                     + (lambda/2) sum_sites (|psi|^2 - 1)^2 ],
//
// with the plaquette field B = (circulation of A around the cell)/h^2, and
// gl_gradient returns its exact gradient with respect to the inner product
// <u, v> = h^2 [ sum Re(conj(u_psi) v_psi) + sum_links u_A v_A ], so that
// d/dt E_h(u + t v)|_0 = <gl_gradient(u), v> holds to round-off for any
// direction v, including on the boundary ring.
//
// Multi-vortex initial data glues radial profiles:
//   psi(x) = e^{i chi(x)} prod_j f_j(|x - z_j|) e^{i n_j theta_j},
//   A(x)   = sum_j n_j a_j(r_j) grad theta_j + grad_h chi,
// with f, a (and the derived B, f', (1-a)f/r) cubically interpolated off the
// radial grid and clamped to the vacuum beyond its last node.  The singular
// grad theta = (-y, x)/r^2 factor is tamed by interpolating w(r) = a(r)/r^2,
// which extends smoothly through r = 0 because a vanishes quadratically.
//
// Row-sliced parallelism: every reduction forms one partial sum per lattice
// row (accumulated left to right by a single worker) and combines the partials
// in a fixed pairwise tree, so results are bit-identical for any worker count.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "glvx/errors.hpp"
#include "glvx/parallel.hpp"
#include "glvx/profile.hpp"

namespace glvx {

using complex_t = std::complex<double>;

struct LatticeSpec {
    double extent = 0.0;     // half-width L; domain is [-L, L]^2
    int points_per_side = 0; // N sites per side

    double spacing() const { return 2.0 * extent / (points_per_side - 1); }
    double coord(int i) const { return -extent + i * spacing(); }

    int site(int ix, int iy) const { return iy * points_per_side + ix; }
    int xlink(int ix, int iy) const { return iy * (points_per_side - 1) + ix; }
    int ylink(int ix, int iy) const { return iy * points_per_side + ix; }
    int num_sites() const { return points_per_side * points_per_side; }
    int num_xlinks() const { return (points_per_side - 1) * points_per_side; }
    int num_ylinks() const { return points_per_side * (points_per_side - 1); }

    bool operator==(const LatticeSpec& o) const {
        return extent == o.extent && points_per_side == o.points_per_side;
    }

    void validate() const {
        if (!(extent > 0.0) || !std::isfinite(extent))
            throw config_error("lattice extent must be positive and finite");
        if (points_per_side < 64)
            throw config_error("lattice needs at least 64 points per side");
        if (spacing() > 0.25 + 1e-12)
            throw config_error("lattice spacing exceeds 0.25; refine points_per_side");
    }
};

// Sites on the outermost ring, and links touching them, stay frozen during
// evolution (Dirichlet-to-ansatz boundary).
inline bool frozen_site(const LatticeSpec& lat, int ix, int iy) {
    int N = lat.points_per_side;
    return ix == 0 || iy == 0 || ix == N - 1 || iy == N - 1;
}
inline bool frozen_xlink(const LatticeSpec& lat, int ix, int iy) {
    int N = lat.points_per_side;
    return iy == 0 || iy == N - 1 || ix == 0 || ix == N - 2;
}
inline bool frozen_ylink(const LatticeSpec& lat, int ix, int iy) {
    int N = lat.points_per_side;
    return ix == 0 || ix == N - 1 || iy == 0 || iy == N - 2;
}

struct FieldState {
    LatticeSpec lattice;
    double lambda = 1.0;
    std::vector<complex_t> psi;
    std::vector<double> ax, ay;
};

struct MomentumState {
    LatticeSpec lattice;
    std::vector<complex_t> pi;
    std::vector<double> ex, ey;
};

inline FieldState make_vacuum(const LatticeSpec& lat, double lambda) {
    lat.validate();
    FieldState u;
    u.lattice = lat;
    u.lambda = lambda;
    u.psi.assign(lat.num_sites(), complex_t{1.0, 0.0});
    u.ax.assign(lat.num_xlinks(), 0.0);
    u.ay.assign(lat.num_ylinks(), 0.0);
    return u;
}

inline MomentumState make_zero_momentum(const LatticeSpec& lat) {
    MomentumState p;
    p.lattice = lat;
    p.pi.assign(lat.num_sites(), complex_t{0.0, 0.0});
    p.ex.assign(lat.num_xlinks(), 0.0);
    p.ey.assign(lat.num_ylinks(), 0.0);
    return p;
}

// --- value arithmetic on states (y += t x, inner products) ------------------

inline void axpy(FieldState& y, double t, const FieldState& x) {
    for (size_t i = 0; i < y.psi.size(); ++i) y.psi[i] += t * x.psi[i];
    for (size_t i = 0; i < y.ax.size(); ++i) y.ax[i] += t * x.ax[i];
    for (size_t i = 0; i < y.ay.size(); ++i) y.ay[i] += t * x.ay[i];
}

inline void axpy(MomentumState& y, double t, const MomentumState& x) {
    for (size_t i = 0; i < y.pi.size(); ++i) y.pi[i] += t * x.pi[i];
    for (size_t i = 0; i < y.ex.size(); ++i) y.ex[i] += t * x.ex[i];
    for (size_t i = 0; i < y.ey.size(); ++i) y.ey[i] += t * x.ey[i];
}

namespace detail {

inline double row_dot(const complex_t* a, const complex_t* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return s;
}

inline double row_dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

} // namespace detail

inline double dot(const FieldState& a, const FieldState& b) {
    if (!(a.lattice == b.lattice)) throw config_error("state dot: lattice mismatch");
    const LatticeSpec& lat = a.lattice;
    int N = lat.points_per_side;
    double h = lat.spacing();
    double s = reduce_rows(shared_pool(), N, [&](int iy) {
        double r = detail::row_dot(&a.psi[lat.site(0, iy)], &b.psi[lat.site(0, iy)], N);
        r += detail::row_dot(&a.ax[lat.xlink(0, iy)], &b.ax[lat.xlink(0, iy)], N - 1);
        if (iy < N - 1)
            r += detail::row_dot(&a.ay[lat.ylink(0, iy)], &b.ay[lat.ylink(0, iy)], N);
        return r;
    });
    return h * h * s;
}

inline double dot(const MomentumState& a, const MomentumState& b) {
    if (!(a.lattice == b.lattice)) throw config_error("state dot: lattice mismatch");
    const LatticeSpec& lat = a.lattice;
    int N = lat.points_per_side;
    double h = lat.spacing();
    double s = reduce_rows(shared_pool(), N, [&](int iy) {
        double r = detail::row_dot(&a.pi[lat.site(0, iy)], &b.pi[lat.site(0, iy)], N);
        r += detail::row_dot(&a.ex[lat.xlink(0, iy)], &b.ex[lat.xlink(0, iy)], N - 1);
        if (iy < N - 1)
            r += detail::row_dot(&a.ey[lat.ylink(0, iy)], &b.ey[lat.ylink(0, iy)], N);
        return r;
    });
    return h * h * s;
}

inline double norm(const FieldState& u) { return std::sqrt(dot(u, u)); }
inline double norm(const MomentumState& u) { return std::sqrt(dot(u, u)); }

// Zero out every degree of freedom that the Dirichlet boundary keeps frozen.
inline void apply_interior_mask(FieldState& g) {
    const LatticeSpec& lat = g.lattice;
    int N = lat.points_per_side;
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N; ++ix)
            if (frozen_site(lat, ix, iy)) g.psi[lat.site(ix, iy)] = 0.0;
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N - 1; ++ix)
            if (frozen_xlink(lat, ix, iy)) g.ax[lat.xlink(ix, iy)] = 0.0;
    for (int iy = 0; iy < N - 1; ++iy)
        for (int ix = 0; ix < N; ++ix)
            if (frozen_ylink(lat, ix, iy)) g.ay[lat.ylink(ix, iy)] = 0.0;
}

inline void apply_interior_mask(MomentumState& g) {
    const LatticeSpec& lat = g.lattice;
    int N = lat.points_per_side;
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N; ++ix)
            if (frozen_site(lat, ix, iy)) g.pi[lat.site(ix, iy)] = 0.0;
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N - 1; ++ix)
            if (frozen_xlink(lat, ix, iy)) g.ex[lat.xlink(ix, iy)] = 0.0;
    for (int iy = 0; iy < N - 1; ++iy)
        for (int ix = 0; ix < N; ++ix)
            if (frozen_ylink(lat, ix, iy)) g.ey[lat.ylink(ix, iy)] = 0.0;
}

// --- radial profile interpolants --------------------------------------------

namespace detail {

// Natural cubic spline on the uniform radial grid.
struct CubicSpline {
    double dx = 1.0, r_max = 0.0;
    std::vector<double> y, m; // values and second derivatives at nodes

    double eval(double r) const {
        size_t K = y.size();
        int k = static_cast<int>(r / dx);
        if (k < 0) k = 0;
        if (k > static_cast<int>(K) - 2) k = static_cast<int>(K) - 2;
        double t = r / dx - k;
        double u = 1.0 - t;
        return u * y[k] + t * y[k + 1] +
               dx * dx / 6.0 * ((u * u * u - u) * m[k] + (t * t * t - t) * m[k + 1]);
    }
};

inline CubicSpline make_spline(const std::vector<double>& r, const std::vector<double>& v) {
    size_t K = v.size();
    CubicSpline s;
    s.dx = r[1] - r[0];
    s.r_max = r.back();
    s.y = v;
    s.m.assign(K, 0.0);
    // Thomas algorithm for m[1..K-2]: m[i-1] + 4 m[i] + m[i+1] = 6 d2[i]/dx^2.
    std::vector<double> c(K, 0.0), d(K, 0.0);
    for (size_t i = 1; i + 1 < K; ++i) {
        double rhs = 6.0 * (v[i - 1] - 2.0 * v[i] + v[i + 1]) / (s.dx * s.dx);
        double denom = 4.0 - c[i - 1];
        c[i] = 1.0 / denom;
        d[i] = (rhs - d[i - 1]) / denom;
    }
    for (size_t i = K - 2; i >= 1; --i) s.m[i] = d[i] - c[i] * s.m[i + 1];
    return s;
}

} // namespace detail

// Radial data of one vortex, resampled for off-grid evaluation.  w = a/r^2 and
// v = (1-a)f/r absorb the coordinate singularities of grad theta; both extend
// smoothly through r = 0 (a = O(r^2), f = O(r^|n|)).
struct ProfileInterp {
    int n = 0;
    double lambda = 0.0;
    double r_max = 0.0;
    ProfileScalars scalars;
    detail::CubicSpline f, w, v, df, B;

    double eval_f(double r) const { return r >= r_max ? 1.0 : f.eval(r); }
    double eval_w(double r) const { return r >= r_max ? 1.0 / (r * r) : w.eval(r); }
    double eval_v(double r) const { return r >= r_max ? 0.0 : v.eval(r); }
    double eval_df(double r) const { return r >= r_max ? 0.0 : df.eval(r); }
    double eval_B(double r) const { return r >= r_max ? 0.0 : B.eval(r); }
};

inline ProfileInterp make_interp(const VortexProfile& p) {
    ProfileInterp out;
    out.n = p.params.n;
    out.lambda = p.params.lambda;
    out.r_max = p.params.r_max;
    out.scalars = p.scalars;
    const std::vector<double>& r = p.grid.r;
    size_t K = r.size();

    std::vector<double> wv(K), vv(K);
    for (size_t i = 1; i < K; ++i) {
        wv[i] = p.a[i] / (r[i] * r[i]);
        vv[i] = (1.0 - p.a[i]) * p.f[i] / r[i];
    }
    // Endpoint limits by Richardson extrapolation of the even/odd expansions.
    wv[0] = (16.0 * wv[1] - 4.0 * wv[2]) / 12.0;
    vv[0] = std::abs(p.params.n) == 1 ? (4.0 * vv[1] - vv[2]) / 3.0 : 0.0;

    out.f = detail::make_spline(r, p.f);
    out.w = detail::make_spline(r, wv);
    out.v = detail::make_spline(r, vv);
    out.df = detail::make_spline(r, p.df);
    out.B = detail::make_spline(r, p.B);
    return out;
}

using ProfileSet = std::map<int, ProfileInterp>;

inline ProfileSet make_profile_set(const std::vector<VortexProfile>& profiles) {
    ProfileSet set;
    for (const VortexProfile& p : profiles) set.emplace(p.params.n, make_interp(p));
    return set;
}

// --- vortex ansatz ----------------------------------------------------------

struct VortexAnsatz {
    std::vector<std::array<double, 2>> positions;
    std::vector<int> degrees;
    std::vector<double> chi;                      // per site; empty means 0
    std::vector<std::array<double, 2>> momenta_p; // per vortex; empty means 0
    std::vector<double> zeta;                     // per site; empty means 0
};

inline double min_separation(const std::vector<std::array<double, 2>>& z) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < z.size(); ++j)
        for (size_t k = j + 1; k < z.size(); ++k)
            best = std::min(best, std::hypot(z[j][0] - z[k][0], z[j][1] - z[k][1]));
    return best;
}

inline void validate_ansatz(const VortexAnsatz& a, const LatticeSpec& lat) {
    lat.validate();
    if (a.degrees.size() != a.positions.size())
        throw config_error("ansatz: positions and degrees disagree in length");
    if (!a.momenta_p.empty() && a.momenta_p.size() != a.positions.size())
        throw config_error("ansatz: momenta_p must be empty or one per vortex");
    size_t sites = static_cast<size_t>(lat.num_sites());
    if (!a.chi.empty() && a.chi.size() != sites)
        throw config_error("ansatz: chi must be empty or one value per site");
    if (!a.zeta.empty() && a.zeta.size() != sites)
        throw config_error("ansatz: zeta must be empty or one value per site");
    for (size_t j = 0; j < a.positions.size(); ++j) {
        if (a.degrees[j] == 0) throw config_error("ansatz: zero winding degree");
        double rho = std::hypot(a.positions[j][0], a.positions[j][1]);
        if (rho > lat.extent - 8.0) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "vortex %zu at distance %.3f from origin is closer than the "
                          "8-unit margin to the boundary (extent %.3f)",
                          j, rho, lat.extent);
            throw config_error(buf);
        }
    }
    if (a.positions.size() >= 2 && min_separation(a.positions) <= 2.0)
        throw config_error("ansatz: vortex separation must exceed 2");
}

namespace detail {

inline const ProfileInterp& interp_for(const ProfileSet& profiles, int n) {
    auto it = profiles.find(n);
    if (it == profiles.end())
        throw config_error("no radial profile provided for degree " + std::to_string(n));
    return it->second;
}

inline double shared_lambda(const ProfileSet& profiles, const VortexAnsatz& a) {
    double lambda = 1.0;
    bool seen = false;
    for (int n : a.degrees) {
        const ProfileInterp& p = interp_for(profiles, n);
        if (seen && std::abs(p.lambda - lambda) > 1e-12)
            throw config_error("profiles mix different couplings");
        lambda = p.lambda;
        seen = true;
    }
    return lambda;
}

} // namespace detail

// psi at sites, A at link midpoints; chi enters psi pointwise and A through
// the discrete link gradient, so the build commutes exactly with
// gauge_transform.
inline FieldState build_multivortex(const ProfileSet& profiles, const VortexAnsatz& ansatz,
                                    const LatticeSpec& lat) {
    validate_ansatz(ansatz, lat);
    size_t m = ansatz.positions.size();
    std::vector<const ProfileInterp*> ip(m);
    for (size_t j = 0; j < m; ++j) ip[j] = &detail::interp_for(profiles, ansatz.degrees[j]);

    FieldState u = make_vacuum(lat, m ? ip[0]->lambda : 1.0);
    if (m) u.lambda = detail::shared_lambda(profiles, ansatz);

    int N = lat.points_per_side;
    double h = lat.spacing();

    auto site_psi = [&](double x, double y) {
        complex_t prod{1.0, 0.0};
        for (size_t j = 0; j < m; ++j) {
            double dx = x - ansatz.positions[j][0], dy = y - ansatz.positions[j][1];
            double r = std::hypot(dx, dy);
            if (r < 1e-12) return complex_t{0.0, 0.0};
            prod *= ip[j]->eval_f(r) * std::polar(1.0, ansatz.degrees[j] * std::atan2(dy, dx));
        }
        return prod;
    };
    // Ansatz A at an arbitrary point: sum_j n_j w_j(r) (-dy, dx).
    auto point_a = [&](double x, double y, int comp) {
        double s = 0.0;
        for (size_t j = 0; j < m; ++j) {
            double dx = x - ansatz.positions[j][0], dy = y - ansatz.positions[j][1];
            double r = std::hypot(dx, dy);
            s += ansatz.degrees[j] * ip[j]->eval_w(r) * (comp == 0 ? -dy : dx);
        }
        return s;
    };

    for_rows(shared_pool(), N, [&](int iy) {
        double y = lat.coord(iy);
        for (int ix = 0; ix < N; ++ix) {
            complex_t p = site_psi(lat.coord(ix), y);
            if (!ansatz.chi.empty()) p *= std::polar(1.0, ansatz.chi[lat.site(ix, iy)]);
            u.psi[lat.site(ix, iy)] = p;
        }
        for (int ix = 0; ix < N - 1; ++ix) {
            double v = point_a(lat.coord(ix) + 0.5 * h, y, 0);
            if (!ansatz.chi.empty())
                v += (ansatz.chi[lat.site(ix + 1, iy)] - ansatz.chi[lat.site(ix, iy)]) / h;
            u.ax[lat.xlink(ix, iy)] = v;
        }
        if (iy < N - 1)
            for (int ix = 0; ix < N; ++ix) {
                double v = point_a(lat.coord(ix), y + 0.5 * h, 1);
                if (!ansatz.chi.empty())
                    v += (ansatz.chi[lat.site(ix, iy + 1)] - ansatz.chi[lat.site(ix, iy)]) / h;
                u.ay[lat.ylink(ix, iy)] = v;
            }
    });
    return u;
}

inline FieldState gauge_transform(const FieldState& u, const std::vector<double>& chi) {
    const LatticeSpec& lat = u.lattice;
    if (chi.size() != static_cast<size_t>(lat.num_sites()))
        throw config_error("gauge_transform: chi must have one value per site");
    int N = lat.points_per_side;
    double h = lat.spacing();
    FieldState v = u;
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N; ++ix)
            v.psi[lat.site(ix, iy)] *= std::polar(1.0, chi[lat.site(ix, iy)]);
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N - 1; ++ix)
            v.ax[lat.xlink(ix, iy)] +=
                (chi[lat.site(ix + 1, iy)] - chi[lat.site(ix, iy)]) / h;
    for (int iy = 0; iy < N - 1; ++iy)
        for (int ix = 0; ix < N; ++ix)
            v.ay[lat.ylink(ix, iy)] +=
                (chi[lat.site(ix, iy + 1)] - chi[lat.site(ix, iy)]) / h;
    return v;
}

// The gauge that keeps a translating ansatz's momentum free of stray gauge
// modes: chi(x) = sum_j z_j . A^{(n_j)}(x - z_j).  Used by boost tests.
inline std::vector<double> comoving_gauge(const ProfileSet& profiles, const VortexAnsatz& a,
                                          const LatticeSpec& lat) {
    std::vector<double> chi(lat.num_sites(), 0.0);
    int N = lat.points_per_side;
    for (size_t j = 0; j < a.positions.size(); ++j) {
        const ProfileInterp& p = detail::interp_for(profiles, a.degrees[j]);
        for (int iy = 0; iy < N; ++iy)
            for (int ix = 0; ix < N; ++ix) {
                double dx = lat.coord(ix) - a.positions[j][0];
                double dy = lat.coord(iy) - a.positions[j][1];
                double w = p.eval_w(std::hypot(dx, dy));
                chi[lat.site(ix, iy)] += a.degrees[j] * w *
                    (a.positions[j][0] * -dy + a.positions[j][1] * dx);
            }
    }
    return chi;
}

// --- diagnostics ------------------------------------------------------------

namespace detail {

inline complex_t cov_diff(const FieldState& u, int tail, int head, double a_link, double h) {
    return (std::polar(1.0, -h * a_link) * u.psi[head] - u.psi[tail]) / h;
}

} // namespace detail

// Plaquette magnetic field, (N-1) x (N-1), index iy*(N-1)+ix.
inline std::vector<double> plaquette_field(const FieldState& u) {
    const LatticeSpec& lat = u.lattice;
    int N = lat.points_per_side;
    double h = lat.spacing();
    std::vector<double> B((N - 1) * (N - 1));
    for_rows(shared_pool(), N - 1, [&](int iy) {
        for (int ix = 0; ix < N - 1; ++ix)
            B[iy * (N - 1) + ix] =
                (u.ax[lat.xlink(ix, iy)] + u.ay[lat.ylink(ix + 1, iy)] -
                 u.ax[lat.xlink(ix, iy + 1)] - u.ay[lat.ylink(ix, iy)]) / h;
    });
    return B;
}

inline double energy(const FieldState& u) {
    const LatticeSpec& lat = u.lattice;
    int N = lat.points_per_side;
    double h = lat.spacing();
    double lam = u.lambda;
    double s = reduce_rows(shared_pool(), N, [&](int iy) {
        double row = 0.0;
        for (int ix = 0; ix < N - 1; ++ix)
            row += std::norm(detail::cov_diff(u, lat.site(ix, iy), lat.site(ix + 1, iy),
                                              u.ax[lat.xlink(ix, iy)], h));
        if (iy < N - 1)
            for (int ix = 0; ix < N; ++ix)
                row += std::norm(detail::cov_diff(u, lat.site(ix, iy), lat.site(ix, iy + 1),
                                                  u.ay[lat.ylink(ix, iy)], h));
        if (iy < N - 1)
            for (int ix = 0; ix < N - 1; ++ix) {
                double B = (u.ax[lat.xlink(ix, iy)] + u.ay[lat.ylink(ix + 1, iy)] -
                            u.ax[lat.xlink(ix, iy + 1)] - u.ay[lat.ylink(ix, iy)]) / h;
                row += B * B;
            }
        for (int ix = 0; ix < N; ++ix) {
            double d = std::norm(u.psi[lat.site(ix, iy)]) - 1.0;
            row += 0.5 * lam * d * d;
        }
        return row;
    });
    return 0.5 * h * h * s;
}

inline double flux(const FieldState& u) {
    const LatticeSpec& lat = u.lattice;
    int N = lat.points_per_side;
    double h = lat.spacing();
    std::vector<double> B = plaquette_field(u);
    double s = reduce_rows(shared_pool(), N - 1, [&](int iy) {
        double row = 0.0;
        for (int ix = 0; ix < N - 1; ++ix) row += B[iy * (N - 1) + ix];
        return row;
    });
    return h * h * s;
}

// Winding of psi around the outermost site loop.
inline int degree(const FieldState& u) {
    const LatticeSpec& lat = u.lattice;
    int N = lat.points_per_side;
    std::vector<int> loop;
    loop.reserve(4 * N);
    for (int ix = 0; ix < N - 1; ++ix) loop.push_back(lat.site(ix, 0));
    for (int iy = 0; iy < N - 1; ++iy) loop.push_back(lat.site(N - 1, iy));
    for (int ix = N - 1; ix > 0; --ix) loop.push_back(lat.site(ix, N - 1));
    for (int iy = N - 1; iy > 0; --iy) loop.push_back(lat.site(0, iy));
    double total = 0.0;
    for (size_t i = 0; i < loop.size(); ++i) {
        complex_t cur = u.psi[loop[i]];
        complex_t nxt = u.psi[loop[(i + 1) % loop.size()]];
        if (std::abs(cur) <= 0.5)
            throw topology_error("degree undefined: |psi| <= 0.5 on the boundary loop");
        total += std::arg(nxt * std::conj(cur));
    }
    return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

struct LinkField {
    std::vector<double> x, y;
};

// Gauge-invariant link current j_l = Im(conj(psi_tail) e^{-i h A_l} psi_head)/h.
inline LinkField supercurrent(const FieldState& u) {
    const LatticeSpec& lat = u.lattice;
    int N = lat.points_per_side;
    double h = lat.spacing();
    LinkField j;
    j.x.assign(lat.num_xlinks(), 0.0);
    j.y.assign(lat.num_ylinks(), 0.0);
    for_rows(shared_pool(), N, [&](int iy) {
        for (int ix = 0; ix < N - 1; ++ix) {
            int l = lat.xlink(ix, iy);
            j.x[l] = std::imag(std::conj(u.psi[lat.site(ix, iy)]) *
                               std::polar(1.0, -h * u.ax[l]) * u.psi[lat.site(ix + 1, iy)]) / h;
        }
        if (iy < N - 1)
            for (int ix = 0; ix < N; ++ix) {
                int l = lat.ylink(ix, iy);
                j.y[l] = std::imag(std::conj(u.psi[lat.site(ix, iy)]) *
                                   std::polar(1.0, -h * u.ay[l]) * u.psi[lat.site(ix, iy + 1)]) / h;
            }
    });
    return j;
}

// Exact gradient of the discrete energy.  Checked against centered differences
// of energy() in arbitrary directions; no boundary masking here.
//
// Two passes: the first caches the link phase e^{-i h A_l} (the only
// trigonometry), the covariant difference D_l, and the current j_l per link
// plus the plaquette curl; the second assembles per-site and per-link gradient
// components from those caches.  This is the hot path of both evolvers.
inline void gl_gradient_into(const FieldState& u, FieldState& g) {
    const LatticeSpec& lat = u.lattice;
    int N = lat.points_per_side;
    double h = lat.spacing();
    double lam = u.lambda;

    g.lattice = lat;
    g.lambda = lam;
    g.psi.assign(lat.num_sites(), complex_t{});
    g.ax.assign(lat.num_xlinks(), 0.0);
    g.ay.assign(lat.num_ylinks(), 0.0);

    // Shared across worker threads: pass two reads entries that pass one
    // wrote from neighboring row chunks.  Safe because the evolvers call this
    // from one orchestrating thread at a time; kept static so the hot path
    // never reallocates.
    static std::vector<complex_t> px, py, Dx, Dy;
    static std::vector<double> jx, jy, B;
    px.resize(lat.num_xlinks());
    Dx.resize(lat.num_xlinks());
    jx.resize(lat.num_xlinks());
    py.resize(lat.num_ylinks());
    Dy.resize(lat.num_ylinks());
    jy.resize(lat.num_ylinks());
    B.resize((N - 1) * (N - 1));

    for_rows(shared_pool(), N, [&](int iy) {
        for (int ix = 0; ix < N - 1; ++ix) {
            int l = lat.xlink(ix, iy);
            complex_t p = std::polar(1.0, -h * u.ax[l]);
            complex_t w = p * u.psi[lat.site(ix + 1, iy)];
            px[l] = p;
            Dx[l] = (w - u.psi[lat.site(ix, iy)]) / h;
            jx[l] = std::imag(std::conj(u.psi[lat.site(ix, iy)]) * w) / h;
        }
        if (iy < N - 1) {
            for (int ix = 0; ix < N; ++ix) {
                int l = lat.ylink(ix, iy);
                complex_t p = std::polar(1.0, -h * u.ay[l]);
                complex_t w = p * u.psi[lat.site(ix, iy + 1)];
                py[l] = p;
                Dy[l] = (w - u.psi[lat.site(ix, iy)]) / h;
                jy[l] = std::imag(std::conj(u.psi[lat.site(ix, iy)]) * w) / h;
            }
            for (int ix = 0; ix < N - 1; ++ix)
                B[iy * (N - 1) + ix] =
                    (u.ax[lat.xlink(ix, iy)] + u.ay[lat.ylink(ix + 1, iy)] -
                     u.ax[lat.xlink(ix, iy + 1)] - u.ay[lat.ylink(ix, iy)]) / h;
        }
    });

    auto Bat = [&](int ix, int iy) { return B[iy * (N - 1) + ix]; };
    for_rows(shared_pool(), N, [&](int iy) {
        for (int ix = 0; ix < N; ++ix) {
            int s = lat.site(ix, iy);
            complex_t acc{0.0, 0.0};
            if (ix > 0) {
                int l = lat.xlink(ix - 1, iy);
                acc += std::conj(px[l]) * Dx[l] / h;
            }
            if (ix < N - 1) acc -= Dx[lat.xlink(ix, iy)] / h;
            if (iy > 0) {
                int l = lat.ylink(ix, iy - 1);
                acc += std::conj(py[l]) * Dy[l] / h;
            }
            if (iy < N - 1) acc -= Dy[lat.ylink(ix, iy)] / h;
            g.psi[s] = acc + lam * (std::norm(u.psi[s]) - 1.0) * u.psi[s];
        }
        for (int ix = 0; ix < N - 1; ++ix) {
            int l = lat.xlink(ix, iy);
            double curl = 0.0;
            if (iy < N - 1) curl += Bat(ix, iy);
            if (iy > 0) curl -= Bat(ix, iy - 1);
            g.ax[l] = curl / h - jx[l];
        }
        if (iy < N - 1)
            for (int ix = 0; ix < N; ++ix) {
                int l = lat.ylink(ix, iy);
                double curl = 0.0;
                if (ix > 0) curl += Bat(ix - 1, iy);
                if (ix < N - 1) curl -= Bat(ix, iy);
                g.ay[l] = curl / h - jy[l];
            }
    });
}

inline FieldState gl_gradient(const FieldState& u) {
    FieldState g;
    gl_gradient_into(u, g);
    return g;
}

// Interaction part of the multi-vortex gradient:
//   || E'(glued z_1..z_m) - sum_j [dressed E'(vortex j alone)] ||.
// Each single vortex is rebuilt on the same lattice, so the shared h^2
// truncation residual cancels.  Inside the multi-vortex field the other
// factors act locally like a gauge transform of the vacuum (|psi_l| ~ 1,
// A_l ~ grad of its phase), which conjugates the psi-component of the
// single-vortex residual by prod_{l != j} psi_l; that factor multiplies the
// subtrahend, while gradient A-components are gauge-invariant and subtract
// directly.  What survives is the genuine inter-vortex force plus dressing
// errors exponentially small in the separation.
inline double excess_gradient_norm(const ProfileSet& profiles, const VortexAnsatz& ansatz,
                                   const LatticeSpec& lat) {
    FieldState g = gl_gradient(build_multivortex(profiles, ansatz, lat));
    size_t m = ansatz.positions.size();
    for (size_t j = 0; j < m; ++j) {
        VortexAnsatz one, rest;
        one.positions = {ansatz.positions[j]};
        one.degrees = {ansatz.degrees[j]};
        one.chi = ansatz.chi;
        for (size_t l = 0; l < m; ++l)
            if (l != j) {
                rest.positions.push_back(ansatz.positions[l]);
                rest.degrees.push_back(ansatz.degrees[l]);
            }
        FieldState gj = gl_gradient(build_multivortex(profiles, one, lat));
        FieldState dress = build_multivortex(profiles, rest, lat);
        for (size_t i = 0; i < g.psi.size(); ++i) g.psi[i] -= dress.psi[i] * gj.psi[i];
        for (size_t i = 0; i < g.ax.size(); ++i) g.ax[i] -= gj.ax[i];
        for (size_t i = 0; i < g.ay.size(); ++i) g.ay[i] -= gj.ay[i];
    }
    return norm(g);
}

// --- tangent modes and momenta ----------------------------------------------

// Translational mode of vortex j in direction k (k = 0 for x, 1 for y):
//   T_jk = -( e^{i chi} [prod_{l != j} psi_l] (grad_A psi)_k (x - z_j),
//             B(|x - z_j|) ek_perp ),
// with (grad_A psi)_k = [f'(r) rhat_k + i n (1-a) f / r thetahat_k] e^{i n theta}
// and e1_perp = (0, 1), e2_perp = (-1, 0).
inline FieldState translational_mode(const ProfileSet& profiles, const VortexAnsatz& ansatz,
                                     const LatticeSpec& lat, size_t j, int k) {
    validate_ansatz(ansatz, lat);
    if (j >= ansatz.positions.size()) throw config_error("translational_mode: no such vortex");
    if (k != 0 && k != 1) throw config_error("translational_mode: direction must be 0 or 1");
    size_t m = ansatz.positions.size();
    std::vector<const ProfileInterp*> ip(m);
    for (size_t l = 0; l < m; ++l) ip[l] = &detail::interp_for(profiles, ansatz.degrees[l]);

    FieldState T = make_vacuum(lat, ip[j]->lambda);
    int N = lat.points_per_side;
    double h = lat.spacing();
    int nj = ansatz.degrees[j];
    double zx = ansatz.positions[j][0], zy = ansatz.positions[j][1];

    for_rows(shared_pool(), N, [&](int iy) {
        double y = lat.coord(iy);
        for (int ix = 0; ix < N; ++ix) {
            double x = lat.coord(ix);
            double dx = x - zx, dy = y - zy;
            double r = std::max(std::hypot(dx, dy), 1e-9);
            double cx = dx / r, cy = dy / r;
            double rhat = k == 0 ? cx : cy;
            double that = k == 0 ? -cy : cx;
            complex_t grad = (ip[j]->eval_df(r) * rhat +
                              complex_t{0.0, 1.0} * (nj * ip[j]->eval_v(r) * that)) *
                             std::polar(1.0, nj * std::atan2(dy, dx));
            complex_t rest{1.0, 0.0};
            for (size_t l = 0; l < m; ++l) {
                if (l == j) continue;
                double ex = x - ansatz.positions[l][0], ey = y - ansatz.positions[l][1];
                double rl = std::hypot(ex, ey);
                rest *= ip[l]->eval_f(rl) *
                        std::polar(1.0, ansatz.degrees[l] * std::atan2(ey, ex));
            }
            if (!ansatz.chi.empty()) rest *= std::polar(1.0, ansatz.chi[lat.site(ix, iy)]);
            T.psi[lat.site(ix, iy)] = -rest * grad;
        }
        // A-part: -B ek_perp; only one Cartesian component is nonzero.
        if (k == 0) {
            if (iy < N - 1)
                for (int ix = 0; ix < N; ++ix) {
                    double dx = lat.coord(ix) - zx, dy = y + 0.5 * h - zy;
                    T.ay[lat.ylink(ix, iy)] = -ip[j]->eval_B(std::hypot(dx, dy));
                }
        } else {
            for (int ix = 0; ix < N - 1; ++ix) {
                double dx = lat.coord(ix) + 0.5 * h - zx, dy = y - zy;
                T.ax[lat.xlink(ix, iy)] = ip[j]->eval_B(std::hypot(dx, dy));
            }
        }
    });
    return T;
}

// Gauge mode G_gamma = (i gamma psi, grad_h gamma).
inline FieldState gauge_mode(const FieldState& u, const std::vector<double>& gamma) {
    const LatticeSpec& lat = u.lattice;
    if (gamma.size() != static_cast<size_t>(lat.num_sites()))
        throw config_error("gauge_mode: gamma must have one value per site");
    int N = lat.points_per_side;
    double h = lat.spacing();
    FieldState G;
    G.lattice = lat;
    G.lambda = u.lambda;
    G.psi.resize(lat.num_sites());
    G.ax.resize(lat.num_xlinks());
    G.ay.resize(lat.num_ylinks());
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N; ++ix) {
            int s = lat.site(ix, iy);
            G.psi[s] = complex_t{0.0, 1.0} * gamma[s] * u.psi[s];
        }
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N - 1; ++ix)
            G.ax[lat.xlink(ix, iy)] =
                (gamma[lat.site(ix + 1, iy)] - gamma[lat.site(ix, iy)]) / h;
    for (int iy = 0; iy < N - 1; ++iy)
        for (int ix = 0; ix < N; ++ix)
            G.ay[lat.ylink(ix, iy)] =
                (gamma[lat.site(ix, iy + 1)] - gamma[lat.site(ix, iy)]) / h;
    return G;
}

// (pi, E) = sum_j p_j . T_j + G_zeta for the glued field u.
inline MomentumState build_momentum(const ProfileSet& profiles, const VortexAnsatz& ansatz,
                                    const FieldState& u) {
    const LatticeSpec& lat = u.lattice;
    MomentumState phi = make_zero_momentum(lat);
    auto add_field = [&](double t, const FieldState& F) {
        for (size_t i = 0; i < phi.pi.size(); ++i) phi.pi[i] += t * F.psi[i];
        for (size_t i = 0; i < phi.ex.size(); ++i) phi.ex[i] += t * F.ax[i];
        for (size_t i = 0; i < phi.ey.size(); ++i) phi.ey[i] += t * F.ay[i];
    };
    if (!ansatz.momenta_p.empty())
        for (size_t j = 0; j < ansatz.positions.size(); ++j)
            for (int k = 0; k < 2; ++k) {
                double p = ansatz.momenta_p[j][k];
                if (p != 0.0) add_field(p, translational_mode(profiles, ansatz, lat, j, k));
            }
    if (!ansatz.zeta.empty()) add_field(1.0, gauge_mode(u, ansatz.zeta));
    return phi;
}

inline double hamiltonian(const FieldState& u, const MomentumState& phi) {
    if (!(u.lattice == phi.lattice)) throw config_error("hamiltonian: lattice mismatch");
    return energy(u) + 0.5 * dot(phi, phi);
}

// Temporal-gauge constraint residual rho = div_h E - Im(conj(psi) pi) on
// interior sites (backward divergence of the forward link field).  The sign
// makes rho exactly -(-lap_h + |psi|^2) zeta for a pure gauge momentum and
// keeps rho constant under the wave-equation flow; see docs/math_notes.md.
inline std::vector<double> gauss_residual_field(const FieldState& u, const MomentumState& phi) {
    if (!(u.lattice == phi.lattice)) throw config_error("gauss_residual: lattice mismatch");
    const LatticeSpec& lat = u.lattice;
    int N = lat.points_per_side;
    double h = lat.spacing();
    std::vector<double> rho(lat.num_sites(), 0.0);
    for_rows(shared_pool(), N, [&](int iy) {
        if (iy == 0 || iy == N - 1) return;
        for (int ix = 1; ix < N - 1; ++ix) {
            int s = lat.site(ix, iy);
            double div = (phi.ex[lat.xlink(ix, iy)] - phi.ex[lat.xlink(ix - 1, iy)] +
                          phi.ey[lat.ylink(ix, iy)] - phi.ey[lat.ylink(ix, iy - 1)]) / h;
            rho[s] = div - std::imag(std::conj(u.psi[s]) * phi.pi[s]);
        }
    });
    return rho;
}

inline double gauss_residual(const FieldState& u, const MomentumState& phi) {
    std::vector<double> rho = gauss_residual_field(u, phi);
    const LatticeSpec& lat = u.lattice;
    int N = lat.points_per_side;
    double s = reduce_rows(shared_pool(), N, [&](int iy) {
        double row = 0.0;
        for (int ix = 0; ix < N; ++ix) row += rho[lat.site(ix, iy)] * rho[lat.site(ix, iy)];
        return row;
    });
    double h = lat.spacing();
    return std::sqrt(h * h * s);
}

} // namespace glvx

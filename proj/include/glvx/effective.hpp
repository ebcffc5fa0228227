#pragma once
// Reduced dynamics of vortex centers.
//
// For well-separated vortices the field dynamics collapses onto the motion of
// the centers z_j against the interaction energy
//
//     W(z) = sum_{j != k} n_j n_k c_jk e^{-R_jk} / sqrt(R_jk),
//
// with pair coefficients c_jk > 0 from the radial profiles.  Two reduced laws
// are integrated here: the dissipative law gamma_j dz_j/dt = -grad_j W (RK4)
// and the second-order law gamma_j d2z_j/dt2 = -grad_j W (velocity Verlet,
// identifying the momentum p_j with dz_j/dt).  The force is the exact
// gradient of the implemented W, including the subleading 1/(2R) term, so the
// first law is exactly a Lyapunov flow for W and the second exactly conserves
// (1/2) sum gamma_j |p_j|^2 + W up to integrator error.
//
// The asymptotic form requires lambda > 1/2: below it the field-strength tail
// no longer dominates and like-signed vortices attract, for which only the
// direct lattice evaluation of W is meaningful.  Both direct W (glued-field
// energy minus isolated energies, one shared lattice so the discretization
// bias cancels) and the direct force (inner product of the energy gradient
// with the translational modes) are provided for cross-checks.

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

#include "glvx/errors.hpp"
#include "glvx/io.hpp"
#include "glvx/lattice.hpp"
#include "glvx/profile.hpp"

namespace glvx {

struct EffectiveParams {
    std::vector<int> degrees;
    std::vector<double> gamma;                     // per-vortex gamma_{n_j}
    std::vector<std::vector<double>> coefficients; // c_jk, symmetric, zero diagonal
    double lambda = 1.0;

    size_t num_vortices() const { return degrees.size(); }

    void validate() const {
        size_t m = degrees.size();
        if (gamma.size() != m || coefficients.size() != m)
            throw config_error("effective parameters have inconsistent sizes");
        for (size_t j = 0; j < m; ++j) {
            if (degrees[j] == 0) throw config_error("vortex degree must be nonzero");
            if (!(gamma[j] > 0.0)) throw config_error("gamma entries must be positive");
            if (coefficients[j].size() != m)
                throw config_error("coefficient matrix must be square");
            for (size_t k = 0; k < m; ++k) {
                if (j == k) continue;
                if (!(coefficients[j][k] > 0.0))
                    throw config_error("pair coefficients must be positive");
                if (std::abs(coefficients[j][k] - coefficients[k][j]) >
                    1e-12 * std::abs(coefficients[j][k]))
                    throw config_error("pair coefficients must be symmetric");
            }
        }
    }
};

struct EffectiveState {
    std::vector<std::array<double, 2>> positions;
    std::vector<std::array<double, 2>> momenta; // empty means all zero
};

// gamma and c_jk for a vortex list, looked up by exact degree in the given
// radial catalog.
inline EffectiveParams make_effective_params(const std::vector<VortexProfile>& catalog,
                                             const std::vector<int>& degrees) {
    auto profile_for = [&](int n) -> const VortexProfile& {
        for (const VortexProfile& p : catalog)
            if (p.params.n == n) return p;
        char msg[64];
        std::snprintf(msg, sizeof msg, "no radial profile provided for degree %d", n);
        throw config_error(msg);
    };
    EffectiveParams par;
    par.degrees = degrees;
    size_t m = degrees.size();
    if (m == 0) throw config_error("effective parameters need at least one vortex");
    par.lambda = profile_for(degrees[0]).params.lambda;
    par.gamma.resize(m);
    par.coefficients.assign(m, std::vector<double>(m, 0.0));
    for (size_t j = 0; j < m; ++j) {
        const VortexProfile& pj = profile_for(degrees[j]);
        if (std::abs(pj.params.lambda - par.lambda) > 1e-12)
            throw config_error("all profiles must share one coupling lambda");
        par.gamma[j] = pj.scalars.gamma_n > 0.0 ? pj.scalars.gamma_n : gamma_coefficient(pj);
        for (size_t k = 0; k < m; ++k) {
            if (k == j) continue;
            par.coefficients[j][k] = interaction_coefficient(pj, profile_for(degrees[k]));
        }
    }
    par.validate();
    return par;
}

namespace detail {

inline void check_effective_sizes(const EffectiveState& s, const EffectiveParams& p) {
    if (s.positions.size() != p.num_vortices())
        throw config_error("state and parameters disagree on the vortex count");
    if (!s.momenta.empty() && s.momenta.size() != s.positions.size())
        throw config_error("momenta must be empty or match the vortex count");
}

inline void check_separation(const std::vector<std::array<double, 2>>& z) {
    if (z.size() < 2) return;
    double r = min_separation(z);
    if (r <= 2.0) {
        char msg[96];
        std::snprintf(msg, sizeof msg,
                      "vortex separation %.4f fell to 2 or below; the reduced "
                      "dynamics is invalid there",
                      r);
        throw solver_error(msg);
    }
}

inline void check_type_two(double lambda) {
    if (!(lambda > 0.5))
        throw config_error("asymptotic interaction requires lambda > 1/2; below it "
                           "only the direct lattice evaluation applies");
}

// phi(R) = e^{-R}/sqrt(R) and its derivative -e^{-R}/sqrt(R) (1 + 1/(2R)).
inline double pair_phi(double R) { return std::exp(-R) / std::sqrt(R); }
inline double pair_dphi(double R) { return -pair_phi(R) * (1.0 + 0.5 / R); }

} // namespace detail

inline double interaction_energy_asymptotic(const EffectiveState& s,
                                            const EffectiveParams& p) {
    p.validate();
    detail::check_effective_sizes(s, p);
    detail::check_type_two(p.lambda);
    detail::check_separation(s.positions);
    double w = 0.0;
    for (size_t j = 0; j < p.num_vortices(); ++j)
        for (size_t k = j + 1; k < p.num_vortices(); ++k) {
            double dx = s.positions[j][0] - s.positions[k][0];
            double dy = s.positions[j][1] - s.positions[k][1];
            double R = std::hypot(dx, dy);
            w += 2.0 * p.degrees[j] * p.degrees[k] * p.coefficients[j][k] *
                 detail::pair_phi(R);
        }
    return w;
}

// -grad_{z_l} W for every l; the exact gradient of the sum above.
inline std::vector<std::array<double, 2>> force(const EffectiveState& s,
                                                const EffectiveParams& p) {
    p.validate();
    detail::check_effective_sizes(s, p);
    detail::check_type_two(p.lambda);
    detail::check_separation(s.positions);
    size_t m = p.num_vortices();
    std::vector<std::array<double, 2>> f(m, {0.0, 0.0});
    for (size_t l = 0; l < m; ++l)
        for (size_t j = 0; j < m; ++j) {
            if (j == l) continue;
            double dx = s.positions[l][0] - s.positions[j][0];
            double dy = s.positions[l][1] - s.positions[j][1];
            double R = std::hypot(dx, dy);
            double coef =
                2.0 * p.degrees[l] * p.degrees[j] * p.coefficients[l][j] *
                detail::pair_dphi(R) / R;
            f[l][0] -= coef * dx;
            f[l][1] -= coef * dy;
        }
    return f;
}

// Lattice energy of the glued configuration minus the isolated energies, all
// on one shared lattice so the shared core truncation error cancels.
inline double interaction_energy_direct(const std::vector<std::array<double, 2>>& positions,
                                        const std::vector<int>& degrees,
                                        const ProfileSet& profiles, const LatticeSpec& lat) {
    VortexAnsatz all;
    all.positions = positions;
    all.degrees = degrees;
    double w = energy(build_multivortex(profiles, all, lat));
    for (size_t j = 0; j < positions.size(); ++j) {
        VortexAnsatz one;
        one.positions = {positions[j]};
        one.degrees = {degrees[j]};
        w -= energy(build_multivortex(profiles, one, lat));
    }
    return w;
}

// Per-vortex force as the (negated) pairing of the energy gradient with the
// translational modes.
inline std::vector<std::array<double, 2>> force_direct(
    const std::vector<std::array<double, 2>>& positions, const std::vector<int>& degrees,
    const ProfileSet& profiles, const LatticeSpec& lat) {
    VortexAnsatz an;
    an.positions = positions;
    an.degrees = degrees;
    FieldState u = build_multivortex(profiles, an, lat);
    FieldState g = gl_gradient(u);
    std::vector<std::array<double, 2>> f(positions.size(), {0.0, 0.0});
    for (size_t l = 0; l < positions.size(); ++l)
        for (int k = 0; k < 2; ++k)
            f[l][k] = -dot(g, translational_mode(profiles, an, lat, l, k));
    return f;
}

namespace detail {

inline std::vector<std::array<double, 2>> velocity_gf(
    const std::vector<std::array<double, 2>>& z, const EffectiveParams& p) {
    EffectiveState s;
    s.positions = z;
    std::vector<std::array<double, 2>> v = force(s, p);
    for (size_t j = 0; j < v.size(); ++j) {
        v[j][0] /= p.gamma[j];
        v[j][1] /= p.gamma[j];
    }
    return v;
}

} // namespace detail

// One RK4 step of gamma_j dz_j/dt = -grad_j W; momenta are carried through
// untouched.
inline EffectiveState step_effective_gf(const EffectiveState& s, const EffectiveParams& p,
                                        double dt) {
    if (!(dt > 0.0)) throw config_error("time step must be positive");
    detail::check_effective_sizes(s, p);
    detail::check_separation(s.positions);
    size_t m = s.positions.size();
    auto shift = [&](const std::vector<std::array<double, 2>>& z, double c,
                     const std::vector<std::array<double, 2>>& k) {
        std::vector<std::array<double, 2>> out(m);
        for (size_t j = 0; j < m; ++j)
            out[j] = {z[j][0] + c * k[j][0], z[j][1] + c * k[j][1]};
        return out;
    };
    auto k1 = detail::velocity_gf(s.positions, p);
    auto k2 = detail::velocity_gf(shift(s.positions, 0.5 * dt, k1), p);
    auto k3 = detail::velocity_gf(shift(s.positions, 0.5 * dt, k2), p);
    auto k4 = detail::velocity_gf(shift(s.positions, dt, k3), p);
    EffectiveState out = s;
    for (size_t j = 0; j < m; ++j)
        for (int c = 0; c < 2; ++c)
            out.positions[j][c] += dt / 6.0 *
                                   (k1[j][c] + 2.0 * k2[j][c] + 2.0 * k3[j][c] + k4[j][c]);
    detail::check_separation(out.positions);
    return out;
}

// One velocity-Verlet step of dz_j/dt = p_j, gamma_j dp_j/dt = -grad_j W.
inline EffectiveState step_effective_mh(const EffectiveState& s, const EffectiveParams& p,
                                        double dt) {
    if (!(dt > 0.0)) throw config_error("time step must be positive");
    detail::check_effective_sizes(s, p);
    detail::check_separation(s.positions);
    size_t m = s.positions.size();
    EffectiveState out = s;
    if (out.momenta.empty()) out.momenta.assign(m, {0.0, 0.0});

    EffectiveState probe;
    probe.positions = out.positions;
    std::vector<std::array<double, 2>> f = force(probe, p);
    for (size_t j = 0; j < m; ++j)
        for (int c = 0; c < 2; ++c) {
            out.momenta[j][c] += 0.5 * dt * f[j][c] / p.gamma[j];
            out.positions[j][c] += dt * out.momenta[j][c];
        }
    detail::check_separation(out.positions);
    probe.positions = out.positions;
    f = force(probe, p);
    for (size_t j = 0; j < m; ++j)
        for (int c = 0; c < 2; ++c) out.momenta[j][c] += 0.5 * dt * f[j][c] / p.gamma[j];
    return out;
}

// (1/2) sum gamma_j |p_j|^2 + W, the conserved quantity of the second-order law.
inline double effective_energy(const EffectiveState& s, const EffectiveParams& p) {
    double kin = 0.0;
    if (!s.momenta.empty())
        for (size_t j = 0; j < s.momenta.size(); ++j)
            kin += 0.5 * p.gamma[j] *
                   (s.momenta[j][0] * s.momenta[j][0] + s.momenta[j][1] * s.momenta[j][1]);
    return kin + interaction_energy_asymptotic(s, p);
}

struct EffectiveTrajectory {
    std::vector<double> times;
    std::vector<EffectiveState> states;
    std::vector<double> w_series;
    std::vector<double> energy_series;

    size_t num_snapshots() const { return times.size(); }
};

namespace detail {

template <typename StepFn>
EffectiveTrajectory evolve_effective(EffectiveState s, const EffectiveParams& p, double dt,
                                     double t_end, long every, StepFn do_step) {
    if (every < 1) throw config_error("snapshot_every must be at least 1");
    EffectiveTrajectory traj;
    auto record = [&](long step) {
        traj.times.push_back(static_cast<double>(step) * dt);
        traj.states.push_back(s);
        EffectiveState zonly;
        zonly.positions = s.positions;
        traj.w_series.push_back(interaction_energy_asymptotic(zonly, p));
        traj.energy_series.push_back(effective_energy(s, p));
    };
    record(0);
    long n_steps = t_end > 0.0 ? static_cast<long>(std::ceil(t_end / dt - 1e-9)) : 0;
    for (long step = 1; step <= n_steps; ++step) {
        s = do_step(s);
        if (step % every == 0 || step == n_steps) record(step);
    }
    return traj;
}

} // namespace detail

inline EffectiveTrajectory evolve_effective_gf(const EffectiveState& initial,
                                               const EffectiveParams& p, double dt,
                                               double t_end, long every = 1) {
    p.validate();
    return detail::evolve_effective(initial, p, dt, t_end, every, [&](const EffectiveState& s) {
        return step_effective_gf(s, p, dt);
    });
}

inline EffectiveTrajectory evolve_effective_mh(const EffectiveState& initial,
                                               const EffectiveParams& p, double dt,
                                               double t_end, long every = 1) {
    p.validate();
    return detail::evolve_effective(initial, p, dt, t_end, every, [&](const EffectiveState& s) {
        return step_effective_mh(s, p, dt);
    });
}

// One row per snapshot: t, per-vortex x, y, p_x, p_y, then W and the
// effective energy.
inline void write_effective_csv(std::ostream& os, const EffectiveTrajectory& traj) {
    os << "t";
    size_t m = traj.states.empty() ? 0 : traj.states[0].positions.size();
    for (size_t j = 0; j < m; ++j)
        os << ",x" << j << ",y" << j << ",px" << j << ",py" << j;
    os << ",w,effective_energy\n";
    for (size_t k = 0; k < traj.num_snapshots(); ++k) {
        os << format_g17(traj.times[k]);
        const EffectiveState& s = traj.states[k];
        for (size_t j = 0; j < m; ++j) {
            double px = s.momenta.empty() ? 0.0 : s.momenta[j][0];
            double py = s.momenta.empty() ? 0.0 : s.momenta[j][1];
            os << ',' << format_g17(s.positions[j][0]) << ',' << format_g17(s.positions[j][1])
               << ',' << format_g17(px) << ',' << format_g17(py);
        }
        os << ',' << format_g17(traj.w_series[k]) << ',' << format_g17(traj.energy_series[k])
           << "\n";
    }
}

} // namespace glvx

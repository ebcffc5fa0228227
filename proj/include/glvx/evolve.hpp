#pragma once
// Time evolution of lattice fields.
//
// Two dynamics share one driver:
//
//   gradient flow   du/dt = -E'(u)            classical RK4, dt = cfl * h^2
//   wave dynamics   du/dt = -phi,
//                   dphi/dt = E'(u)           Stoermer-Verlet,  dt = c * h
//
// E' is the exact discrete energy gradient, masked so that boundary sites and
// links never move: the boundary layer of the initial state is preserved
// bit for bit.  For the wave dynamics the momentum is the negative time
// derivative of the field, and its frozen components are zeroed on entry so
// the drift step cannot touch the boundary either.  Verlet is symplectic for
// this separable Hamiltonian, which keeps the energy error bounded and
// O(dt^2) instead of drifting.
//
// The driver records diagnostics every snapshot_every steps: total energy,
// the Gauss-constraint residual (zero for gradient flow), and the tracked
// vortex positions and charges, streamed as CSV if a sink is given.  A
// non-finite value anywhere in the state aborts the run with the step index.

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "glvx/errors.hpp"
#include "glvx/io.hpp"
#include "glvx/lattice.hpp"
#include "glvx/tracking.hpp"

namespace glvx {

struct GfRunConfig {
    double cfl_factor = 0.1; // dt = cfl_factor * h^2, in (0, 0.2]
    double t_end = 0.0;
    long snapshot_every = 50;

    double dt_for(const LatticeSpec& lat) const {
        return cfl_factor * lat.spacing() * lat.spacing();
    }
    void validate() const {
        if (!(cfl_factor > 0.0) || cfl_factor > 0.2)
            throw config_error("gradient-flow cfl_factor must lie in (0, 0.2]");
        if (!(t_end >= 0.0)) throw config_error("t_end must be nonnegative");
        if (snapshot_every < 1) throw config_error("snapshot_every must be at least 1");
    }
};

struct MhRunConfig {
    double courant_factor = 0.25; // dt = courant_factor * h, in (0, 0.4]
    double t_end = 0.0;
    long snapshot_every = 50;

    double dt_for(const LatticeSpec& lat) const { return courant_factor * lat.spacing(); }
    void validate() const {
        if (!(courant_factor > 0.0) || courant_factor > 0.4)
            throw config_error("wave-dynamics courant_factor must lie in (0, 0.4]");
        if (!(t_end >= 0.0)) throw config_error("t_end must be nonnegative");
        if (snapshot_every < 1) throw config_error("snapshot_every must be at least 1");
    }
};

// One row per snapshot; vortex_tracks[k][j] is track j at snapshot k, in the
// track order fixed by the initial frame.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<VortexObservation>> vortex_tracks;
    std::vector<double> energy_series;
    std::vector<double> gauss_series; // wave dynamics only

    size_t num_snapshots() const { return times.size(); }
};

struct EvolveSinks {
    std::ostream* diagnostics = nullptr; // CSV rows at snapshot cadence
    std::function<void(long step, const FieldState& u, const MomentumState* phi)> snapshot;
};

namespace detail {

inline void shifted_into(const FieldState& u, double c, const FieldState& k, FieldState& w) {
    w.lattice = u.lattice;
    w.lambda = u.lambda;
    w.psi.resize(u.psi.size());
    w.ax.resize(u.ax.size());
    w.ay.resize(u.ay.size());
    for_rows(shared_pool(), u.lattice.points_per_side, [&](int iy) {
        const LatticeSpec& lat = u.lattice;
        int N = lat.points_per_side;
        for (int ix = 0; ix < N; ++ix) {
            size_t s = lat.site(ix, iy);
            w.psi[s] = u.psi[s] + c * k.psi[s];
        }
        for (int ix = 0; ix < N - 1; ++ix) {
            size_t l = lat.xlink(ix, iy);
            w.ax[l] = u.ax[l] + c * k.ax[l];
        }
        if (iy < N - 1)
            for (int ix = 0; ix < N; ++ix) {
                size_t l = lat.ylink(ix, iy);
                w.ay[l] = u.ay[l] + c * k.ay[l];
            }
    });
}

inline FieldState shifted(const FieldState& u, double c, const FieldState& k) {
    FieldState w;
    shifted_into(u, c, k, w);
    return w;
}

inline void rk4_update(FieldState& u, double dt, const FieldState& k1, const FieldState& k2,
                       const FieldState& k3, const FieldState& k4) {
    double c1 = dt / 6.0, c2 = dt / 3.0;
    for_rows(shared_pool(), u.lattice.points_per_side, [&](int iy) {
        const LatticeSpec& lat = u.lattice;
        int N = lat.points_per_side;
        for (int ix = 0; ix < N; ++ix) {
            size_t s = lat.site(ix, iy);
            u.psi[s] += c1 * (k1.psi[s] + k4.psi[s]) + c2 * (k2.psi[s] + k3.psi[s]);
        }
        for (int ix = 0; ix < N - 1; ++ix) {
            size_t l = lat.xlink(ix, iy);
            u.ax[l] += c1 * (k1.ax[l] + k4.ax[l]) + c2 * (k2.ax[l] + k3.ax[l]);
        }
        if (iy < N - 1)
            for (int ix = 0; ix < N; ++ix) {
                size_t l = lat.ylink(ix, iy);
                u.ay[l] += c1 * (k1.ay[l] + k4.ay[l]) + c2 * (k2.ay[l] + k3.ay[l]);
            }
    });
}

inline void kick(MomentumState& phi, double c, const FieldState& g) {
    for_rows(shared_pool(), phi.lattice.points_per_side, [&](int iy) {
        const LatticeSpec& lat = phi.lattice;
        int N = lat.points_per_side;
        for (int ix = 0; ix < N; ++ix) {
            size_t s = lat.site(ix, iy);
            phi.pi[s] += c * g.psi[s];
        }
        for (int ix = 0; ix < N - 1; ++ix) {
            size_t l = lat.xlink(ix, iy);
            phi.ex[l] += c * g.ax[l];
        }
        if (iy < N - 1)
            for (int ix = 0; ix < N; ++ix) {
                size_t l = lat.ylink(ix, iy);
                phi.ey[l] += c * g.ay[l];
            }
    });
}

inline void drift(FieldState& u, double dt, const MomentumState& phi) {
    for_rows(shared_pool(), u.lattice.points_per_side, [&](int iy) {
        const LatticeSpec& lat = u.lattice;
        int N = lat.points_per_side;
        for (int ix = 0; ix < N; ++ix) {
            size_t s = lat.site(ix, iy);
            u.psi[s] -= dt * phi.pi[s];
        }
        for (int ix = 0; ix < N - 1; ++ix) {
            size_t l = lat.xlink(ix, iy);
            u.ax[l] -= dt * phi.ex[l];
        }
        if (iy < N - 1)
            for (int ix = 0; ix < N; ++ix) {
                size_t l = lat.ylink(ix, iy);
                u.ay[l] -= dt * phi.ey[l];
            }
    });
}

inline void ensure_finite(const FieldState& u, const MomentumState* phi, long step) {
    auto bad_real = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x)) return true;
        return false;
    };
    bool bad = bad_real(u.ax) || bad_real(u.ay);
    if (!bad)
        for (const complex_t& z : u.psi)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                bad = true;
                break;
            }
    if (!bad && phi) {
        bad = bad_real(phi->ex) || bad_real(phi->ey);
        if (!bad)
            for (const complex_t& z : phi->pi)
                if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                    bad = true;
                    break;
                }
    }
    if (bad) {
        char msg[80];
        std::snprintf(msg, sizeof msg, "non-finite field value at step %ld", step);
        throw blowup_error(msg, step);
    }
}

template <typename StepFn, typename GaussFn>
Trajectory evolve_core(FieldState& u, MomentumState* phi, double dt, double t_end,
                       long every, StepFn do_step, GaussFn gauss_of,
                       const EvolveSinks& sinks) {
    Trajectory traj;
    TrackSet tracks;
    bool header_written = false;

    auto record = [&](long step) {
        ensure_finite(u, phi, step);
        std::vector<VortexObservation> obs = locate_vortices(u);
        std::vector<VortexObservation> row;
        if (step == 0) {
            tracks = start_tracks(obs);
            row = obs;
        } else {
            match_step(tracks, obs);
            row.reserve(tracks.num_tracks());
            for (size_t j = 0; j < tracks.num_tracks(); ++j)
                row.push_back(tracks.points[j].back());
        }
        double t = static_cast<double>(step) * dt;
        double en = energy(u);
        double gauss = gauss_of();
        traj.times.push_back(t);
        traj.energy_series.push_back(en);
        if (phi) traj.gauss_series.push_back(gauss);
        traj.vortex_tracks.push_back(row);

        if (sinks.diagnostics) {
            std::ostream& os = *sinks.diagnostics;
            if (!header_written) {
                os << "t,energy,gauss_residual";
                for (size_t j = 0; j < row.size(); ++j)
                    os << ",x" << j << ",y" << j << ",charge" << j;
                os << "\n";
                header_written = true;
            }
            os << format_g17(t) << ',' << format_g17(en) << ',' << format_g17(gauss);
            for (const VortexObservation& o : row)
                os << ',' << format_g17(o.x) << ',' << format_g17(o.y) << ','
                   << o.charge;
            os << "\n";
        }
        if (sinks.snapshot) sinks.snapshot(step, u, phi);
    };

    record(0);
    long n_steps =
        t_end > 0.0 ? static_cast<long>(std::ceil(t_end / dt - 1e-9)) : 0;
    for (long step = 1; step <= n_steps; ++step) {
        do_step();
        if (step % every == 0 || step == n_steps) record(step);
    }
    return traj;
}

} // namespace detail

// One RK4 step of du/dt = -E'(u) with the boundary frozen.  The stage
// buffers are static under the same single-orchestrator rule as
// gl_gradient's scratch; a fresh stage state is several megabytes, and
// reallocating seven of them every step dominates the stepping cost.
inline void step_gradient_flow(FieldState& u, double dt) {
    static FieldState k1, k2, k3, k4, w;
    gl_gradient_into(u, k1);
    apply_interior_mask(k1);
    detail::shifted_into(u, -0.5 * dt, k1, w);
    gl_gradient_into(w, k2);
    apply_interior_mask(k2);
    detail::shifted_into(u, -0.5 * dt, k2, w);
    gl_gradient_into(w, k3);
    apply_interior_mask(k3);
    detail::shifted_into(u, -dt, k3, w);
    gl_gradient_into(w, k4);
    apply_interior_mask(k4);
    detail::rk4_update(u, -dt, k1, k2, k3, k4);
}

// One Stoermer-Verlet step of du/dt = -phi, dphi/dt = E'(u).
inline void step_maxwell_higgs(FieldState& u, MomentumState& phi, double dt) {
    static FieldState g;
    gl_gradient_into(u, g);
    apply_interior_mask(g);
    detail::kick(phi, 0.5 * dt, g);
    detail::drift(u, dt, phi);
    gl_gradient_into(u, g);
    apply_interior_mask(g);
    detail::kick(phi, 0.5 * dt, g);
}

inline Trajectory evolve_gradient_flow(FieldState& u, const GfRunConfig& cfg,
                                       const EvolveSinks& sinks = {}) {
    cfg.validate();
    u.lattice.validate();
    double dt = cfg.dt_for(u.lattice);
    return detail::evolve_core(
        u, nullptr, dt, cfg.t_end, cfg.snapshot_every,
        [&] { step_gradient_flow(u, dt); }, [] { return 0.0; }, sinks);
}

inline Trajectory evolve_maxwell_higgs(FieldState& u, MomentumState& phi,
                                       const MhRunConfig& cfg,
                                       const EvolveSinks& sinks = {}) {
    cfg.validate();
    u.lattice.validate();
    if (!(phi.lattice == u.lattice))
        throw config_error("field and momentum live on different lattices");
    apply_interior_mask(phi);
    double dt = cfg.dt_for(u.lattice);
    return detail::evolve_core(
        u, &phi, dt, cfg.t_end, cfg.snapshot_every,
        [&] { step_maxwell_higgs(u, phi, dt); }, [&] { return gauss_residual(u, phi); },
        sinks);
}

// Long-form per-vortex history: one row per (snapshot, track).
inline void write_track_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,vortex_id,charge,x,y,core_value\n";
    for (size_t k = 0; k < traj.num_snapshots(); ++k)
        for (size_t j = 0; j < traj.vortex_tracks[k].size(); ++j) {
            const VortexObservation& o = traj.vortex_tracks[k][j];
            os << format_g17(traj.times[k]) << ',' << j << ',' << o.charge << ','
               << format_g17(o.x) << ',' << format_g17(o.y) << ','
               << format_g17(o.core_value) << "\n";
        }
}

} // namespace glvx

#pragma once

// End-to-end experiment runner and trajectory comparison.
//
// run_experiment takes a validated configuration and produces every artifact
// in the output directory: the canonical config echo, initial/final field
// snapshots, per-step diagnostics, vortex tracks, the companion
// point-vortex run on a matched time grid, and a comparison report with a
// pass/fail verdict.  compare_trajectories is a pure function of two stored
// trajectory series plus the model parameters, so a verdict written to
// report.json can always be recomputed from tracks.csv and effective.csv
// alone; read_track_csv and read_effective_csv invert the writers.
//
// Sign bookkeeping is concentrated here and nowhere else: a configured
// momentum (px, py) is the velocity the vortex center should start with.
// The field-level boost that produces velocity v carries momentum -v, so
// the lattice ansatz receives (-px, -py) while the companion point-vortex
// state receives (+px, +py).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "glvx/config.hpp"
#include "glvx/effective.hpp"
#include "glvx/errors.hpp"
#include "glvx/evolve.hpp"
#include "glvx/io.hpp"
#include "glvx/lattice.hpp"
#include "glvx/profile.hpp"
#include "glvx/snapshot.hpp"
#include "glvx/tracking.hpp"

namespace glvx {

struct ComparisonReport {
    double epsilon = 0.0;         // e^{-R0}/sqrt(R0) at the initial minimum separation
    double lattice_spacing = 0.0; // deviation threshold scale
    double momentum_scale = 0.0;  // wave dynamics: largest initial |p|, else 0
    std::vector<double> times;        // PDE snapshot times
    std::vector<double> deviation;    // max over vortices of |z_pde - z_eff|
    std::vector<double> law_residual_times; // interior snapshots with a defined residual
    std::vector<double> law_residual;
    double sup_deviation = 0.0;
    double max_law_residual = 0.0;
    CompareThresholds thresholds;
    bool deviation_pass = false;
    bool law_pass = false;
    bool pass = false;
};

namespace detail {

// Permutation sending point-vortex index j to the PDE track holding the
// nearest initial observation.  Greedy on ascending distance; any collision
// or a charge disagreement means the two series describe different runs.
inline std::vector<size_t> match_tracks(const std::vector<VortexObservation>& first_frame,
                                        const std::vector<std::array<double, 2>>& z0,
                                        const std::vector<int>& degrees) {
    size_t m = z0.size();
    if (first_frame.size() != m)
        throw config_error("track mismatch: the field run tracked " +
                           std::to_string(first_frame.size()) + " vortices but the point law has " +
                           std::to_string(m));
    std::vector<std::pair<double, std::pair<size_t, size_t>>> pairs;
    for (size_t j = 0; j < m; ++j)
        for (size_t k = 0; k < m; ++k)
            pairs.push_back({std::hypot(z0[j][0] - first_frame[k].x, z0[j][1] - first_frame[k].y),
                             {j, k}});
    std::sort(pairs.begin(), pairs.end());
    std::vector<size_t> to_track(m, m);
    std::vector<bool> used(m, false);
    for (const auto& pr : pairs) {
        size_t j = pr.second.first, k = pr.second.second;
        if (to_track[j] != m || used[k]) continue;
        to_track[j] = k;
        used[k] = true;
    }
    for (size_t j = 0; j < m; ++j) {
        if (std::hypot(z0[j][0] - first_frame[to_track[j]].x,
                       z0[j][1] - first_frame[to_track[j]].y) > 1.0)
            throw config_error("track mismatch: no initial observation within 1 unit of vortex " +
                               std::to_string(j));
        if (first_frame[to_track[j]].charge != degrees[j])
            throw config_error("track mismatch: vortex " + std::to_string(j) + " has degree " +
                               std::to_string(degrees[j]) + " but its track carries charge " +
                               std::to_string(first_frame[to_track[j]].charge));
    }
    return to_track;
}

// Linear interpolation of the point-vortex series at time t.
inline EffectiveState resample_effective(const EffectiveTrajectory& eff, double t) {
    const std::vector<double>& ts = eff.times;
    if (ts.empty()) throw config_error("comparison needs a nonempty point-vortex series");
    double slack = 1e-9 * (1.0 + std::abs(ts.back()));
    if (t < ts.front() - slack || t > ts.back() + slack)
        throw config_error("comparison needs point-vortex data at time " + std::to_string(t) +
                           " but the stored series ends at " + std::to_string(ts.back()));
    size_t hi = std::upper_bound(ts.begin(), ts.end(), t) - ts.begin();
    if (hi == 0) hi = 1;
    if (hi == ts.size()) hi = ts.size() - 1;
    size_t lo = hi - 1;
    double w = (ts[hi] > ts[lo]) ? (t - ts[lo]) / (ts[hi] - ts[lo]) : 0.0;
    w = std::min(1.0, std::max(0.0, w));
    const EffectiveState& a = eff.states[lo];
    const EffectiveState& b = eff.states[hi];
    EffectiveState out;
    size_t m = a.positions.size();
    out.positions.resize(m);
    for (size_t j = 0; j < m; ++j)
        for (int c = 0; c < 2; ++c)
            out.positions[j][c] = (1.0 - w) * a.positions[j][c] + w * b.positions[j][c];
    if (!a.momenta.empty() && !b.momenta.empty()) {
        out.momenta.resize(m);
        for (size_t j = 0; j < m; ++j)
            for (int c = 0; c < 2; ++c)
                out.momenta[j][c] = (1.0 - w) * a.momenta[j][c] + w * b.momenta[j][c];
    }
    return out;
}

} // namespace detail

// Measure how far the field-level run strays from the point-vortex law.
// Deviation compares positions snapshot by snapshot; the law residual checks
// the motion law itself on the PDE tracks, with center velocities from
// centered differences at interior snapshots.  For first-order dynamics the
// residual is |gamma dz/dt + grad W| relative to |grad W|; for second-order
// dynamics it is |dz/dt - p_eff| relative to the largest initial momentum.
inline ComparisonReport compare_trajectories(const Trajectory& pde,
                                             const EffectiveTrajectory& eff,
                                             const EffectiveParams& params, ExperimentModel model,
                                             double lattice_spacing,
                                             const CompareThresholds& thresholds = {}) {
    params.validate();
    if (pde.num_snapshots() == 0 || eff.num_snapshots() == 0)
        throw config_error("comparison needs at least one snapshot in each series");
    size_t m = params.num_vortices();
    if (eff.states[0].positions.size() != m)
        throw config_error("track mismatch: point-vortex series width disagrees with parameters");
    for (size_t k = 0; k < pde.num_snapshots(); ++k)
        if (pde.vortex_tracks[k].size() != m)
            throw config_error("track mismatch: snapshot " + std::to_string(k) + " tracks " +
                               std::to_string(pde.vortex_tracks[k].size()) +
                               " vortices, expected " + std::to_string(m));
    bool second_order = model_is_second_order(model);

    ComparisonReport rep;
    rep.lattice_spacing = lattice_spacing;
    rep.thresholds = thresholds;
    double r0 = min_separation(eff.states[0].positions);
    if (std::isfinite(r0) && r0 > 0.0) rep.epsilon = std::exp(-r0) / std::sqrt(r0);
    if (second_order && !eff.states[0].momenta.empty())
        for (const std::array<double, 2>& p : eff.states[0].momenta)
            rep.momentum_scale = std::max(rep.momentum_scale, std::hypot(p[0], p[1]));

    std::vector<size_t> to_track =
        detail::match_tracks(pde.vortex_tracks[0], eff.states[0].positions, params.degrees);

    size_t K = pde.num_snapshots();
    rep.times = pde.times;
    rep.deviation.resize(K);
    for (size_t k = 0; k < K; ++k) {
        EffectiveState s = detail::resample_effective(eff, pde.times[k]);
        double worst = 0.0;
        for (size_t j = 0; j < m; ++j) {
            const VortexObservation& o = pde.vortex_tracks[k][to_track[j]];
            worst = std::max(worst,
                             std::hypot(o.x - s.positions[j][0], o.y - s.positions[j][1]));
        }
        rep.deviation[k] = worst;
        rep.sup_deviation = std::max(rep.sup_deviation, worst);
    }

    double p_scale = rep.momentum_scale > 0.0 ? rep.momentum_scale : 1.0;
    for (size_t k = 1; k + 1 < K; ++k) {
        double dt2 = pde.times[k + 1] - pde.times[k - 1];
        if (!(dt2 > 0.0)) continue;
        std::vector<std::array<double, 2>> zdot(m), z(m);
        for (size_t j = 0; j < m; ++j) {
            const VortexObservation& prev = pde.vortex_tracks[k - 1][to_track[j]];
            const VortexObservation& here = pde.vortex_tracks[k][to_track[j]];
            const VortexObservation& next = pde.vortex_tracks[k + 1][to_track[j]];
            zdot[j] = {(next.x - prev.x) / dt2, (next.y - prev.y) / dt2};
            z[j] = {here.x, here.y};
        }
        double worst = -1.0;
        if (second_order) {
            EffectiveState s = detail::resample_effective(eff, pde.times[k]);
            for (size_t j = 0; j < m; ++j) {
                double px = s.momenta.empty() ? 0.0 : s.momenta[j][0];
                double py = s.momenta.empty() ? 0.0 : s.momenta[j][1];
                worst = std::max(worst,
                                 std::hypot(zdot[j][0] - px, zdot[j][1] - py) / p_scale);
            }
        } else {
            EffectiveState s;
            s.positions = z;
            std::vector<std::array<double, 2>> f = force(s, params);
            for (size_t j = 0; j < m; ++j) {
                double fmag = std::hypot(f[j][0], f[j][1]);
                if (fmag < 1e-300) continue;
                worst = std::max(worst, std::hypot(params.gamma[j] * zdot[j][0] - f[j][0],
                                                   params.gamma[j] * zdot[j][1] - f[j][1]) /
                                            fmag);
            }
        }
        if (worst < 0.0) continue;
        rep.law_residual_times.push_back(pde.times[k]);
        rep.law_residual.push_back(worst);
        rep.max_law_residual = std::max(rep.max_law_residual, worst);
    }

    rep.deviation_pass = rep.sup_deviation <= thresholds.deviation_factor * lattice_spacing;
    rep.law_pass = rep.max_law_residual <= thresholds.law_residual_limit;
    rep.pass = rep.deviation_pass && rep.law_pass;
    return rep;
}

inline nlohmann::ordered_json report_to_json(const ComparisonReport& rep) {
    nlohmann::ordered_json j;
    j["epsilon"] = rep.epsilon;
    j["lattice_spacing"] = rep.lattice_spacing;
    j["momentum_scale"] = rep.momentum_scale;
    j["thresholds"] = {{"deviation_factor", rep.thresholds.deviation_factor},
                       {"law_residual_limit", rep.thresholds.law_residual_limit}};
    j["sup_deviation"] = rep.sup_deviation;
    j["max_law_residual"] = rep.max_law_residual;
    j["deviation_pass"] = rep.deviation_pass;
    j["law_pass"] = rep.law_pass;
    j["pass"] = rep.pass;
    j["series"] = {{"times", rep.times},
                   {"deviation", rep.deviation},
                   {"law_residual_times", rep.law_residual_times},
                   {"law_residual", rep.law_residual}};
    return j;
}

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline double csv_number(const std::string& cell, const std::string& where, long lineno) {
    const char* s = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw config_error(where + ": line " + std::to_string(lineno) + ": cannot parse number '" +
                           cell + "'");
    return v;
}

inline long csv_integer(const std::string& cell, const std::string& where, long lineno) {
    double v = csv_number(cell, where, lineno);
    long n = static_cast<long>(std::llround(v));
    if (static_cast<double>(n) != v)
        throw config_error(where + ": line " + std::to_string(lineno) + ": expected an integer, got '" +
                           cell + "'");
    return n;
}

} // namespace detail

// Inverse of write_track_csv.  Rows sharing one time value form a snapshot;
// energy and Gauss columns are not stored in this format, so those series
// come back empty.
inline Trajectory read_track_csv(std::istream& is, const std::string& where = "tracks") {
    std::string line;
    if (!std::getline(is, line) || line != "t,vortex_id,charge,x,y,core_value")
        throw config_error(where + ": missing or unexpected track header");
    Trajectory traj;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells = detail::split_csv_row(line);
        if (cells.size() != 6)
            throw config_error(where + ": line " + std::to_string(lineno) + ": expected 6 columns, got " +
                               std::to_string(cells.size()));
        double t = detail::csv_number(cells[0], where, lineno);
        long id = detail::csv_integer(cells[1], where, lineno);
        VortexObservation o;
        o.charge = static_cast<int>(detail::csv_integer(cells[2], where, lineno));
        o.x = detail::csv_number(cells[3], where, lineno);
        o.y = detail::csv_number(cells[4], where, lineno);
        o.core_value = detail::csv_number(cells[5], where, lineno);
        if (traj.times.empty() || t != traj.times.back()) {
            traj.times.push_back(t);
            traj.vortex_tracks.emplace_back();
        }
        if (id != static_cast<long>(traj.vortex_tracks.back().size()))
            throw config_error(where + ": line " + std::to_string(lineno) +
                               ": vortex ids must count up from 0 within a snapshot");
        traj.vortex_tracks.back().push_back(o);
    }
    if (traj.times.empty()) throw config_error(where + ": no data rows");
    return traj;
}

// Inverse of write_effective_csv.  The vortex count is deduced from the
// header width; momenta are stored for every row, so they come back
// populated even for first-order runs (as zeros).
inline EffectiveTrajectory read_effective_csv(std::istream& is,
                                              const std::string& where = "effective") {
    std::string line;
    if (!std::getline(is, line)) throw config_error(where + ": empty file");
    std::vector<std::string> head = detail::split_csv_row(line);
    if (head.size() < 7 || head[0] != "t" || (head.size() - 3) % 4 != 0 ||
        head[head.size() - 2] != "w" || head.back() != "effective_energy")
        throw config_error(where + ": unexpected point-vortex header");
    size_t m = (head.size() - 3) / 4;
    for (size_t j = 0; j < m; ++j) {
        std::string idx = std::to_string(j);
        if (head[1 + 4 * j] != "x" + idx || head[2 + 4 * j] != "y" + idx ||
            head[3 + 4 * j] != "px" + idx || head[4 + 4 * j] != "py" + idx)
            throw config_error(where + ": unexpected point-vortex header");
    }
    EffectiveTrajectory traj;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells = detail::split_csv_row(line);
        if (cells.size() != head.size())
            throw config_error(where + ": line " + std::to_string(lineno) + ": expected " +
                               std::to_string(head.size()) + " columns, got " +
                               std::to_string(cells.size()));
        traj.times.push_back(detail::csv_number(cells[0], where, lineno));
        EffectiveState s;
        s.positions.resize(m);
        s.momenta.resize(m);
        for (size_t j = 0; j < m; ++j) {
            s.positions[j] = {detail::csv_number(cells[1 + 4 * j], where, lineno),
                              detail::csv_number(cells[2 + 4 * j], where, lineno)};
            s.momenta[j] = {detail::csv_number(cells[3 + 4 * j], where, lineno),
                            detail::csv_number(cells[4 + 4 * j], where, lineno)};
        }
        traj.states.push_back(std::move(s));
        traj.w_series.push_back(detail::csv_number(cells[head.size() - 2], where, lineno));
        traj.energy_series.push_back(detail::csv_number(cells.back(), where, lineno));
    }
    if (traj.times.empty()) throw config_error(where + ": no data rows");
    return traj;
}

struct RunArtifacts {
    std::string dir;
    Trajectory pde;                // field-level runs only
    EffectiveTrajectory effective; // point-vortex runs and companions
    ComparisonReport report;
    bool has_report = false;
};

namespace detail {

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw config_error("cannot write " + path);
    os << text;
    if (!os) throw config_error("cannot write " + path);
}

template <typename WriteFn>
void write_stream_file(const std::string& path, WriteFn fn) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw config_error("cannot write " + path);
    fn(os);
    os.flush();
    if (!os) throw config_error("cannot write " + path);
}

// Radial profiles for every distinct degree in the configuration, plus the
// point-vortex parameter set derived from them.
inline std::vector<VortexProfile> solve_catalog(const ExperimentConfig& cfg) {
    std::set<int> degrees;
    for (const VortexSpec& v : cfg.vortices) degrees.insert(v.n);
    std::vector<VortexProfile> catalog;
    for (int n : degrees) catalog.push_back(solve_profile(default_profile_params(n, cfg.lambda)));
    return catalog;
}

inline EffectiveState initial_effective_state(const ExperimentConfig& cfg, bool with_momenta) {
    EffectiveState s;
    for (const VortexSpec& v : cfg.vortices) s.positions.push_back({v.x, v.y});
    if (with_momenta)
        for (const VortexSpec& v : cfg.vortices) s.momenta.push_back({v.px, v.py});
    return s;
}

// The point-vortex companion runs on a time grid that subdivides the PDE
// snapshot interval, so every PDE snapshot time is covered and the step
// never exceeds 0.05.
inline EffectiveTrajectory companion_effective(const ExperimentConfig& cfg,
                                               const EffectiveParams& params, double dt_pde) {
    double t_end = cfg.run.t_end;
    long n_pde = t_end > 0.0 ? static_cast<long>(std::ceil(t_end / dt_pde - 1e-9)) : 0;
    double t_last = static_cast<double>(n_pde) * dt_pde;
    double snap_dt = static_cast<double>(cfg.run.snapshot_every) * dt_pde;
    long substeps = std::max(1L, static_cast<long>(std::ceil(snap_dt / 0.05 - 1e-9)));
    double dt_eff = snap_dt / static_cast<double>(substeps);
    EffectiveState init = initial_effective_state(cfg, model_is_second_order(cfg.model));
    if (cfg.model == ExperimentModel::gradient_flow)
        return evolve_effective_gf(init, params, dt_eff, t_last, substeps);
    return evolve_effective_mh(init, params, dt_eff, t_last, substeps);
}

} // namespace detail

// Run the configured experiment and write all artifacts under
// cfg.output_dir.  Field-level models write initial.glvx, diagnostics.csv,
// tracks.csv, final.glvx, and, when the asymptotic pair law applies
// (lambda > 1/2), effective.csv and report.json from the companion run.
// Point-vortex models write effective.csv only.  config.toml always echoes
// the canonical form of the configuration that ran.
inline RunArtifacts run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw config_error("cannot create output directory " + cfg.output_dir + ": " +
                               ec.message());
    RunArtifacts art;
    art.dir = cfg.output_dir;
    auto path = [&](const char* name) { return cfg.output_dir + "/" + name; };
    detail::write_text_file(path("config.toml"), serialize_config(cfg));

    std::vector<VortexProfile> catalog = detail::solve_catalog(cfg);
    std::vector<int> degrees;
    for (const VortexSpec& v : cfg.vortices) degrees.push_back(v.n);

    if (!model_is_lattice(cfg.model)) {
        EffectiveParams params = make_effective_params(catalog, degrees);
        EffectiveState init =
            detail::initial_effective_state(cfg, model_is_second_order(cfg.model));
        art.effective = cfg.model == ExperimentModel::effective_gf
                            ? evolve_effective_gf(init, params, cfg.run.dt_effective,
                                                  cfg.run.t_end, cfg.run.snapshot_every)
                            : evolve_effective_mh(init, params, cfg.run.dt_effective,
                                                  cfg.run.t_end, cfg.run.snapshot_every);
        detail::write_stream_file(path("effective.csv"),
                                  [&](std::ostream& os) { write_effective_csv(os, art.effective); });
        return art;
    }

    ProfileSet profiles = make_profile_set(catalog);
    LatticeSpec lat{cfg.lattice.extent, cfg.lattice.points_per_side};
    VortexAnsatz ansatz;
    ansatz.degrees = degrees;
    for (const VortexSpec& v : cfg.vortices) ansatz.positions.push_back({v.x, v.y});
    bool wave = cfg.model == ExperimentModel::maxwell_higgs;
    if (wave)
        for (const VortexSpec& v : cfg.vortices) ansatz.momenta_p.push_back({-v.px, -v.py});

    FieldState u = build_multivortex(profiles, ansatz, lat);
    MomentumState phi;
    if (wave) phi = build_momentum(profiles, ansatz, u);
    write_snapshot(path("initial.glvx"), u, wave ? &phi : nullptr);

    {
        std::ofstream diag(path("diagnostics.csv"), std::ios::binary);
        if (!diag) throw config_error("cannot write " + path("diagnostics.csv"));
        EvolveSinks sinks;
        sinks.diagnostics = &diag;
        art.pde = wave ? evolve_maxwell_higgs(u, phi, cfg.run.mh(), sinks)
                       : evolve_gradient_flow(u, cfg.run.gf(), sinks);
        diag.flush();
        if (!diag) throw config_error("cannot write " + path("diagnostics.csv"));
    }
    write_snapshot(path("final.glvx"), u, wave ? &phi : nullptr);
    detail::write_stream_file(path("tracks.csv"),
                              [&](std::ostream& os) { write_track_csv(os, art.pde); });

    if (cfg.lambda > 0.5) {
        EffectiveParams params = make_effective_params(catalog, degrees);
        double dt_pde = wave ? cfg.run.mh().dt_for(lat) : cfg.run.gf().dt_for(lat);
        art.effective = detail::companion_effective(cfg, params, dt_pde);
        detail::write_stream_file(path("effective.csv"),
                                  [&](std::ostream& os) { write_effective_csv(os, art.effective); });
        art.report = compare_trajectories(art.pde, art.effective, params, cfg.model,
                                          lat.spacing(), cfg.compare);
        art.has_report = true;
        detail::write_text_file(path("report.json"), report_to_json(art.report).dump(2) + "\n");
    }
    return art;
}

// Recompute the comparison verdict for a finished field-level run from its
// stored artifacts alone.  Reads config.toml, tracks.csv, and effective.csv
// from the directory, re-derives the point-vortex parameters, and rewrites
// report.json.
inline ComparisonReport recompare_run(const std::string& dir) {
    ExperimentConfig cfg = parse_config(dir + "/config.toml");
    if (!model_is_lattice(cfg.model))
        throw config_error("comparison applies to field-level runs; " + dir +
                           " holds a point-vortex run");
    if (!(cfg.lambda > 0.5))
        throw config_error("comparison needs the asymptotic pair law, which requires lambda > 1/2");
    std::ifstream ts(dir + "/tracks.csv", std::ios::binary);
    if (!ts) throw config_error("cannot open " + dir + "/tracks.csv");
    Trajectory pde = read_track_csv(ts, dir + "/tracks.csv");
    std::ifstream es(dir + "/effective.csv", std::ios::binary);
    if (!es) throw config_error("cannot open " + dir + "/effective.csv");
    EffectiveTrajectory eff = read_effective_csv(es, dir + "/effective.csv");

    std::vector<VortexProfile> catalog = detail::solve_catalog(cfg);
    std::vector<int> degrees;
    for (const VortexSpec& v : cfg.vortices) degrees.push_back(v.n);
    EffectiveParams params = make_effective_params(catalog, degrees);
    LatticeSpec lat{cfg.lattice.extent, cfg.lattice.points_per_side};
    ComparisonReport rep =
        compare_trajectories(pde, eff, params, cfg.model, lat.spacing(), cfg.compare);
    detail::write_text_file(dir + "/report.json", report_to_json(rep).dump(2) + "\n");
    return rep;
}

} // namespace glvx

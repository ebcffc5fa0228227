#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include "glvx/evolve.hpp"
#include "glvx/lattice.hpp"
#include "glvx/profile.hpp"

using namespace glvx;

namespace {

const VortexProfile& radial(int n, double lambda) {
    static std::map<std::pair<int, double>, VortexProfile> cache;
    auto key = std::make_pair(n, lambda);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, solve_profile(default_profile_params(n, lambda))).first;
    return it->second;
}

const ProfileSet& interps(double lambda) {
    static std::map<double, ProfileSet> cache;
    auto it = cache.find(lambda);
    if (it == cache.end())
        it = cache.emplace(lambda, make_profile_set({radial(1, lambda)})).first;
    return it->second;
}

LatticeSpec small_lattice() {
    LatticeSpec lat;
    lat.extent = 12.0;
    lat.points_per_side = 97;
    return lat;
}

FieldState single(double lambda, double x0, double y0, LatticeSpec lat) {
    VortexAnsatz an;
    an.positions = {{x0, y0}};
    an.degrees = {1};
    return build_multivortex(interps(lambda), an, lat);
}

FieldState boosted_single(double lambda, double px, double py, LatticeSpec lat,
                          MomentumState& phi_out) {
    VortexAnsatz an;
    an.positions = {{0.3, -0.2}};
    an.degrees = {1};
    an.momenta_p = {{px, py}};
    FieldState u = build_multivortex(interps(lambda), an, lat);
    phi_out = build_momentum(interps(lambda), an, u);
    return u;
}

std::vector<size_t> boundary_sites(const LatticeSpec& lat) {
    std::vector<size_t> out;
    int N = lat.points_per_side;
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N; ++ix)
            if (frozen_site(lat, ix, iy)) out.push_back(lat.site(ix, iy));
    return out;
}

} // namespace

TEST_CASE("run configs reject out-of-range parameters") {
    GfRunConfig gf;
    gf.cfl_factor = 0.0;
    CHECK_THROWS_AS(gf.validate(), config_error);
    gf.cfl_factor = 0.25;
    CHECK_THROWS_AS(gf.validate(), config_error);
    gf.cfl_factor = 0.2;
    gf.snapshot_every = 0;
    CHECK_THROWS_AS(gf.validate(), config_error);
    gf.snapshot_every = 10;
    gf.t_end = -1.0;
    CHECK_THROWS_AS(gf.validate(), config_error);
    gf.t_end = 1.0;
    CHECK_NOTHROW(gf.validate());

    MhRunConfig mh;
    mh.courant_factor = 0.41;
    CHECK_THROWS_AS(mh.validate(), config_error);
    mh.courant_factor = 0.4;
    CHECK_NOTHROW(mh.validate());
}

TEST_CASE("the vacuum is an exact fixed point of both dynamics") {
    LatticeSpec lat = small_lattice();
    FieldState u = make_vacuum(lat, 1.0);
    FieldState u0 = u;
    step_gradient_flow(u, 0.01);
    CHECK(u.psi == u0.psi);
    CHECK(u.ax == u0.ax);
    CHECK(u.ay == u0.ay);

    MomentumState phi = make_zero_momentum(lat);
    step_maxwell_higgs(u, phi, 0.01);
    CHECK(u.psi == u0.psi);
    double pmax = 0.0;
    for (const complex_t& z : phi.pi) pmax = std::max(pmax, std::abs(z));
    CHECK(pmax == 0.0);
}

TEST_CASE("gradient flow keeps a glued vortex near itself") {
    LatticeSpec lat = small_lattice();
    FieldState u = single(1.0, 0.0, 0.0, lat);
    FieldState u0 = u;
    FieldState g0 = gl_gradient(u0);
    apply_interior_mask(g0);
    double res0 = norm(g0);

    GfRunConfig cfg;
    cfg.t_end = 5.0;
    cfg.snapshot_every = 200;
    Trajectory traj = evolve_gradient_flow(u, cfg);

    FieldState diff = detail::shifted(u, -1.0, u0);
    CHECK(norm(diff) <= 10.0 * res0 * cfg.t_end);
    REQUIRE(traj.num_snapshots() >= 2);
    CHECK(traj.vortex_tracks.back().size() == 1);
    CHECK(traj.vortex_tracks.back()[0].charge == 1);
}

TEST_CASE("gradient flow never increases the energy") {
    LatticeSpec lat = small_lattice();
    FieldState u = single(1.0, 0.4, -0.3, lat);
    int N = lat.points_per_side;
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N; ++ix) {
            double x = lat.coord(ix) - 2.0, y = lat.coord(iy) + 1.0;
            u.psi[lat.site(ix, iy)] += 0.05 * std::exp(-0.5 * (x * x + y * y));
        }
    apply_interior_mask(u); // the bump must not touch the frozen layer
    double dt = GfRunConfig{}.dt_for(lat);
    double e_prev = energy(u);
    for (int k = 0; k < 160; ++k) {
        step_gradient_flow(u, dt);
        double e = energy(u);
        CHECK(e <= e_prev * (1.0 + 1e-10));
        e_prev = e;
    }
}

TEST_CASE("wave dynamics conserves the hamiltonian to 1e-4 over t=10") {
    LatticeSpec lat = small_lattice();
    MomentumState phi;
    FieldState u = boosted_single(1.0, 0.08, 0.0, lat, phi);
    double h0 = hamiltonian(u, phi);
    double dt = MhRunConfig{}.dt_for(lat);
    long n_steps = static_cast<long>(std::lround(10.0 / dt));
    double worst = 0.0;
    for (long k = 0; k < n_steps; ++k) {
        step_maxwell_higgs(u, phi, dt);
        worst = std::max(worst, std::abs(hamiltonian(u, phi) - h0) / h0);
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("halving the time step quarters the energy drift") {
    LatticeSpec lat = small_lattice();
    auto drift_for = [&](double courant) {
        MomentumState phi;
        FieldState u = boosted_single(1.0, 0.08, 0.0, lat, phi);
        double h0 = hamiltonian(u, phi);
        double dt = courant * lat.spacing();
        long n_steps = static_cast<long>(std::lround(4.0 / dt));
        double worst = 0.0;
        for (long k = 0; k < n_steps; ++k) {
            step_maxwell_higgs(u, phi, dt);
            worst = std::max(worst, std::abs(hamiltonian(u, phi) - h0));
        }
        return worst;
    };
    double d1 = drift_for(0.25);
    double d2 = drift_for(0.125);
    CHECK(d1 / d2 >= 3.5);
    CHECK(d1 / d2 <= 4.5);
}

TEST_CASE("the gauss residual stays within ten times its initial size") {
    LatticeSpec lat = small_lattice();
    MomentumState phi;
    FieldState u = boosted_single(1.0, 0.06, -0.04, lat, phi);
    MhRunConfig cfg;
    cfg.t_end = 5.0;
    cfg.snapshot_every = 20;
    Trajectory traj = evolve_maxwell_higgs(u, phi, cfg);
    REQUIRE(traj.gauss_series.size() == traj.num_snapshots());
    double g0 = traj.gauss_series.front();
    for (double g : traj.gauss_series) CHECK(g <= 10.0 * g0 + 1e-6);
}

TEST_CASE("boundary values are preserved bit for bit") {
    LatticeSpec lat = small_lattice();
    auto sites = boundary_sites(lat);

    FieldState u = single(1.0, 0.5, 0.5, lat);
    FieldState u0 = u;
    GfRunConfig gf;
    gf.t_end = 50.0 * gf.dt_for(lat);
    evolve_gradient_flow(u, gf);
    for (size_t s : sites) REQUIRE(u.psi[s] == u0.psi[s]);

    MomentumState phi;
    FieldState v = boosted_single(1.0, 0.08, 0.0, lat, phi);
    FieldState v0 = v;
    MhRunConfig mh;
    mh.t_end = 50.0 * mh.dt_for(lat);
    evolve_maxwell_higgs(v, phi, mh);
    for (size_t s : sites) REQUIRE(v.psi[s] == v0.psi[s]);
    int N = lat.points_per_side;
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N - 1; ++ix)
            if (frozen_xlink(lat, ix, iy))
                REQUIRE(v.ax[lat.xlink(ix, iy)] == v0.ax[lat.xlink(ix, iy)]);
}

TEST_CASE("vortex count, charge, and boundary degree survive a run") {
    LatticeSpec lat = small_lattice();
    VortexAnsatz an;
    an.positions = {{-2.0, 0.0}, {2.0, 0.0}};
    an.degrees = {1, 1};
    FieldState u = build_multivortex(interps(2.0), an, lat);
    int deg0 = degree(u);
    GfRunConfig cfg;
    cfg.t_end = 1.0;
    cfg.snapshot_every = 40;
    Trajectory traj = evolve_gradient_flow(u, cfg);
    for (const auto& row : traj.vortex_tracks) {
        REQUIRE(row.size() == 2);
        CHECK(row[0].charge == 1);
        CHECK(row[1].charge == 1);
    }
    CHECK(degree(u) == deg0);
}

TEST_CASE("a blow-up is reported with its step index") {
    LatticeSpec lat = small_lattice();
    FieldState u = single(1.0, 0.0, 0.0, lat);
    for (complex_t& z : u.psi) z *= 1e160;
    GfRunConfig cfg;
    cfg.t_end = 10.0 * cfg.dt_for(lat);
    cfg.snapshot_every = 1;
    bool threw = false;
    try {
        evolve_gradient_flow(u, cfg);
    } catch (const blowup_error& e) {
        threw = true;
        CHECK(e.step >= 1);
    }
    CHECK(threw);
}

TEST_CASE("t_end of zero produces exactly one snapshot") {
    LatticeSpec lat = small_lattice();
    FieldState u = single(1.0, 1.0, 1.0, lat);
    GfRunConfig cfg;
    cfg.t_end = 0.0;
    Trajectory traj = evolve_gradient_flow(u, cfg);
    REQUIRE(traj.num_snapshots() == 1);
    CHECK(traj.times[0] == 0.0);
    CHECK(traj.vortex_tracks[0].size() == 1);
}

TEST_CASE("diagnostic and track CSV output is well formed") {
    LatticeSpec lat = small_lattice();
    FieldState u = single(1.0, 0.8, -0.6, lat);
    GfRunConfig cfg;
    cfg.t_end = 20.0 * cfg.dt_for(lat);
    cfg.snapshot_every = 5;

    std::ostringstream diag;
    int snapshot_calls = 0;
    EvolveSinks sinks;
    sinks.diagnostics = &diag;
    sinks.snapshot = [&](long, const FieldState&, const MomentumState* phi) {
        ++snapshot_calls;
        CHECK(phi == nullptr);
    };
    Trajectory traj = evolve_gradient_flow(u, cfg, sinks);

    std::istringstream in(diag.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "t,energy,gauss_residual,x0,y0,charge0");
    size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == traj.num_snapshots());
    CHECK(snapshot_calls == static_cast<int>(traj.num_snapshots()));

    std::ostringstream trk;
    write_track_csv(trk, traj);
    std::istringstream tin(trk.str());
    REQUIRE(std::getline(tin, line));
    CHECK(line == "t,vortex_id,charge,x,y,core_value");
    rows = 0;
    while (std::getline(tin, line)) ++rows;
    CHECK(rows == traj.num_snapshots());
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <random>
#include <utility>

#include "glvx/lattice.hpp"
#include "glvx/profile.hpp"
#include "glvx/tracking.hpp"

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
        it = cache
                 .emplace(lambda, make_profile_set({radial(1, lambda), radial(-1, lambda),
                                                    radial(2, lambda)}))
                 .first;
    return it->second;
}

LatticeSpec small_lattice() {
    LatticeSpec lat;
    lat.extent = 12.0;
    lat.points_per_side = 97;
    return lat;
}

FieldState glued(double lambda, std::vector<std::array<double, 2>> pos,
                 std::vector<int> degrees, LatticeSpec lat) {
    VortexAnsatz an;
    an.positions = std::move(pos);
    an.degrees = std::move(degrees);
    return build_multivortex(interps(lambda), an, lat);
}

// A field that is exactly linear in (x, y) has an exact bilinear interpolant,
// so the located zero must agree with the planted one to round-off.
FieldState planted_linear_zero(double x0, double y0, int sign) {
    LatticeSpec lat = small_lattice();
    FieldState u = make_vacuum(lat, 1.0);
    int N = lat.points_per_side;
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N; ++ix) {
            double x = lat.coord(ix) - x0, y = lat.coord(iy) - y0;
            u.psi[lat.site(ix, iy)] = complex_t{x, sign * y};
        }
    return u;
}

} // namespace

TEST_CASE("vacuum field contains no vortices") {
    FieldState u = make_vacuum(small_lattice(), 1.0);
    CHECK(locate_vortices(u).empty());
}

TEST_CASE("an exactly linear zero is located to round-off") {
    double x0 = 0.313, y0 = -1.217;
    for (int sign : {1, -1}) {
        FieldState u = planted_linear_zero(x0, y0, sign);
        auto obs = locate_vortices(u);
        REQUIRE(obs.size() == 1);
        CHECK(obs[0].charge == sign);
        CHECK(std::abs(obs[0].x - x0) <= 1e-12);
        CHECK(std::abs(obs[0].y - y0) <= 1e-12);
    }
}

TEST_CASE("a glued vortex is located well inside one lattice spacing") {
    LatticeSpec lat = small_lattice();
    double h = lat.spacing();
    FieldState u = glued(1.0, {{1.3, -0.7}}, {1}, lat);
    auto obs = locate_vortices(u);
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].charge == 1);
    CHECK(std::hypot(obs[0].x - 1.3, obs[0].y + 0.7) <= h);
    CHECK(obs[0].core_value < 0.3);
}

TEST_CASE("twenty random placements are each located within one spacing") {
    LatticeSpec lat = small_lattice();
    double h = lat.spacing();
    std::mt19937 rng(20240915);
    std::uniform_real_distribution<double> coord(-2.5, 2.5);
    for (int trial = 0; trial < 20; ++trial) {
        double x0 = coord(rng), y0 = coord(rng);
        int n = (trial % 2 == 0) ? 1 : -1;
        FieldState u = glued(1.0, {{x0, y0}}, {n}, lat);
        auto obs = locate_vortices(u);
        REQUIRE(obs.size() == 1);
        CHECK(obs[0].charge == n);
        CHECK(std::hypot(obs[0].x - x0, obs[0].y - y0) <= h);
    }
}

TEST_CASE("a doubly charged core is reported once with its full charge") {
    LatticeSpec lat = small_lattice();
    double h = lat.spacing();
    FieldState u = glued(1.0, {{0.9, 0.35}}, {2}, lat);
    auto obs = locate_vortices(u);
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].charge == 2);
    CHECK(std::hypot(obs[0].x - 0.9, obs[0].y - 0.35) <= 2.0 * h);
    CHECK(degree(u) == 2);
}

TEST_CASE("opposite charges in one field are both found") {
    LatticeSpec lat = small_lattice();
    double h = lat.spacing();
    FieldState u = glued(1.0, {{-3.5, 0.0}, {3.5, 0.4}}, {1, -1}, lat);
    auto obs = locate_vortices(u);
    REQUIRE(obs.size() == 2);
    CHECK(obs[0].charge + obs[1].charge == 0);
    bool left_first = obs[0].x < obs[1].x;
    const VortexObservation& plus = left_first ? obs[0] : obs[1];
    const VortexObservation& minus = left_first ? obs[1] : obs[0];
    CHECK(plus.charge == 1);
    CHECK(minus.charge == -1);
    CHECK(std::hypot(plus.x + 3.5, plus.y) <= h);
    CHECK(std::hypot(minus.x - 3.5, minus.y - 0.4) <= h);
    CHECK(degree(u) == 0);
}

TEST_CASE("charges sum to the boundary degree for three vortices") {
    LatticeSpec lat;
    lat.extent = 16.0;
    lat.points_per_side = 257;
    FieldState u = glued(2.0, {{-5.0, -3.0}, {5.0, -3.0}, {0.0, 5.660254037844386}},
                         {1, 1, 1}, lat);
    auto obs = locate_vortices(u);
    REQUIRE(obs.size() == 3);
    int total = 0;
    for (const auto& o : obs) total += o.charge;
    CHECK(total == degree(u));
}

TEST_CASE("reported positions are gauge invariant") {
    LatticeSpec lat = small_lattice();
    int N = lat.points_per_side;
    FieldState u = glued(0.5, {{-2.1, 0.6}, {2.4, -0.9}}, {1, 1}, lat);
    auto before = locate_vortices(u);
    REQUIRE(before.size() == 2);

    std::vector<double> chi(lat.num_sites());
    for (int iy = 0; iy < N; ++iy)
        for (int ix = 0; ix < N; ++ix)
            chi[lat.site(ix, iy)] = 0.4 * std::sin(0.3 * lat.coord(ix)) *
                                        std::cos(0.2 * lat.coord(iy)) +
                                    0.05 * lat.coord(ix);
    FieldState v = gauge_transform(u, chi);
    auto after = locate_vortices(v);
    REQUIRE(after.size() == 2);
    for (size_t k = 0; k < 2; ++k) {
        CHECK(after[k].charge == before[k].charge);
        CHECK(std::abs(after[k].x - before[k].x) <= 1e-8);
        CHECK(std::abs(after[k].y - before[k].y) <= 1e-8);
    }
}

TEST_CASE("a dead zone raises a degenerate-plaquette error") {
    LatticeSpec lat = small_lattice();
    FieldState u = make_vacuum(lat, 1.0);
    for (int iy = 40; iy <= 42; ++iy)
        for (int ix = 50; ix <= 52; ++ix) u.psi[lat.site(ix, iy)] = complex_t{0.0, 0.0};
    CHECK_THROWS_AS(locate_vortices(u), topology_error);
    CHECK_THROWS_WITH(locate_vortices(u), Catch::Matchers::ContainsSubstring("degenerate"));
}

TEST_CASE("tracks extend under small drifts and reject topology changes") {
    LatticeSpec lat = small_lattice();
    FieldState u0 = glued(1.0, {{-3.0, 0.0}, {3.0, 0.0}}, {1, 1}, lat);
    TrackSet ts = start_tracks(locate_vortices(u0));
    REQUIRE(ts.num_tracks() == 2);
    CHECK(ts.points[0].size() == 1);

    FieldState u1 = glued(1.0, {{-3.0 + 0.07, 0.05}, {3.0 - 0.07, 0.05}}, {1, 1}, lat);
    match_step(ts, locate_vortices(u1));
    REQUIRE(ts.points[0].size() == 2);
    REQUIRE(ts.points[1].size() == 2);
    CHECK(ts.points[0].back().x < 0.0);
    CHECK(ts.points[1].back().x > 0.0);
    CHECK(std::abs(ts.points[0].back().x - (-2.93)) < 0.15);

    SECTION("a jump beyond the matching radius is refused") {
        FieldState far = glued(1.0, {{-3.0, 2.0}, {3.0, 2.0}}, {1, 1}, lat);
        CHECK_THROWS_AS(match_step(ts, locate_vortices(far)), topology_error);
    }
    SECTION("a charge flip is refused") {
        FieldState flipped = glued(1.0, {{-3.0, 0.1}, {3.0, 0.1}}, {1, -1}, lat);
        CHECK_THROWS_AS(match_step(ts, locate_vortices(flipped)), topology_error);
    }
    SECTION("a count change is refused") {
        FieldState lone = glued(1.0, {{-3.0, 0.1}}, {1}, lat);
        CHECK_THROWS_AS(match_step(ts, locate_vortices(lone)), topology_error);
    }
}

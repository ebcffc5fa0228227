#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <utility>

#include "glvx/bessel.hpp"
#include "glvx/io.hpp"
#include "glvx/profile.hpp"

using namespace glvx;

namespace {

const VortexProfile& cached(int n, double lambda) {
    static std::map<std::pair<int, int>, VortexProfile> cache;
    auto key = std::make_pair(n, static_cast<int>(std::lround(lambda * 1000)));
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, solve_profile_full(default_profile_params(n, lambda))).first;
    return it->second;
}

} // namespace

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(solve_profile(ProfileParams{0, 1.0, 25.0, 2048}), config_error);
    CHECK_THROWS_AS(solve_profile(ProfileParams{1, -1.0, 25.0, 2048}), config_error);
    CHECK_THROWS_AS(solve_profile(ProfileParams{1, 0.0, 25.0, 2048}), config_error);
    CHECK_THROWS_AS(solve_profile(ProfileParams{1, 1.0, 10.0, 2048}), config_error); // r_max < 20
    CHECK_THROWS_AS(solve_profile(ProfileParams{1, 0.02, 25.0, 2048}), config_error); // slow tail
    CHECK_THROWS_AS(solve_profile(ProfileParams{1, 1.0, 25.0, 128}), config_error);
}

TEST_CASE("grid is uniform from zero to r_max") {
    const VortexProfile& p = cached(1, 1.0);
    REQUIRE(p.grid.r.size() == 2048);
    CHECK(p.grid.r.front() == 0.0);
    CHECK(p.grid.r.back() == Catch::Approx(25.0).margin(1e-12));
    for (size_t i = 1; i < p.grid.r.size(); ++i) CHECK(p.grid.r[i] > p.grid.r[i - 1]);
}

TEST_CASE("solver reaches the required residual") {
    for (double lam : {0.5, 1.0, 2.0})
        for (int n : {1, 2, 3}) {
            const VortexProfile& p = cached(n, lam);
            INFO("n = " << n << ", lambda = " << lam);
            CHECK(p.residual_sup <= 1e-8);
        }
}

TEST_CASE("profiles are monotone, bounded, and saturate at the far boundary") {
    for (double lam : {0.5, 1.0, 2.0}) {
        const VortexProfile& p = cached(1, lam);
        size_t N = p.f.size();
        CHECK(p.f[0] == 0.0);
        CHECK(p.a[0] == 0.0);
        for (size_t i = 0; i < N; ++i) {
            CHECK(p.f[i] >= -1e-12);
            CHECK(p.f[i] <= 1.0 + 1e-10);
            CHECK(p.a[i] >= -1e-12);
            CHECK(p.a[i] <= 1.0 + 1e-10);
            if (i > 0) {
                CHECK(p.f[i] >= p.f[i - 1] - 1e-12);
                CHECK(p.a[i] >= p.a[i - 1] - 1e-12);
            }
        }
        CHECK(p.f[N - 1] >= 1.0 - 1e-4);
        CHECK(p.a[N - 1] >= 1.0 - 1e-4);
    }
}

TEST_CASE("self-dual point: energy is pi per unit of winding") {
    CHECK(cached(1, 0.5).scalars.energy == Catch::Approx(M_PI).epsilon(2e-3));
    CHECK(cached(2, 0.5).scalars.energy == Catch::Approx(2.0 * M_PI).epsilon(2e-3));
    CHECK(cached(3, 0.5).scalars.energy == Catch::Approx(3.0 * M_PI).epsilon(2e-3));
}

TEST_CASE("energy splits by coupling type") {
    // Degenerate at the self-dual coupling, superadditive (repulsive) above it.
    double e1 = cached(1, 0.5).scalars.energy, e2 = cached(2, 0.5).scalars.energy;
    CHECK(e2 == Catch::Approx(2.0 * e1).epsilon(1e-3));
    CHECK(cached(2, 2.0).scalars.energy > 2.0 * cached(1, 2.0).scalars.energy + 0.1);
}

TEST_CASE("dilation identity: field-strength and potential energies balance") {
    // Scaling criticality in two dimensions forces int B^2 = (lambda/2) int (1-f^2)^2,
    // which makes gamma_n equal to the energy.  Completely independent of the
    // quadrature used for either; a sharp cross-check on both.
    for (double lam : {0.5, 1.0, 2.0})
        for (int n : {1, 2}) {
            const VortexProfile& p = cached(n, lam);
            CHECK(p.scalars.gamma_n == Catch::Approx(p.scalars.energy).epsilon(1e-4));
        }
}

TEST_CASE("conjugation: flipping the winding sign flips B and nothing else") {
    const VortexProfile& plus = cached(1, 2.0);
    const VortexProfile& minus = cached(-1, 2.0);
    for (size_t i = 0; i < plus.f.size(); i += 97) {
        CHECK(minus.f[i] == Catch::Approx(plus.f[i]).margin(1e-12));
        CHECK(minus.a[i] == Catch::Approx(plus.a[i]).margin(1e-12));
        CHECK(minus.B[i] == Catch::Approx(-plus.B[i]).margin(1e-12));
    }
    CHECK(minus.scalars.energy == Catch::Approx(plus.scalars.energy).epsilon(1e-12));
    CHECK(minus.scalars.gamma_n == Catch::Approx(plus.scalars.gamma_n).epsilon(1e-12));
    CHECK(minus.scalars.beta_n == Catch::Approx(plus.scalars.beta_n).epsilon(1e-12));
}

TEST_CASE("tail decay rates match the linearized equations") {
    // 1 - f decays at min(sqrt(2 lambda), 2); B decays like K0, unit rate.
    CHECK(cached(1, 0.5).scalars.rate_f == Catch::Approx(1.0).epsilon(0.05));
    CHECK(cached(1, 1.0).scalars.rate_f == Catch::Approx(std::sqrt(2.0)).epsilon(0.05));
    CHECK(cached(1, 2.0).scalars.rate_f == Catch::Approx(2.0).epsilon(0.05));
    CHECK(cached(1, 1.0).scalars.rate_B == Catch::Approx(1.0).epsilon(0.05));
    CHECK(cached(1, 2.0).scalars.rate_B == Catch::Approx(1.0).epsilon(0.05));
}

TEST_CASE("decay fit windows validate") {
    const VortexProfile& p = cached(1, 1.0);
    CHECK_THROWS_AS(decay_exponents(p, 12.0, 11.0), config_error);
    DecayRates explicit_window = decay_exponents(p, 10.0, 20.0);
    CHECK(explicit_window.rate_f == Catch::Approx(std::sqrt(2.0)).epsilon(0.06));
}

TEST_CASE("second-order grid convergence of the energy") {
    double e[3];
    int idx = 0;
    for (int N : {512, 1024, 2048}) {
        ProfileParams q = default_profile_params(1, 1.0);
        q.num_points = N;
        e[idx++] = vortex_energy(solve_profile(q));
    }
    double ratio = (e[0] - e[1]) / (e[1] - e[2]);
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.0);
}

TEST_CASE("fine-grid energy regression") {
    ProfileParams q = default_profile_params(1, 1.0);
    q.num_points = 8192;
    double e = vortex_energy(solve_profile(q));
    CHECK(e == Catch::Approx(3.634063560777006).epsilon(1e-6));
}

TEST_CASE("beta fit recovers a synthetic amplitude exactly") {
    VortexProfile p;
    p.params.n = 1;
    size_t N = 1501;
    p.grid.r.resize(N);
    p.B.resize(N);
    for (size_t i = 0; i < N; ++i) {
        double r = 15.0 * static_cast<double>(i) / static_cast<double>(N - 1);
        p.grid.r[i] = r;
        p.B[i] = r > 0.0 ? 2.0 * bessel_k1(r) * (1.0 - 0.5 / r) : 0.0;
    }
    BetaFit fit = beta_coefficient(p);
    CHECK(fit.beta == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(fit.residual <= 1e-12);
}

TEST_CASE("beta fit on real profiles: positive, tight, windowed") {
    for (double lam : {1.0, 2.0}) {
        const VortexProfile& p = cached(1, lam);
        CHECK(p.scalars.beta_n > 0.0);
        CHECK(p.scalars.beta_residual < 0.01);
    }
    const VortexProfile& p = cached(1, 1.0);
    CHECK_THROWS_AS(beta_coefficient(p, 8.0, 40.0), config_error);  // beyond the grid
    CHECK_THROWS_AS(beta_coefficient(p, 8.0, 8.01), config_error);  // too few nodes
}

TEST_CASE("interaction coefficient: positive, symmetric for equal profiles, guarded") {
    const VortexProfile& p = cached(1, 2.0);
    VortexProfile q = solve_profile_full(default_profile_params(1, 2.0));
    double cpq = interaction_coefficient(p, q), cqp = interaction_coefficient(q, p);
    CHECK(cpq > 0.0);
    CHECK(cpq == Catch::Approx(cqp).epsilon(1e-12));

    CHECK_THROWS_AS(interaction_coefficient(cached(1, 2.0), cached(1, 1.0)), config_error);
    CHECK_THROWS_AS(interaction_coefficient(cached(1, 0.5), cached(1, 0.5)), config_error);
}

TEST_CASE("gamma is positive and grows with winding") {
    CHECK(cached(1, 2.0).scalars.gamma_n > 0.0);
    CHECK(cached(2, 2.0).scalars.gamma_n > cached(1, 2.0).scalars.gamma_n);
}

TEST_CASE("profile serialization round-trips values exactly") {
    const VortexProfile& p = cached(1, 1.0);
    std::string dir = std::filesystem::temp_directory_path().string();
    std::string csv_path = dir + "/glvx_profile_test.csv";
    std::string json_path = dir + "/glvx_profile_test.json";
    write_profile_csv(csv_path, p);
    write_profile_json(json_path, p);

    std::ifstream csv(csv_path);
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "r,f,a,B");
    size_t rows = 0, probe = 1000;
    while (std::getline(csv, line)) {
        if (rows == probe) {
            double r, f, a, B;
            REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r, &f, &a, &B) == 4);
            CHECK(r == p.grid.r[probe]);
            CHECK(f == p.f[probe]);
            CHECK(a == p.a[probe]);
            CHECK(B == p.B[probe]);
        }
        ++rows;
    }
    CHECK(rows == p.grid.r.size());

    std::ifstream js(json_path);
    nlohmann::json doc = nlohmann::json::parse(js);
    CHECK(doc["energy"].get<double>() == p.scalars.energy);
    CHECK(doc["beta_n"].get<double>() == p.scalars.beta_n);
    CHECK(doc["n"].get<int>() == 1);

    CHECK_THROWS_AS(write_profile_csv("/nonexistent-dir/x.csv", p), config_error);
}

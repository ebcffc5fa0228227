#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "glvx/experiment.hpp"

using namespace glvx;

namespace {

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string test_root() {
    static std::string root = [] {
        std::string dir =
            (std::filesystem::temp_directory_path() / "glvx_cli_test").string();
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        return dir;
    }();
    return root;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    REQUIRE(os.good());
    os << text;
}

// Spawns the real binary through the shell; env_prefix lets a case set
// variables like GLVX_THREADS for one invocation.
CmdResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    std::string tag = test_root() + "/cmd" + std::to_string(counter++);
    std::string cmd =
        env_prefix + GLVX_BIN " " + args + " >" + tag + ".out 2>" + tag + ".err";
    int rc = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(tag + ".out");
    r.err = slurp(tag + ".err");
    return r;
}

std::string pair_config(const std::string& out_dir) {
    return "model = \"gradient_flow\"\n"
           "lambda = 2.0\n"
           "output_dir = \"" + out_dir + "\"\n"
           "[lattice]\n"
           "extent = 12.0\n"
           "points_per_side = 97\n"
           "[run]\n"
           "cfl_factor = 0.2\n"
           "t_end = 2.0\n"
           "snapshot_every = 20\n"
           "[[vortices]]\n"
           "x = -4.0\n"
           "y = 0.0\n"
           "n = 1\n"
           "[[vortices]]\n"
           "x = 4.0\n"
           "y = 0.0\n"
           "n = 1\n";
}

std::string single_config(const std::string& model, const std::string& out_dir,
                          const std::string& extra_vortex_keys = "") {
    return "model = \"" + model + "\"\n"
           "lambda = 2.0\n"
           "output_dir = \"" + out_dir + "\"\n"
           "[lattice]\n"
           "extent = 9.0\n"
           "points_per_side = 73\n"
           "[run]\n"
           "cfl_factor = 0.2\n"
           "courant_factor = 0.25\n"
           "t_end = 2.0\n"
           "snapshot_every = 8\n"
           "[[vortices]]\n"
           "x = 0.0\n"
           "y = 0.0\n"
           "n = 1\n" + extra_vortex_keys;
}

} // namespace

TEST_CASE("help exits cleanly and lists every subcommand") {
    CmdResult r = run_cli("--help");
    CHECK(r.code == 0);
    for (const char* name : {"profile", "glue", "evolve-gf", "evolve-mh", "effective",
                             "compare", "verify-asymptotics"})
        CHECK(r.out.find(name) != std::string::npos);
}

TEST_CASE("bad invocations exit with the config code") {
    SECTION("no subcommand") { CHECK(run_cli("").code == 2); }
    SECTION("missing --config") {
        CmdResult r = run_cli("evolve-gf");
        CHECK(r.code == 2);
        CHECK(r.err.find("--config is required") != std::string::npos);
    }
    SECTION("nonexistent config file") {
        CmdResult r = run_cli("evolve-gf --config " + test_root() + "/nope.toml");
        CHECK(r.code == 2);
        CHECK(r.err.find("nope.toml") != std::string::npos);
    }
    SECTION("malformed config reports file and line") {
        std::string cfg = test_root() + "/broken.toml";
        write_file(cfg, "model = \"gradient_flow\"\nwhat even is this line\n");
        CmdResult r = run_cli("glue --config " + cfg);
        CHECK(r.code == 2);
        CHECK(r.err.find("broken.toml:2") != std::string::npos);
    }
    SECTION("placement violation names the vortex index") {
        std::string cfg = test_root() + "/margin.toml";
        write_file(cfg, single_config("gradient_flow", test_root() + "/margin_run",
                                      "[[vortices]]\nx = 3.5\ny = 0.0\nn = 1\n"));
        CmdResult r = run_cli("evolve-gf --config " + cfg);
        CHECK(r.code == 2);
        CHECK(r.err.find("vortices[1]") != std::string::npos);
    }
    SECTION("subcommand and config model must agree") {
        std::string cfg = test_root() + "/mismatch.toml";
        write_file(cfg, single_config("gradient_flow", test_root() + "/mismatch_run"));
        CmdResult r = run_cli("evolve-mh --config " + cfg);
        CHECK(r.code == 2);
        CHECK(r.err.find("expects maxwell_higgs") != std::string::npos);
    }
}

TEST_CASE("profile writes radial tables with consistent scalars") {
    std::string cfg = test_root() + "/prof.toml";
    std::string dir = test_root() + "/prof_out";
    write_file(cfg, single_config("gradient_flow", dir));
    CmdResult r = run_cli("profile --config " + cfg);
    REQUIRE(r.code == 0);

    std::string csv = slurp(dir + "/profile_n1.csv");
    CHECK(csv.rfind("r,f,a,B\n", 0) == 0);
    nlohmann::json j = nlohmann::json::parse(slurp(dir + "/profile_n1.json"));
    CHECK(j["n"] == 1);
    CHECK(j["lambda"] == 2.0);
    double energy = j["energy"];
    double gamma = j["gamma_n"];
    CHECK(energy > 0.0);
    // the translational-mode normalization equals the vortex energy; the two
    // discrete evaluations agree to quadrature error
    CHECK(gamma == Catch::Approx(energy).epsilon(1e-5));
}

TEST_CASE("glue reports quantized flux and writes a readable snapshot") {
    std::string cfg = test_root() + "/glue.toml";
    std::string dir = test_root() + "/glue_out";
    write_file(cfg, single_config("gradient_flow", dir));
    CmdResult r = run_cli("glue --config " + cfg);
    REQUIRE(r.code == 0);

    nlohmann::json j = nlohmann::json::parse(slurp(dir + "/glue.json"));
    double flux_ratio = j["flux_over_2pi"];
    CHECK(std::abs(flux_ratio - 1.0) < 1e-3);
    CHECK(j["total_degree"] == 1);
    Snapshot snap = read_snapshot(dir + "/initial.glvx", 2.0);
    CHECK_FALSE(snap.momentum.has_value());
    CHECK(snap.field.lattice.points_per_side == 73);
}

TEST_CASE("a gradient-flow pair experiment passes its comparison") {
    std::string cfg = test_root() + "/pair.toml";
    std::string dir = test_root() + "/pair_run";
    write_file(cfg, pair_config(dir));
    CmdResult r = run_cli("evolve-gf --config " + cfg);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("verdict           pass") != std::string::npos);

    for (const char* name : {"config.toml", "initial.glvx", "final.glvx",
                             "diagnostics.csv", "tracks.csv", "effective.csv",
                             "report.json"})
        CHECK(std::filesystem::exists(dir + "/" + std::string(name)));
    nlohmann::json rep = nlohmann::json::parse(slurp(dir + "/report.json"));
    CHECK(rep["pass"] == true);
    CHECK(rep["epsilon"].get<double>() ==
          Catch::Approx(std::exp(-8.0) / std::sqrt(8.0)).epsilon(1e-9));
    std::string diag = slurp(dir + "/diagnostics.csv");
    CHECK(diag.rfind("t,energy,gauss_residual,x0,y0,charge0,x1,y1,charge1\n", 0) == 0);
}

TEST_CASE("compare reproduces the stored verdict and flags tampered series") {
    std::string cfg = test_root() + "/cmp.toml";
    std::string dir = test_root() + "/cmp_run";
    write_file(cfg, pair_config(dir));
    REQUIRE(run_cli("evolve-gf --config " + cfg).code == 0);

    std::string before = slurp(dir + "/report.json");
    CmdResult again = run_cli("compare --out " + dir);
    CHECK(again.code == 0);
    CHECK(slurp(dir + "/report.json") == before);

    // Shift the stored point-vortex track; the recomputed verdict must flip.
    EffectiveTrajectory eff;
    {
        std::ifstream es(dir + "/effective.csv", std::ios::binary);
        eff = read_effective_csv(es);
    }
    for (EffectiveState& s : eff.states)
        for (std::array<double, 2>& z : s.positions) z[1] += 0.5;
    {
        std::ofstream os(dir + "/effective.csv", std::ios::binary);
        write_effective_csv(os, eff);
    }
    CmdResult tampered = run_cli("compare --out " + dir);
    CHECK(tampered.code == 5);
    nlohmann::json rep = nlohmann::json::parse(slurp(dir + "/report.json"));
    CHECK(rep["pass"] == false);
    CHECK(rep["deviation_pass"] == false);
}

TEST_CASE("a point-vortex run writes a monotone separation trajectory") {
    std::string cfg = test_root() + "/eff.toml";
    std::string dir = test_root() + "/eff_run";
    write_file(cfg, "model = \"effective_gf\"\n"
                    "lambda = 2.0\n"
                    "output_dir = \"" + dir + "\"\n"
                    "[run]\n"
                    "dt_effective = 0.1\n"
                    "t_end = 3.0\n"
                    "snapshot_every = 2\n"
                    "[[vortices]]\n"
                    "x = -4.5\ny = 0.0\nn = 1\n"
                    "[[vortices]]\n"
                    "x = 4.5\ny = 0.0\nn = 1\n");
    CmdResult r = run_cli("effective --config " + cfg);
    REQUIRE(r.code == 0);

    std::ifstream es(dir + "/effective.csv", std::ios::binary);
    EffectiveTrajectory eff = read_effective_csv(es);
    REQUIRE(eff.num_snapshots() >= 10);
    for (size_t k = 1; k < eff.num_snapshots(); ++k)
        CHECK(min_separation(eff.states[k].positions) >
              min_separation(eff.states[k - 1].positions));
}

TEST_CASE("diagnostics are identical across repeat runs and worker counts") {
    std::string cfg = test_root() + "/det.toml";
    write_file(cfg, pair_config(test_root() + "/det_run"));
    std::string base = test_root() + "/det1";
    REQUIRE(run_cli("evolve-gf --config " + cfg + " --out " + base + " --threads 1").code == 0);
    std::string reference = slurp(base + "/diagnostics.csv");
    REQUIRE(reference.size() > 100);

    std::string repeat = test_root() + "/det1b";
    REQUIRE(run_cli("evolve-gf --config " + cfg + " --out " + repeat + " --threads 1").code == 0);
    CHECK(slurp(repeat + "/diagnostics.csv") == reference);

    std::string two = test_root() + "/det2";
    REQUIRE(run_cli("evolve-gf --config " + cfg + " --out " + two,
                    "GLVX_THREADS=2 ").code == 0);
    CHECK(slurp(two + "/diagnostics.csv") == reference);

    std::string four = test_root() + "/det4";
    REQUIRE(run_cli("evolve-gf --config " + cfg + " --out " + four + " --threads 4").code == 0);
    CHECK(slurp(four + "/diagnostics.csv") == reference);
}

TEST_CASE("the wave-dynamics path carries momenta through the CLI") {
    std::string cfg = test_root() + "/mh.toml";
    std::string dir = test_root() + "/mh_run";
    write_file(cfg, single_config("maxwell_higgs", dir, "px = 0.05\npy = 0.0\n"));
    CmdResult r = run_cli("evolve-mh --config " + cfg);
    REQUIRE(r.code == 0);

    Snapshot snap = read_snapshot(dir + "/final.glvx", 2.0);
    CHECK(snap.momentum.has_value());
    std::ifstream ts(dir + "/tracks.csv", std::ios::binary);
    Trajectory pde = read_track_csv(ts);
    REQUIRE(pde.vortex_tracks.front().size() == 1);
    double moved = pde.vortex_tracks.back()[0].x - pde.vortex_tracks.front()[0].x;
    CHECK(moved > 0.05);
    CHECK(moved < 0.15);
}

TEST_CASE("verify-asymptotics writes the battery report") {
    std::string dir = test_root() + "/asym";
    CmdResult r = run_cli("verify-asymptotics --out " + dir);
    CHECK(r.code == 0);
    std::string csv = slurp(dir + "/asymptotics.csv");
    REQUIRE(csv.rfind("check,measured,expected,tolerance,status\n", 0) == 0);
    long pass_rows = 0;
    std::istringstream ss(csv);
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line))
        if (line.size() > 5 && line.substr(line.size() - 5) == ",pass") ++pass_rows;
    CHECK(pass_rows == 7);
}

// Command-line front end for the vortex lab.
//
//   glvx profile            solve the radial profiles a config needs
//   glvx glue               build the glued initial field and report its invariants
//   glvx evolve-gf          run a gradient-flow experiment end to end
//   glvx evolve-mh          run a wave-dynamics experiment end to end
//   glvx effective          run a point-vortex experiment
//   glvx compare            recompute a finished run's comparison verdict
//   glvx verify-asymptotics run the quadrature self-check battery
//
// Exit codes: 0 success, 1 unclassified failure, 2 config error, 3 numerical
// blow-up, 4 topology change, 5 comparison failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glvx/config.hpp"
#include "glvx/experiment.hpp"
#include "glvx/io.hpp"
#include "glvx/parallel.hpp"
#include "glvx/quadrature.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
};

glvx::ExperimentConfig load_config(const CommonArgs& args, bool need_out = true) {
    if (args.config_path.empty()) throw glvx::config_error("--config is required");
    glvx::ExperimentConfig cfg = glvx::parse_config(args.config_path);
    if (!args.out_dir.empty()) {
        cfg.output_dir = args.out_dir;
        cfg.validate();
    }
    (void)need_out;
    return cfg;
}

void require_model(const glvx::ExperimentConfig& cfg, glvx::ExperimentModel expected,
                   const char* subcommand) {
    if (cfg.model != expected)
        throw glvx::config_error(std::string("config model is ") + glvx::model_name(cfg.model) +
                                 " but " + subcommand + " expects " +
                                 glvx::model_name(expected));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw glvx::config_error("cannot create output directory " + dir + ": " + ec.message());
}

void print_report(const glvx::ComparisonReport& rep) {
    std::printf("epsilon           %.6e\n", rep.epsilon);
    std::printf("sup deviation     %.6e  (limit %.6e)  %s\n", rep.sup_deviation,
                rep.thresholds.deviation_factor * rep.lattice_spacing,
                rep.deviation_pass ? "pass" : "FAIL");
    std::printf("max law residual  %.6e  (limit %.6e)  %s\n", rep.max_law_residual,
                rep.thresholds.law_residual_limit, rep.law_pass ? "pass" : "FAIL");
    std::printf("verdict           %s\n", rep.pass ? "pass" : "FAIL");
}

int cmd_profile(const CommonArgs& args) {
    glvx::ExperimentConfig cfg = load_config(args);
    ensure_dir(cfg.output_dir);
    std::set<int> degrees;
    for (const glvx::VortexSpec& v : cfg.vortices) degrees.insert(v.n);
    for (int n : degrees) {
        glvx::VortexProfile p =
            glvx::solve_profile_full(glvx::default_profile_params(n, cfg.lambda));
        std::string stem = cfg.output_dir + "/profile_n" + std::to_string(n);
        glvx::write_profile_csv(stem + ".csv", p);
        glvx::write_profile_json(stem + ".json", p);
        std::printf("n=%+d lambda=%g  energy=%.8f  gamma=%.8f  beta=%.8f  -> %s.{csv,json}\n",
                    n, cfg.lambda, p.scalars.energy, p.scalars.gamma_n, p.scalars.beta_n,
                    stem.c_str());
    }
    return 0;
}

int cmd_glue(const CommonArgs& args) {
    glvx::ExperimentConfig cfg = load_config(args);
    if (!glvx::model_is_lattice(cfg.model))
        throw glvx::config_error("glue needs a field-level model (gradient_flow or "
                                 "maxwell_higgs)");
    ensure_dir(cfg.output_dir);

    std::vector<glvx::VortexProfile> catalog;
    {
        std::set<int> degrees;
        for (const glvx::VortexSpec& v : cfg.vortices) degrees.insert(v.n);
        for (int n : degrees)
            catalog.push_back(glvx::solve_profile(glvx::default_profile_params(n, cfg.lambda)));
    }
    glvx::ProfileSet profiles = glvx::make_profile_set(catalog);
    glvx::LatticeSpec lat{cfg.lattice.extent, cfg.lattice.points_per_side};
    glvx::VortexAnsatz ansatz;
    int total_degree = 0;
    for (const glvx::VortexSpec& v : cfg.vortices) {
        ansatz.positions.push_back({v.x, v.y});
        ansatz.degrees.push_back(v.n);
        total_degree += v.n;
    }
    bool wave = cfg.model == glvx::ExperimentModel::maxwell_higgs;
    if (wave)
        for (const glvx::VortexSpec& v : cfg.vortices)
            ansatz.momenta_p.push_back({-v.px, -v.py});

    glvx::FieldState u = glvx::build_multivortex(profiles, ansatz, lat);
    glvx::MomentumState phi;
    if (wave) phi = glvx::build_momentum(profiles, ansatz, u);
    std::string snap_path = cfg.output_dir + "/initial.glvx";
    glvx::write_snapshot(snap_path, u, wave ? &phi : nullptr);

    double en = glvx::energy(u);
    double fl = glvx::flux(u);
    double two_pi = 2.0 * 3.14159265358979323846;
    nlohmann::ordered_json j;
    j["energy"] = en;
    j["flux"] = fl;
    j["flux_over_2pi"] = fl / two_pi;
    j["total_degree"] = total_degree;
    j["num_vortices"] = cfg.vortices.size();
    j["lattice_spacing"] = lat.spacing();
    {
        std::ofstream os(cfg.output_dir + "/glue.json", std::ios::binary);
        if (!os) throw glvx::config_error("cannot write " + cfg.output_dir + "/glue.json");
        os << j.dump(2) << '\n';
    }
    std::printf("energy         %.10f\n", en);
    std::printf("flux / 2 pi    %.10f  (total degree %d)\n", fl / two_pi, total_degree);
    std::printf("snapshot       %s\n", snap_path.c_str());
    return 0;
}

int cmd_evolve(const CommonArgs& args, glvx::ExperimentModel expected, const char* name) {
    glvx::ExperimentConfig cfg = load_config(args);
    require_model(cfg, expected, name);
    glvx::RunArtifacts art = glvx::run_experiment(cfg);
    std::printf("snapshots      %zu\n", art.pde.num_snapshots());
    std::printf("final energy   %.10f\n", art.pde.energy_series.back());
    std::printf("artifacts      %s\n", art.dir.c_str());
    if (art.has_report) {
        print_report(art.report);
        if (!art.report.pass) return 5;
    } else {
        std::printf("comparison     skipped (needs lambda > 1/2)\n");
    }
    return 0;
}

int cmd_effective(const CommonArgs& args) {
    glvx::ExperimentConfig cfg = load_config(args);
    if (glvx::model_is_lattice(cfg.model))
        throw glvx::config_error("effective needs a point-vortex model (effective_gf or "
                                 "effective_mh)");
    glvx::RunArtifacts art = glvx::run_experiment(cfg);
    const glvx::EffectiveTrajectory& tr = art.effective;
    std::printf("snapshots      %zu\n", tr.num_snapshots());
    std::printf("final W        %.10e\n", tr.w_series.back());
    if (tr.states.back().positions.size() >= 2) {
        double r0 = glvx::min_separation(tr.states.front().positions);
        double r1 = glvx::min_separation(tr.states.back().positions);
        std::printf("separation     %.6f -> %.6f\n", r0, r1);
    }
    std::printf("artifacts      %s\n", art.dir.c_str());
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    std::string dir = args.out_dir;
    if (dir.empty() && !args.config_path.empty())
        dir = glvx::parse_config(args.config_path).output_dir;
    if (dir.empty())
        throw glvx::config_error("compare needs --out <run dir> (or --config to locate it)");
    glvx::ComparisonReport rep = glvx::recompare_run(dir);
    print_report(rep);
    return rep.pass ? 0 : 5;
}

int cmd_verify_asymptotics(const CommonArgs& args) {
    std::vector<glvx::AsymptoticsCheck> rows = glvx::verify_asymptotics();
    bool all_pass = true;
    for (const glvx::AsymptoticsCheck& r : rows) {
        all_pass = all_pass && r.pass;
        if (r.tolerance > 0.0)
            std::printf("%-28s %12.6f  expected %8.3f +- %-6.3f %s\n", r.name.c_str(),
                        r.measured, r.expected, r.tolerance, r.pass ? "pass" : "FAIL");
        else
            std::printf("%-28s %12.6f  expected  < %-12.3f %s\n", r.name.c_str(), r.measured,
                        r.expected, r.pass ? "pass" : "FAIL");
    }
    if (!args.out_dir.empty()) {
        ensure_dir(args.out_dir);
        std::string path = args.out_dir + "/asymptotics.csv";
        std::ofstream os(path, std::ios::binary);
        if (!os) throw glvx::config_error("cannot write " + path);
        glvx::write_asymptotics_csv(os, rows);
        std::printf("rows           %s\n", path.c_str());
    }
    return all_pass ? 0 : 5;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ginzburg-Landau vortex lab: radial profiles, glued lattice fields, "
                 "PDE evolution, and point-vortex comparisons"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* sub, bool with_config = true) {
        if (with_config) sub->add_option("--config", args.config_path, "experiment TOML file");
        sub->add_option("--out", args.out_dir, "output directory (overrides the config)");
        sub->add_option("--threads", args.threads, "worker threads (overrides GLVX_THREADS)");
        return sub;
    };

    CLI::App* profile = add_common(app.add_subcommand(
        "profile", "solve the radial vortex profiles the config needs"));
    CLI::App* glue = add_common(app.add_subcommand(
        "glue", "build the glued multivortex field and report energy and flux"));
    CLI::App* evolve_gf = add_common(app.add_subcommand(
        "evolve-gf", "run a gradient-flow experiment with its comparison report"));
    CLI::App* evolve_mh = add_common(app.add_subcommand(
        "evolve-mh", "run a wave-dynamics experiment with its comparison report"));
    CLI::App* effective = add_common(app.add_subcommand(
        "effective", "integrate the point-vortex law by itself"));
    CLI::App* compare = add_common(app.add_subcommand(
        "compare", "recompute the comparison verdict of a finished run"));
    CLI::App* verify = add_common(
        app.add_subcommand("verify-asymptotics", "run the quadrature self-check battery"),
        false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (args.threads > 0) glvx::shared_pool(args.threads);
        if (profile->parsed()) return cmd_profile(args);
        if (glue->parsed()) return cmd_glue(args);
        if (evolve_gf->parsed())
            return cmd_evolve(args, glvx::ExperimentModel::gradient_flow, "evolve-gf");
        if (evolve_mh->parsed())
            return cmd_evolve(args, glvx::ExperimentModel::maxwell_higgs, "evolve-mh");
        if (effective->parsed()) return cmd_effective(args);
        if (compare->parsed()) return cmd_compare(args);
        if (verify->parsed()) return cmd_verify_asymptotics(args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return glvx::exit_code_for(e);
    }
    return 0;
}

#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "glvx/config.hpp"

using namespace glvx;

namespace {

std::string minimal = R"(model = "gradient_flow"

[[vortices]]
x = 0.0
y = 0.0
n = 1
)";

// Checks that parsing `text` fails and the message contains every fragment.
void expect_rejected(const std::string& text, const std::vector<std::string>& fragments) {
    try {
        parse_config_text(text, "test.toml");
        FAIL("config was accepted: " << text);
    } catch (const config_error& e) {
        std::string what = e.what();
        for (const std::string& f : fragments) {
            INFO("message: " << what);
            CHECK(what.find(f) != std::string::npos);
        }
    }
}

} // namespace

TEST_CASE("minimal file fills documented defaults") {
    ExperimentConfig cfg = parse_config_text(minimal, "test.toml");
    CHECK(cfg.model == ExperimentModel::gradient_flow);
    CHECK(cfg.lambda == 2.0);
    CHECK(cfg.lattice.extent == 12.0);
    CHECK(cfg.lattice.points_per_side == 193);
    CHECK(cfg.run.cfl_factor == 0.1);
    CHECK(cfg.run.courant_factor == 0.25);
    CHECK(cfg.run.t_end == 0.0);
    CHECK(cfg.run.snapshot_every == 50);
    CHECK(cfg.compare.deviation_factor == 1.5);
    CHECK(cfg.compare.law_residual_limit == 0.3);
    CHECK(cfg.output_dir == "out");
    REQUIRE(cfg.vortices.size() == 1);
    CHECK(cfg.vortices[0].n == 1);
}

TEST_CASE("full file parses every section") {
    std::string text = R"(
# pair bound for the wave model
model = "maxwell_higgs"
lambda = 2.0
output_dir = "runs/pair"   # artifacts land here

[lattice]
extent = 14.0
points_per_side = 225

[run]
courant_factor = 0.25
t_end = 30.0
snapshot_every = 20

[compare]
deviation_factor = 1.5
law_residual_limit = 0.3

[[vortices]]
x = -4.0
y = 0.0
n = 1
px = 0.05
py = 0.0

[[vortices]]
x = 4.0
y = 0.0
n = 1
px = -0.05
py = 0.0
)";
    ExperimentConfig cfg = parse_config_text(text, "test.toml");
    CHECK(cfg.model == ExperimentModel::maxwell_higgs);
    CHECK(cfg.output_dir == "runs/pair");
    CHECK(cfg.lattice.points_per_side == 225);
    CHECK(cfg.run.t_end == 30.0);
    REQUIRE(cfg.vortices.size() == 2);
    CHECK(cfg.vortices[0].px == 0.05);
    CHECK(cfg.vortices[1].px == -0.05);
}

TEST_CASE("serialize then parse is the identity") {
    ExperimentConfig cfg = parse_config_text(minimal, "test.toml");
    cfg.model = ExperimentModel::effective_mh;
    cfg.lambda = 1.75;
    cfg.output_dir = "scratch/x";
    cfg.run.dt_effective = 0.05;
    cfg.run.t_end = 12.5;
    cfg.vortices = {{-4.25, 0.5, 1, 0.03, -0.01}, {4.25, -0.5, -2, 0.0, 0.0}};
    ExperimentConfig round = parse_config_text(serialize_config(cfg), "round.toml");
    CHECK(round == cfg);
}

TEST_CASE("syntax errors carry the line number") {
    expect_rejected("model = \"gradient_flow\"\nwhat is this\n", {"test.toml:2", "key = value"});
    expect_rejected("model = \"gradient_flow\"\nlambda = abc\n", {"test.toml:2", "cannot parse"});
    expect_rejected("model = \"gradient_flow\"\nlambda = \"2\n", {"test.toml:2", "unterminated"});
    expect_rejected("model = \"gradient_flow\"\nlambda = 1\nlambda = 2\n",
                    {"test.toml:3", "duplicate key"});
    expect_rejected("model = \"gradient_flow\"\n[run]\n[run]\n", {"test.toml:3", "duplicate section"});
}

TEST_CASE("unknown keys are rejected with their path") {
    expect_rejected("model = \"gradient_flow\"\nspeed = 3\n[[vortices]]\nn = 1\n",
                    {"unknown key speed"});
    expect_rejected("model = \"gradient_flow\"\n[lattice]\nspacing = 0.1\n"
                    "[[vortices]]\nn = 1\n",
                    {"unknown key lattice.spacing", "test.toml:3"});
    expect_rejected("model = \"gradient_flow\"\n[[vortices]]\nn = 1\ncharge = 1\n",
                    {"unknown key vortices[0].charge"});
    expect_rejected(minimal + "\n[extra]\nk = 1\n", {"unknown section [extra]"});
    expect_rejected(minimal + "\n[[walls]]\nk = 1\n", {"unknown table [[walls]]"});
}

TEST_CASE("type mismatches name the key") {
    expect_rejected("model = 3\n[[vortices]]\nn = 1\n", {"model: expected a string"});
    expect_rejected("model = \"gradient_flow\"\nlambda = \"two\"\n[[vortices]]\nn = 1\n",
                    {"lambda: expected a number"});
    expect_rejected("model = \"gradient_flow\"\n[run]\nsnapshot_every = 2.5\n"
                    "[[vortices]]\nn = 1\n",
                    {"run.snapshot_every: expected an integer"});
}

TEST_CASE("model is required and must be known") {
    expect_rejected("lambda = 2.0\n[[vortices]]\nn = 1\n", {"missing required key 'model'"});
    expect_rejected("model = \"heat\"\n[[vortices]]\nn = 1\n", {"unknown model 'heat'"});
}

TEST_CASE("validation names the offending vortex") {
    // radius 10 on a 12-wide lattice leaves a 2-unit margin, below the 8 required
    expect_rejected("model = \"gradient_flow\"\n[[vortices]]\nx = 10.0\nn = 1\n",
                    {"vortices[0]", "8-unit boundary margin"});
    expect_rejected("model = \"gradient_flow\"\n[[vortices]]\nn = 1\n[[vortices]]\nx = 3.9\nn = 0\n",
                    {"vortices[1].n", "nonzero"});
    expect_rejected("model = \"gradient_flow\"\n[[vortices]]\nn = 1\npx = 0.05\n",
                    {"vortices[0].px", "second-order"});
    expect_rejected("model = \"gradient_flow\"\n[[vortices]]\nn = 1\n[[vortices]]\nx = 1.0\nn = 1\n",
                    {"minimum separation"});
}

TEST_CASE("effective models skip lattice checks but validate their step") {
    // a separation this wide would violate the lattice margin, but there is no lattice
    std::string text = R"(model = "effective_gf"
[run]
dt_effective = 0.5
t_end = 10.0
[[vortices]]
x = -8.0
n = 1
[[vortices]]
x = 8.0
n = 1
)";
    ExperimentConfig cfg = parse_config_text(text, "test.toml");
    CHECK(cfg.run.dt_effective == 0.5);
    expect_rejected("model = \"effective_gf\"\n[run]\ndt_effective = 0.0\n[[vortices]]\nn = 1\n",
                    {"run.dt_effective"});
    expect_rejected("model = \"gradient_flow\"\n[run]\ncfl_factor = 0.3\n[[vortices]]\nn = 1\n",
                    {"run:", "cfl_factor"});
    expect_rejected("model = \"maxwell_higgs\"\n[run]\ncourant_factor = 0.5\n[[vortices]]\nn = 1\n",
                    {"run:", "courant_factor"});
    expect_rejected("model = \"gradient_flow\"\n[lattice]\nextent = 9.0\npoints_per_side = 65\n"
                    "[[vortices]]\nn = 1\n",
                    {"lattice:", "spacing"});
}

TEST_CASE("vortex list may not be empty") {
    expect_rejected("model = \"gradient_flow\"\n", {"at least one vortex"});
}

TEST_CASE("comments and strings coexist") {
    std::string text = "model = \"gradient_flow\" # trailing\n"
                       "output_dir = \"with # hash\"\n"
                       "# full-line comment\n"
                       "[[vortices]]\nn = 1\n";
    ExperimentConfig cfg = parse_config_text(text, "test.toml");
    CHECK(cfg.output_dir == "with # hash");
}

TEST_CASE("missing file reports the path") {
    try {
        parse_config("/nonexistent/nope.toml");
        FAIL("opened a missing file");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("/nonexistent/nope.toml") != std::string::npos);
    }
}

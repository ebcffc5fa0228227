#pragma once

// Error taxonomy for the vortex lab.  Each exception type corresponds to one
// process exit code so the CLI can translate failures mechanically:
//
//   0  success
//   1  unclassified runtime failure (I/O, solver non-convergence, ...)
//   2  config_error        bad or inconsistent configuration / invalid input
//   3  blowup_error        NaN/Inf detected during PDE evolution
//   4  topology_error      vortex count or charges changed between snapshots
//   5  comparison_error    PDE-vs-effective comparison verdict failed

#include <stdexcept>
#include <string>

namespace glvx {

struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

struct blowup_error : std::runtime_error {
    long step = -1;
    explicit blowup_error(const std::string& what, long step_index = -1)
        : std::runtime_error(what), step(step_index) {}
};

struct topology_error : std::runtime_error {
    explicit topology_error(const std::string& what) : std::runtime_error(what) {}
};

struct comparison_error : std::runtime_error {
    explicit comparison_error(const std::string& what) : std::runtime_error(what) {}
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const config_error*>(&e)) return 2;
    if (dynamic_cast<const blowup_error*>(&e)) return 3;
    if (dynamic_cast<const topology_error*>(&e)) return 4;
    if (dynamic_cast<const comparison_error*>(&e)) return 5;
    return 1;
}

} // namespace glvx

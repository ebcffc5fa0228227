#pragma once

// CSV and JSON writers shared by the tools.  All floating-point output uses
// %.17g so that files round-trip doubles exactly and reruns diff clean.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "glvx/errors.hpp"
#include "glvx/profile.hpp"

namespace glvx {

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open output file: " + path);
    return out;
}

// One CSV row; fields are written verbatim (callers quote if they ever need commas).
inline void csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << fields[i];
    }
    out << '\n';
}

inline void write_profile_csv(const std::string& path, const VortexProfile& p) {
    std::ofstream out = open_output(path);
    csv_row(out, {"r", "f", "a", "B"});
    for (size_t i = 0; i < p.grid.r.size(); ++i)
        csv_row(out, {format_g17(p.grid.r[i]), format_g17(p.f[i]), format_g17(p.a[i]),
                      format_g17(p.B[i])});
}

inline nlohmann::json profile_scalars_json(const VortexProfile& p) {
    return nlohmann::json{
        {"n", p.params.n},
        {"lambda", p.params.lambda},
        {"r_max", p.params.r_max},
        {"num_points", p.params.num_points},
        {"energy", p.scalars.energy},
        {"gamma_n", p.scalars.gamma_n},
        {"beta_n", p.scalars.beta_n},
        {"beta_residual", p.scalars.beta_residual},
        {"m_lambda", p.scalars.m_lambda},
        {"rate_f", p.scalars.rate_f},
        {"rate_B", p.scalars.rate_B},
        {"residual_sup", p.residual_sup},
    };
}

inline void write_profile_json(const std::string& path, const VortexProfile& p) {
    std::ofstream out = open_output(path);
    out << profile_scalars_json(p).dump(2) << '\n';
}

} // namespace glvx

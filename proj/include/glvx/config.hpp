#pragma once

// Experiment configuration: a small TOML subset (sections, array-of-tables,
// scalar values, comments), parsed with line numbers kept so both syntax and
// validation failures point at the offending line or key path.  The subset is
// hand-rolled because the build carries no TOML dependency; the accepted
// grammar is exactly what serialize_config emits.

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "evolve.hpp"
#include "io.hpp"
#include "lattice.hpp"

namespace glvx {

enum class ExperimentModel { gradient_flow, maxwell_higgs, effective_gf, effective_mh };

inline const char* model_name(ExperimentModel m) {
    switch (m) {
        case ExperimentModel::gradient_flow: return "gradient_flow";
        case ExperimentModel::maxwell_higgs: return "maxwell_higgs";
        case ExperimentModel::effective_gf: return "effective_gf";
        case ExperimentModel::effective_mh: return "effective_mh";
    }
    return "?";
}

inline bool model_is_second_order(ExperimentModel m) {
    return m == ExperimentModel::maxwell_higgs || m == ExperimentModel::effective_mh;
}

inline bool model_is_lattice(ExperimentModel m) {
    return m == ExperimentModel::gradient_flow || m == ExperimentModel::maxwell_higgs;
}

// One vortex: center, winding degree, and the initial momentum of the center
// (the center starts moving with velocity (px, py); first-order models must
// leave it zero).
struct VortexSpec {
    double x = 0.0, y = 0.0;
    int n = 1;
    double px = 0.0, py = 0.0;

    bool operator==(const VortexSpec& o) const {
        return x == o.x && y == o.y && n == o.n && px == o.px && py == o.py;
    }
};

struct RunSettings {
    double cfl_factor = 0.1;     // gradient-flow step is cfl * h^2
    double courant_factor = 0.25; // wave step is courant * h
    double dt_effective = 0.1;   // step of a standalone effective run
    double t_end = 0.0;
    long snapshot_every = 50;

    GfRunConfig gf() const { return {cfl_factor, t_end, snapshot_every}; }
    MhRunConfig mh() const { return {courant_factor, t_end, snapshot_every}; }

    bool operator==(const RunSettings& o) const {
        return cfl_factor == o.cfl_factor && courant_factor == o.courant_factor &&
               dt_effective == o.dt_effective && t_end == o.t_end &&
               snapshot_every == o.snapshot_every;
    }
};

struct CompareThresholds {
    double deviation_factor = 1.5;   // sup |z_PDE - z_ODE| limit, in units of h
    double law_residual_limit = 0.3; // velocity-law residual limit (relative)

    bool operator==(const CompareThresholds& o) const {
        return deviation_factor == o.deviation_factor &&
               law_residual_limit == o.law_residual_limit;
    }
};

struct ExperimentConfig {
    ExperimentModel model = ExperimentModel::gradient_flow;
    double lambda = 2.0;
    std::vector<VortexSpec> vortices;
    LatticeSpec lattice{12.0, 193};
    RunSettings run;
    CompareThresholds compare;
    std::string output_dir = "out";

    bool operator==(const ExperimentConfig& o) const {
        return model == o.model && lambda == o.lambda && vortices == o.vortices &&
               lattice == o.lattice && run == o.run && compare == o.compare &&
               output_dir == o.output_dir;
    }

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw config_error("lambda: must be positive and finite");
        if (vortices.empty())
            throw config_error("vortices: at least one vortex is required");
        for (size_t j = 0; j < vortices.size(); ++j) {
            const VortexSpec& v = vortices[j];
            std::string at = "vortices[" + std::to_string(j) + "]";
            if (!std::isfinite(v.x) || !std::isfinite(v.y))
                throw config_error(at + ": center must be finite");
            if (v.n == 0) throw config_error(at + ".n: winding degree must be nonzero");
            if (std::abs(v.n) > 5)
                throw config_error(at + ".n: |degree| above 5 is outside the profile "
                                        "solver's validated range");
            if (!std::isfinite(v.px) || !std::isfinite(v.py))
                throw config_error(at + ": momentum must be finite");
            if ((v.px != 0.0 || v.py != 0.0) && !model_is_second_order(model))
                throw config_error(at + ".px: nonzero momentum needs a second-order "
                                        "model, not " +
                                   model_name(model));
            if (model_is_lattice(model)) {
                double r = std::hypot(v.x, v.y), limit = lattice.extent - 8.0;
                if (r > limit) {
                    std::ostringstream msg;
                    msg << at << ": center radius " << r
                        << " leaves less than the 8-unit boundary margin; need radius <= "
                        << limit;
                    throw config_error(msg.str());
                }
            }
        }
        if (vortices.size() >= 2) {
            std::vector<std::array<double, 2>> z;
            for (const VortexSpec& v : vortices) z.push_back({v.x, v.y});
            double sep = min_separation(z);
            if (sep <= 2.0) {
                std::ostringstream msg;
                msg << "vortices: minimum separation " << sep
                    << " is at or below the core scale 2";
                throw config_error(msg.str());
            }
        }
        if (model_is_lattice(model)) {
            try {
                lattice.validate();
            } catch (const config_error& e) {
                throw config_error(std::string("lattice: ") + e.what());
            }
            try {
                if (model == ExperimentModel::gradient_flow)
                    run.gf().validate();
                else
                    run.mh().validate();
            } catch (const config_error& e) {
                throw config_error(std::string("run: ") + e.what());
            }
        } else {
            if (!(run.dt_effective > 0.0) || !std::isfinite(run.dt_effective))
                throw config_error("run.dt_effective: must be positive");
            if (!(run.t_end >= 0.0) || !std::isfinite(run.t_end))
                throw config_error("run.t_end: must be nonnegative");
            if (run.snapshot_every < 1)
                throw config_error("run.snapshot_every: must be at least 1");
        }
        if (!(compare.deviation_factor > 0.0))
            throw config_error("compare.deviation_factor: must be positive");
        if (!(compare.law_residual_limit > 0.0))
            throw config_error("compare.law_residual_limit: must be positive");
        if (output_dir.empty()) throw config_error("output_dir: must not be empty");
    }
};

namespace detail {

struct TomlValue {
    enum Kind { string_v, float_v, int_v, bool_v };
    Kind kind = float_v;
    std::string s;
    double f = 0.0;
    long long i = 0;
    bool b = false;
    int line = 0;
    mutable bool used = false;
};

struct TomlTable {
    std::map<std::string, TomlValue> values;
    int line = 0;
};

struct TomlDoc {
    std::string origin;
    TomlTable root;
    std::map<std::string, TomlTable> sections;
    std::map<std::string, std::vector<TomlTable>> arrays;
};

[[noreturn]] inline void toml_fail(const std::string& origin, int line,
                                   const std::string& msg) {
    throw config_error(origin + ":" + std::to_string(line) + ": " + msg);
}

inline std::string toml_trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Removes a trailing comment, honoring quoted strings.
inline std::string toml_strip_comment(const std::string& s) {
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_str) {
            if (c == '\\') ++i;
            else if (c == '"') in_str = false;
        } else if (c == '"') {
            in_str = true;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

inline bool toml_bare_key(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            return false;
    return true;
}

inline TomlValue toml_parse_value(const std::string& origin, int line,
                                  const std::string& raw) {
    TomlValue v;
    v.line = line;
    if (!raw.empty() && raw.front() == '"') {
        v.kind = TomlValue::string_v;
        std::string out;
        size_t i = 1;
        for (; i < raw.size(); ++i) {
            char c = raw[i];
            if (c == '\\') {
                if (i + 1 >= raw.size()) toml_fail(origin, line, "dangling escape");
                char e = raw[++i];
                if (e == 'n') out += '\n';
                else if (e == 't') out += '\t';
                else if (e == '"') out += '"';
                else if (e == '\\') out += '\\';
                else toml_fail(origin, line, std::string("unknown escape \\") + e);
            } else if (c == '"') {
                break;
            } else {
                out += c;
            }
        }
        if (i >= raw.size()) toml_fail(origin, line, "unterminated string");
        if (!toml_trim(raw.substr(i + 1)).empty())
            toml_fail(origin, line, "trailing characters after string");
        v.s = out;
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = TomlValue::bool_v;
        v.b = raw == "true";
        return v;
    }
    // integer if it consumes fully without . e E; float otherwise
    bool integral = !raw.empty();
    for (size_t i = 0; i < raw.size() && integral; ++i) {
        char c = raw[i];
        if (i == 0 && (c == '+' || c == '-')) continue;
        if (!std::isdigit(static_cast<unsigned char>(c))) integral = false;
    }
    if (integral && raw != "+" && raw != "-") {
        v.kind = TomlValue::int_v;
        try {
            v.i = std::stoll(raw);
        } catch (const std::exception&) {
            toml_fail(origin, line, "integer out of range: " + raw);
        }
        v.f = static_cast<double>(v.i);
        return v;
    }
    char* end = nullptr;
    double f = std::strtod(raw.c_str(), &end);
    if (raw.empty() || end != raw.c_str() + raw.size())
        toml_fail(origin, line, "cannot parse value: " + raw);
    v.kind = TomlValue::float_v;
    v.f = f;
    return v;
}

inline TomlDoc toml_parse(const std::string& text, const std::string& origin) {
    TomlDoc doc;
    doc.origin = origin;
    TomlTable* target = &doc.root;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = toml_trim(toml_strip_comment(raw));
        if (s.empty()) continue;
        if (s.size() >= 4 && s.compare(0, 2, "[[") == 0 && s.compare(s.size() - 2, 2, "]]") == 0) {
            std::string name = toml_trim(s.substr(2, s.size() - 4));
            if (!toml_bare_key(name)) toml_fail(origin, line, "bad table name: " + name);
            doc.arrays[name].push_back(TomlTable{{}, line});
            target = &doc.arrays[name].back();
            continue;
        }
        if (s.front() == '[' && s.back() == ']') {
            std::string name = toml_trim(s.substr(1, s.size() - 2));
            if (!toml_bare_key(name)) toml_fail(origin, line, "bad section name: " + name);
            if (doc.sections.count(name))
                toml_fail(origin, line, "duplicate section [" + name + "]");
            doc.sections[name] = TomlTable{{}, line};
            target = &doc.sections[name];
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            toml_fail(origin, line, "expected key = value");
        std::string key = toml_trim(s.substr(0, eq));
        std::string val = toml_trim(s.substr(eq + 1));
        if (!toml_bare_key(key)) toml_fail(origin, line, "bad key: " + key);
        if (target->values.count(key))
            toml_fail(origin, line, "duplicate key: " + key);
        target->values[key] = toml_parse_value(origin, line, val);
    }
    return doc;
}

inline const TomlValue* toml_find(const TomlTable& t, const std::string& key) {
    auto it = t.values.find(key);
    if (it == t.values.end()) return nullptr;
    it->second.used = true;
    return &it->second;
}

inline double toml_float(const TomlDoc& doc, const TomlTable& t, const std::string& path,
                         const std::string& key, double fallback) {
    const TomlValue* v = toml_find(t, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::float_v && v->kind != TomlValue::int_v)
        toml_fail(doc.origin, v->line, path + key + ": expected a number");
    return v->f;
}

inline long toml_int(const TomlDoc& doc, const TomlTable& t, const std::string& path,
                     const std::string& key, long fallback) {
    const TomlValue* v = toml_find(t, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::int_v)
        toml_fail(doc.origin, v->line, path + key + ": expected an integer");
    return static_cast<long>(v->i);
}

inline std::string toml_string(const TomlDoc& doc, const TomlTable& t,
                               const std::string& path, const std::string& key,
                               const std::string& fallback) {
    const TomlValue* v = toml_find(t, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::string_v)
        toml_fail(doc.origin, v->line, path + key + ": expected a string");
    return v->s;
}

inline void toml_reject_unused(const TomlDoc& doc, const TomlTable& t,
                               const std::string& path) {
    for (const auto& [key, value] : t.values)
        if (!value.used)
            toml_fail(doc.origin, value.line, "unknown key " + path + key);
}

} // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::string& origin) {
    detail::TomlDoc doc = detail::toml_parse(text, origin);
    ExperimentConfig cfg;

    const detail::TomlValue* model = detail::toml_find(doc.root, "model");
    if (!model) throw config_error(origin + ": missing required key 'model'");
    if (model->kind != detail::TomlValue::string_v)
        detail::toml_fail(origin, model->line, "model: expected a string");
    if (model->s == "gradient_flow") cfg.model = ExperimentModel::gradient_flow;
    else if (model->s == "maxwell_higgs") cfg.model = ExperimentModel::maxwell_higgs;
    else if (model->s == "effective_gf") cfg.model = ExperimentModel::effective_gf;
    else if (model->s == "effective_mh") cfg.model = ExperimentModel::effective_mh;
    else
        detail::toml_fail(origin, model->line,
                          "model: unknown model '" + model->s +
                              "' (expected gradient_flow, maxwell_higgs, effective_gf, "
                              "or effective_mh)");

    cfg.lambda = detail::toml_float(doc, doc.root, "", "lambda", cfg.lambda);
    cfg.output_dir = detail::toml_string(doc, doc.root, "", "output_dir", cfg.output_dir);
    detail::toml_reject_unused(doc, doc.root, "");

    if (auto it = doc.sections.find("lattice"); it != doc.sections.end()) {
        const detail::TomlTable& t = it->second;
        cfg.lattice.extent = detail::toml_float(doc, t, "lattice.", "extent", cfg.lattice.extent);
        cfg.lattice.points_per_side = static_cast<int>(
            detail::toml_int(doc, t, "lattice.", "points_per_side", cfg.lattice.points_per_side));
        detail::toml_reject_unused(doc, t, "lattice.");
    }
    if (auto it = doc.sections.find("run"); it != doc.sections.end()) {
        const detail::TomlTable& t = it->second;
        cfg.run.cfl_factor = detail::toml_float(doc, t, "run.", "cfl_factor", cfg.run.cfl_factor);
        cfg.run.courant_factor =
            detail::toml_float(doc, t, "run.", "courant_factor", cfg.run.courant_factor);
        cfg.run.dt_effective =
            detail::toml_float(doc, t, "run.", "dt_effective", cfg.run.dt_effective);
        cfg.run.t_end = detail::toml_float(doc, t, "run.", "t_end", cfg.run.t_end);
        cfg.run.snapshot_every =
            detail::toml_int(doc, t, "run.", "snapshot_every", cfg.run.snapshot_every);
        detail::toml_reject_unused(doc, t, "run.");
    }
    if (auto it = doc.sections.find("compare"); it != doc.sections.end()) {
        const detail::TomlTable& t = it->second;
        cfg.compare.deviation_factor =
            detail::toml_float(doc, t, "compare.", "deviation_factor", cfg.compare.deviation_factor);
        cfg.compare.law_residual_limit = detail::toml_float(
            doc, t, "compare.", "law_residual_limit", cfg.compare.law_residual_limit);
        detail::toml_reject_unused(doc, t, "compare.");
    }
    for (const auto& [name, tables] : doc.sections)
        if (name != "lattice" && name != "run" && name != "compare")
            detail::toml_fail(origin, tables.line, "unknown section [" + name + "]");

    if (auto it = doc.arrays.find("vortices"); it != doc.arrays.end()) {
        for (size_t j = 0; j < it->second.size(); ++j) {
            const detail::TomlTable& t = it->second[j];
            std::string path = "vortices[" + std::to_string(j) + "].";
            VortexSpec v;
            v.x = detail::toml_float(doc, t, path, "x", 0.0);
            v.y = detail::toml_float(doc, t, path, "y", 0.0);
            v.n = static_cast<int>(detail::toml_int(doc, t, path, "n", 1));
            v.px = detail::toml_float(doc, t, path, "px", 0.0);
            v.py = detail::toml_float(doc, t, path, "py", 0.0);
            detail::toml_reject_unused(doc, t, path);
            cfg.vortices.push_back(v);
        }
    }
    for (const auto& [name, tables] : doc.arrays)
        if (name != "vortices")
            detail::toml_fail(origin, tables.front().line, "unknown table [[" + name + "]]");

    cfg.validate();
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "model = \"" << model_name(cfg.model) << "\"\n";
    os << "lambda = " << format_g17(cfg.lambda) << "\n";
    os << "output_dir = \"" << cfg.output_dir << "\"\n\n";
    os << "[lattice]\n";
    os << "extent = " << format_g17(cfg.lattice.extent) << "\n";
    os << "points_per_side = " << cfg.lattice.points_per_side << "\n\n";
    os << "[run]\n";
    os << "cfl_factor = " << format_g17(cfg.run.cfl_factor) << "\n";
    os << "courant_factor = " << format_g17(cfg.run.courant_factor) << "\n";
    os << "dt_effective = " << format_g17(cfg.run.dt_effective) << "\n";
    os << "t_end = " << format_g17(cfg.run.t_end) << "\n";
    os << "snapshot_every = " << cfg.run.snapshot_every << "\n\n";
    os << "[compare]\n";
    os << "deviation_factor = " << format_g17(cfg.compare.deviation_factor) << "\n";
    os << "law_residual_limit = " << format_g17(cfg.compare.law_residual_limit) << "\n";
    for (const VortexSpec& v : cfg.vortices) {
        os << "\n[[vortices]]\n";
        os << "x = " << format_g17(v.x) << "\n";
        os << "y = " << format_g17(v.y) << "\n";
        os << "n = " << v.n << "\n";
        if (v.px != 0.0 || v.py != 0.0) {
            os << "px = " << format_g17(v.px) << "\n";
            os << "py = " << format_g17(v.py) << "\n";
        }
    }
    return os.str();
}

} // namespace glvx

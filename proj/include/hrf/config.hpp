#pragma once

// Run configuration: a JSON key-value tree with strict key checking.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrf/error.hpp"
#include "hrf/grid.hpp"
#include "hrf/operator_field.hpp"

namespace hrf {

using json = nlohmann::json;

struct WindowSpec {
    std::string preset = "box";
    std::string file;  // CSV of re,im samples; overrides preset
    std::size_t n = 1024;
    double lo = 0.0;
    double hi = 1.0;
    double amplitude = 1.0;
    double x0 = 0.0;  // file windows only
    double dx = 0.0;  // file windows only
};

struct RunConfig {
    WindowSpec v;
    std::optional<WindowSpec> w;
    LatticeSpec lattice{1.0, 2.0, 2, 1};
    double t = 0.55;
    ScaleExpr scale_phi{};
    ScaleExpr scale_psi{};
    std::size_t n_alpha = 128;
    std::vector<double> torus_points;
    int M = 1;
    double tol = 1e-6;
    double omega_rel = 1e-10;
    double svd_cutoff = 1e-9;
    QuadratureKind quadrature = QuadratureKind::riemann_midpoint;
    int trials = 20;
    std::uint64_t seed = 1;
    std::vector<double> t_list;
    std::string instance;
    std::string out_dir = "hrf-out";
    std::filesystem::path base_dir = ".";

    TorusGrid torus() const {
        return torus_points.empty() ? TorusGrid::midpoint(n_alpha) : TorusGrid::points(torus_points);
    }
};

namespace detail {

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw Error(ErrorCode::config, "expected an object", where);
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, _] : j.items())
        if (!ok.count(k)) throw Error(ErrorCode::config, "unknown key", where.empty() ? k : where + "." + k);
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    const std::string path = where.empty() ? key : where + "." + key;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::config, "value has the wrong type", path);
    }
}

inline WindowSpec parse_window(const json& j, const std::string& where) {
    allow_keys(j, where, {"preset", "file", "n", "support", "amplitude", "x0", "dx"});
    WindowSpec s;
    s.preset = get<std::string>(j, "preset", where, s.preset);
    s.file = get<std::string>(j, "file", where, "");
    const auto n = get<long long>(j, "n", where, 1024);
    if (n < 2) throw Error(ErrorCode::config, "window needs n >= 2", where + ".n");
    s.n = static_cast<std::size_t>(n);
    if (j.contains("support")) {
        const auto sup = get<std::vector<double>>(j, "support", where, {});
        if (sup.size() != 2 || !(sup[1] > sup[0]))
            throw Error(ErrorCode::config, "support must be [lo, hi] with lo < hi", where + ".support");
        s.lo = sup[0];
        s.hi = sup[1];
    }
    s.amplitude = get<double>(j, "amplitude", where, 1.0);
    s.x0 = get<double>(j, "x0", where, 0.0);
    s.dx = get<double>(j, "dx", where, 0.0);
    if (s.file.empty()) parse_window_preset(s.preset, where + ".preset");
    else if (!(s.dx > 0.0)) throw Error(ErrorCode::config, "file windows need dx > 0", where + ".dx");
    return s;
}

inline ScaleExpr parse_scale(const json& j, const std::string& where) {
    allow_keys(j, where, {"c", "p"});
    return {get<double>(j, "c", where, 1.0), get<double>(j, "p", where, 0.0)};
}

inline json window_to_json(const WindowSpec& s) {
    json j;
    if (s.file.empty()) {
        j["preset"] = s.preset;
        j["n"] = s.n;
        j["support"] = {s.lo, s.hi};
    } else {
        j["file"] = s.file;
        j["x0"] = s.x0;
        j["dx"] = s.dx;
    }
    j["amplitude"] = s.amplitude;
    return j;
}

}  // namespace detail

inline RunConfig parse_config(const json& root, std::filesystem::path base_dir = ".") {
    using detail::get;
    detail::allow_keys(root, "", {"windows", "lattice", "field", "torus", "truncation", "tolerances", "quadrature",
                                  "trials", "seed", "scan", "classify", "output"});
    RunConfig c;
    c.base_dir = std::move(base_dir);
    if (root.contains("windows")) {
        const json& w = root["windows"];
        detail::allow_keys(w, "windows", {"v", "w"});
        if (w.contains("v")) c.v = detail::parse_window(w["v"], "windows.v");
        if (w.contains("w")) c.w = detail::parse_window(w["w"], "windows.w");
    }
    if (root.contains("lattice")) {
        const json& l = root["lattice"];
        detail::allow_keys(l, "lattice", {"a", "b", "k_max", "central_range"});
        c.lattice.a = get<double>(l, "a", "lattice", c.lattice.a);
        c.lattice.b = get<double>(l, "b", "lattice", c.lattice.b);
        c.lattice.k_max = get<int>(l, "k_max", "lattice", c.lattice.k_max);
        c.lattice.central_range = get<int>(l, "central_range", "lattice", c.lattice.central_range);
    }
    c.lattice.validate();
    if (root.contains("field")) {
        const json& f = root["field"];
        detail::allow_keys(f, "field", {"t", "scale_phi", "scale_psi"});
        c.t = get<double>(f, "t", "field", c.t);
        if (f.contains("scale_phi")) c.scale_phi = detail::parse_scale(f["scale_phi"], "field.scale_phi");
        if (f.contains("scale_psi")) c.scale_psi = detail::parse_scale(f["scale_psi"], "field.scale_psi");
    }
    if (!(c.t > 0.0 && c.t < 1.0)) throw Error(ErrorCode::config, "t must lie in (0, 1)", "field.t");
    if (root.contains("torus")) {
        const json& t = root["torus"];
        detail::allow_keys(t, "torus", {"n_alpha", "points"});
        const auto n = get<long long>(t, "n_alpha", "torus", static_cast<long long>(c.n_alpha));
        if (n < 1) throw Error(ErrorCode::config, "n_alpha must be >= 1", "torus.n_alpha");
        c.n_alpha = static_cast<std::size_t>(n);
        c.torus_points = get<std::vector<double>>(t, "points", "torus", {});
        for (double a : c.torus_points)
            if (!(a > 0.0 && a <= 1.0)) throw Error(ErrorCode::config, "torus points must lie in (0, 1]", "torus.points");
    }
    if (root.contains("truncation")) {
        const json& t = root["truncation"];
        detail::allow_keys(t, "truncation", {"M"});
        c.M = get<int>(t, "M", "truncation", c.M);
        if (c.M < 0) throw Error(ErrorCode::config, "M must be >= 0", "truncation.M");
    }
    if (root.contains("tolerances")) {
        const json& t = root["tolerances"];
        detail::allow_keys(t, "tolerances", {"check", "omega_rel", "svd_cutoff"});
        c.tol = get<double>(t, "check", "tolerances", c.tol);
        c.omega_rel = get<double>(t, "omega_rel", "tolerances", c.omega_rel);
        c.svd_cutoff = get<double>(t, "svd_cutoff", "tolerances", c.svd_cutoff);
        if (!(c.tol > 0.0)) throw Error(ErrorCode::config, "tolerance must be > 0", "tolerances.check");
        if (!(c.omega_rel >= 0.0)) throw Error(ErrorCode::config, "omega_rel must be >= 0", "tolerances.omega_rel");
        if (!(c.svd_cutoff > 0.0 && c.svd_cutoff < 1.0))
            throw Error(ErrorCode::config, "svd_cutoff must lie in (0, 1)", "tolerances.svd_cutoff");
    }
    if (root.contains("quadrature"))
        c.quadrature = parse_quadrature_kind(get<std::string>(root, "quadrature", "", ""), "quadrature");
    c.trials = get<int>(root, "trials", "", c.trials);
    if (c.trials < 1) throw Error(ErrorCode::config, "trials must be >= 1", "trials");
    c.seed = get<std::uint64_t>(root, "seed", "", c.seed);
    if (root.contains("scan")) {
        const json& s = root["scan"];
        detail::allow_keys(s, "scan", {"t_list"});
        c.t_list = get<std::vector<double>>(s, "t_list", "scan", {});
        for (double t : c.t_list)
            if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::config, "scan values of t must lie in (0, 1)", "scan.t_list");
    }
    if (root.contains("classify")) {
        const json& s = root["classify"];
        detail::allow_keys(s, "classify", {"instance"});
        c.instance = get<std::string>(s, "instance", "classify", "");
    }
    if (root.contains("output")) {
        const json& s = root["output"];
        detail::allow_keys(s, "output", {"dir"});
        c.out_dir = get<std::string>(s, "dir", "output", c.out_dir);
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config, "cannot open config file '" + path.string() + "'");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::config, "parse error in '" + path.string() + "': " + e.what());
    }
    return parse_config(root, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// Normalised echo of the configuration (everything a verdict depends on).
inline json config_to_json(const RunConfig& c) {
    json j;
    j["windows"]["v"] = detail::window_to_json(c.v);
    if (c.w) j["windows"]["w"] = detail::window_to_json(*c.w);
    j["lattice"] = {{"a", c.lattice.a}, {"b", c.lattice.b}, {"k_max", c.lattice.k_max},
                    {"central_range", c.lattice.central_range}};
    j["field"] = {{"t", c.t},
                  {"scale_phi", {{"c", c.scale_phi.c}, {"p", c.scale_phi.p}}},
                  {"scale_psi", {{"c", c.scale_psi.c}, {"p", c.scale_psi.p}}}};
    if (c.torus_points.empty()) j["torus"] = {{"n_alpha", c.n_alpha}};
    else j["torus"] = {{"points", c.torus_points}};
    j["truncation"] = {{"M", c.M}};
    j["tolerances"] = {{"check", c.tol}, {"omega_rel", c.omega_rel}, {"svd_cutoff", c.svd_cutoff}};
    j["quadrature"] = std::string(to_string(c.quadrature));
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    if (!c.t_list.empty()) j["scan"] = {{"t_list", c.t_list}};
    if (!c.instance.empty()) j["classify"] = {{"instance", c.instance}};
    return j;
}

/// Reads a window from a CSV file of `re,im` rows (optional header).
inline SampledWindow load_window_csv(const std::filesystem::path& path, double x0, double dx) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config, "cannot open window file '" + path.string() + "'");
    std::vector<cplx> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double re = 0.0;
        double im = 0.0;
        if (!(row >> re)) {
            if (lineno == 1) continue;
            throw Error(ErrorCode::config, "bad sample on line " + std::to_string(lineno) + " of " + path.string());
        }
        row >> im;
        samples.emplace_back(re, im);
    }
    if (samples.size() < 2) throw Error(ErrorCode::config, "window file needs at least 2 samples: " + path.string());
    return SampledWindow(std::move(samples), x0, dx);
}

inline SampledWindow make_window(const WindowSpec& s, const std::filesystem::path& base_dir) {
    SampledWindow w = s.file.empty()
                          ? window_preset(s.preset, s.n, s.lo, s.hi)
                          : load_window_csv(std::filesystem::path(s.file).is_absolute() ? std::filesystem::path(s.file) : base_dir / s.file,
                                            s.x0, s.dx);
    return s.amplitude == 1.0 ? w : w.scaled(s.amplitude);
}

}  // namespace hrf

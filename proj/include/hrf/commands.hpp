#pragma once

// Command drivers behind the `hrf` executable. Each returns the report tree,
// the CSV traces and the process exit status; nothing here touches the file
// system except reading inputs named by the configuration.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hrf/bracket.hpp"
#include "hrf/config.hpp"
#include "hrf/error.hpp"
#include "hrf/fiber_frames.hpp"
#include "hrf/operator_field.hpp"
#include "hrf/report.hpp"

namespace hrf {

struct CommandResult {
    std::string command;
    int exit_code = 0;
    json report;
    std::vector<CsvTable> tables;
};

namespace detail {

struct Fields {
    SampledWindow v;
    SampledWindow w;
    OperatorField phi;
    OperatorField psi;
};

inline Fields make_fields(const RunConfig& c) {
    SampledWindow v = make_window(c.v, c.base_dir);
    SampledWindow w = c.w ? make_window(*c.w, c.base_dir) : v;
    OperatorField phi = OperatorField::rank_one(v, v, {c.t, 1.0}, c.scale_phi);
    OperatorField psi = OperatorField::rank_one(w, w, {c.t, 1.0}, c.scale_psi);
    return {std::move(v), std::move(w), std::move(phi), std::move(psi)};
}

inline CheckOptions check_options(const RunConfig& c, int jobs) {
    CheckOptions o;
    o.tol = c.tol;
    o.omega_rel = c.omega_rel;
    o.bracket.M = c.M;
    o.bracket.jobs = jobs;
    return o;
}

inline json base_report(const RunConfig& c, std::string command) {
    json r;
    r["engine_version"] = engine_version;
    r["command"] = std::move(command);
    r["config"] = config_to_json(c);
    r["checks"] = json::array();
    r["traces"] = json::array();
    return r;
}

inline std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace detail

/// Bracket traces [phi, phi] and [phi, psi], with closed-form deviation
/// columns when both scales are the identity.
inline CommandResult cmd_bracket(const RunConfig& c, int jobs = 1) {
    CommandResult out{"bracket", 0, detail::base_report(c, "bracket"), {}};
    const auto f = detail::make_fields(c);
    const TorusGrid grid = c.torus();
    const auto opts = detail::check_options(c, jobs);
    const TorusFunction self = bracket(f.phi, f.phi, grid, opts.bracket);
    const TorusFunction cross = bracket(f.phi, f.psi, grid, opts.bracket);
    const bool closed = c.scale_phi.is_identity() && c.scale_psi.is_identity();
    const double nv2 = f.v.norm_squared();
    const double vw2 = std::norm(inner_product(f.v, f.w));

    CsvTable t{"bracket_trace", {"alpha", "self", "cross_re", "cross_im"}, {}};
    if (closed) {
        t.header.push_back("self_minus_closed_form");
        t.header.push_back("cross_minus_closed_form");
    }
    double dev_self = 0.0;
    double dev_cross = 0.0;
    for (std::size_t a = 0; a < grid.size(); ++a) {
        const double alpha = grid[a];
        std::vector<std::string> row{format_double(alpha), format_double(self.values[a].real()),
                                     format_double(cross.values[a].real()), format_double(cross.values[a].imag())};
        if (closed) {
            const bool on = alpha > c.t && alpha <= 1.0;
            const double ds = self.values[a].real() - (on ? nv2 * nv2 * alpha : 0.0);
            const double dc = std::abs(cross.values[a] - (on ? vw2 * alpha : 0.0));
            dev_self = std::max(dev_self, std::abs(ds));
            dev_cross = std::max(dev_cross, dc);
            row.push_back(format_double(ds));
            row.push_back(format_double(cross.values[a].real() - (on ? vw2 * alpha : 0.0)));
        }
        t.add(std::move(row));
    }
    const QuadratureRule rule{c.quadrature};
    const double norm_exact = field_norm_squared(f.phi);
    const double norm_quad = field_norm_squared_quadrature(f.phi, rule, 4096);
    json s;
    s["closed_form_available"] = closed;
    if (closed) {
        s["max_self_deviation"] = dev_self;
        s["max_cross_deviation"] = dev_cross;
        s["window_inner_product_abs2"] = vw2;
    }
    s["field_norm_squared"] = norm_exact;
    s["field_norm_squared_quadrature"] = norm_quad;
    s["plancherel_torus_sum"] = self.integral().real();
    s["max_self_bracket"] = self.max_abs();
    out.report["summary"] = s;
    out.report["traces"].push_back("bracket_trace.csv");
    if (closed && std::max(dev_self, dev_cross) > c.tol) out.exit_code = 1;
    out.tables.push_back(std::move(t));
    return out;
}

/// One of the bracket-engine checks: orth, bio, repro, bessel, parseval.
inline CommandResult cmd_check(const RunConfig& c, std::string_view which, int jobs = 1) {
    const std::string name(which);
    CommandResult out{"check_" + name, 0, detail::base_report(c, "check " + name), {}};
    const auto f = detail::make_fields(c);
    const TorusGrid grid = c.torus();
    const auto opts = detail::check_options(c, jobs);
    const OmegaSet omega = omega_set(f.phi, grid, {}, opts.bracket, c.omega_rel);

    CsvTable t{"check_" + name + "_trace", {"alpha", "self_bracket", "in_omega"}, {}};
    CheckStatus status = CheckStatus::pass;
    std::vector<double> resA, resB;
    if (which == "orth") {
        const CheckReport r = check_orthogonality(f.phi, c.lattice, grid, opts);
        out.report["checks"].push_back(to_json(r));
        status = r.status;
    } else if (which == "bio") {
        const CheckReport r = check_biorthogonality(f.phi, f.psi, c.lattice, grid, opts);
        out.report["checks"].push_back(to_json(r));
        status = r.status;
    } else if (which == "repro") {
        ReproducingOptions ro;
        ro.check = opts;
        ro.trials = c.trials;
        ro.seed = c.seed;
        const ReproducingReport full = check_reproducing(f.phi, f.psi, c.lattice, grid, ro);
        ro.lambda0_only = true;
        const ReproducingReport central = check_reproducing(f.phi, f.psi, c.lattice, grid, ro);
        out.report["checks"].push_back(to_json(full.report));
        out.report["checks"].push_back(to_json(central.report));
        out.report["summary"] = {{"residual_A", full.residual_A},
                                 {"residual_B", full.residual_B},
                                 {"consistent", full.consistent},
                                 {"lambda0_verdict_matches", full.report.verdict == central.report.verdict}};
        status = full.report.status;
        resA = full.profile.residual_A;
        resB = full.profile.residual_B;
        t.header.push_back("residual_A");
        t.header.push_back("residual_B");
    } else if (which == "bessel") {
        SeededCheckOptions so{opts, c.trials, c.seed};
        const CheckReport r = check_bessel(f.phi, c.lattice, grid, so);
        out.report["checks"].push_back(to_json(r));
        out.report["summary"] = {{"bessel_bound", bessel_bound(f.phi, grid, opts.bracket)}};
        status = r.status;
    } else if (which == "parseval") {
        SeededCheckOptions so{opts, c.trials, c.seed};
        const CheckReport r = decomposition_parseval_check(f.phi, c.lattice, grid, so);
        out.report["checks"].push_back(to_json(r));
        status = r.status;
    } else {
        throw Error(ErrorCode::config, "unknown check '" + name + "' (orth, bio, repro, bessel, parseval)");
    }
    for (std::size_t a = 0; a < grid.size(); ++a) {
        std::vector<std::string> row{format_double(grid[a]), format_double(omega.self.values[a].real()),
                                     detail::flag(omega.mask[a])};
        if (!resA.empty()) {
            row.push_back(format_double(resA[a]));
            row.push_back(format_double(resB[a]));
        }
        t.add(std::move(row));
    }
    out.report["traces"].push_back(t.name + ".csv");
    out.tables.push_back(std::move(t));
    out.exit_code = exit_code(status);
    return out;
}

/// Condition profile and reproducing residuals of H_t(v), H_t(w) for every
/// t in scan.t_list (default: field.t).
inline CommandResult cmd_gabor_scan(const RunConfig& c, int jobs = 1) {
    CommandResult out{"gabor-scan", 0, detail::base_report(c, "gabor-scan"), {}};
    const auto f = detail::make_fields(c);
    const TorusGrid grid = c.torus();
    ReproducingOptions ro;
    ro.check = detail::check_options(c, jobs);
    ro.trials = c.trials;
    ro.seed = c.seed;
    const std::vector<double> ts = c.t_list.empty() ? std::vector<double>{c.t} : c.t_list;
    CsvTable t{"gabor_scan",
               {"t", "alpha", "hypothesis_ok", "condition_profile", "residual_A", "residual_B"}, {}};
    bool any_hypothesis_failure = false;
    bool all_consistent = true;
    json per_t = json::array();
    for (double tv : ts) {
        const GaborScanReport r = gabor_application_scan(f.v, f.w, c.lattice, tv, grid, ro);
        for (const auto& row : r.rows)
            t.add({format_double(row.t), format_double(row.alpha), detail::flag(row.hypothesis_ok),
                   format_double(row.condition_profile), format_double(row.residual_A),
                   format_double(row.residual_B)});
        json e = to_json(r.report);
        e["t"] = tv;
        e["equivalence"] = r.report.status == CheckStatus::hypothesis_failure ? "undetermined"
                           : r.report.verdict                                 ? "consistent"
                                                                              : "inconsistent";
        e["hypothesis_ok"] = r.hypothesis_ok;
        e["first_hypothesis_failure_alpha"] = finite_or_null(r.first_hypothesis_failure);
        e["condition_holds"] = r.condition_holds;
        e["reproducing_holds"] = r.reproducing_holds;
        per_t.push_back(e);
        any_hypothesis_failure = any_hypothesis_failure || r.report.status == CheckStatus::hypothesis_failure;
        all_consistent = all_consistent && r.report.verdict;
    }
    out.report["checks"] = per_t;
    out.report["traces"].push_back("gabor_scan.csv");
    out.tables.push_back(std::move(t));
    out.exit_code = any_hypothesis_failure ? 2 : all_consistent ? 0 : 1;
    return out;
}

struct DualInstanceFiber {
    FiberSystem a;
    FiberSystem a_prime;
};

namespace detail {

inline Eigen::MatrixXcd parse_matrix(const json& j, const std::string& where, Eigen::Index rows) {
    if (!j.is_array() || j.empty()) throw Error(ErrorCode::config, "matrix must be a nonempty array of rows", where);
    if (static_cast<Eigen::Index>(j.size()) != rows)
        throw Error(ErrorCode::config, "matrix row count differs from 'dimension'", where);
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXcd M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw Error(ErrorCode::config, "ragged matrix rows", where);
        for (Eigen::Index k = 0; k < cols; ++k) {
            const json& e = row[static_cast<std::size_t>(k)];
            if (e.is_number()) M(r, k) = e.get<double>();
            else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
                M(r, k) = cplx(e[0].get<double>(), e[1].get<double>());
            else throw Error(ErrorCode::config, "matrix entries must be numbers or [re, im] pairs", where);
        }
    }
    return M;
}

}  // namespace detail

/// Instance format: {"dimension": D, "fibers": [{"alpha", "weights", "A", "A_prime"}]}
/// with A, A_prime given as D rows of K entries (numbers or [re, im]).
inline std::vector<DualInstanceFiber> parse_dual_instance(const json& j) {
    detail::allow_keys(j, "instance", {"dimension", "fibers"});
    if (!j.contains("dimension") || !j["dimension"].is_number_integer())
        throw Error(ErrorCode::config, "missing integer 'dimension'", "instance.dimension");
    const auto D = j["dimension"].get<long long>();
    if (D < 1) throw Error(ErrorCode::config, "dimension must be >= 1", "instance.dimension");
    if (D > max_fiber_dimension)
        throw Error(ErrorCode::dimension_cap, "instance dimension " + std::to_string(D) + " exceeds the cap of "
                                                  + std::to_string(max_fiber_dimension));
    if (!j.contains("fibers") || !j["fibers"].is_array() || j["fibers"].empty())
        throw Error(ErrorCode::config, "instance has no fibers", "instance.fibers");
    std::vector<DualInstanceFiber> out;
    for (std::size_t i = 0; i < j["fibers"].size(); ++i) {
        const json& f = j["fibers"][i];
        const std::string where = "instance.fibers[" + std::to_string(i) + "]";
        detail::allow_keys(f, where, {"alpha", "weights", "A", "A_prime"});
        if (!f.contains("alpha") || !f.contains("A") || !f.contains("A_prime"))
            throw Error(ErrorCode::config, "fiber needs alpha, A and A_prime", where);
        const double alpha = f["alpha"].get<double>();
        Eigen::MatrixXcd A = detail::parse_matrix(f["A"], where + ".A", D);
        Eigen::MatrixXcd B = detail::parse_matrix(f["A_prime"], where + ".A_prime", D);
        if (A.cols() != B.cols())
            throw Error(ErrorCode::index_mismatch, "A and A_prime have different numbers of vectors", where);
        std::vector<double> w = f.contains("weights") ? f["weights"].get<std::vector<double>>() : std::vector<double>{};
        out.push_back({FiberSystem::from_matrix(alpha, std::move(A), w), FiberSystem::from_matrix(alpha, std::move(B), w)});
    }
    return out;
}

inline std::vector<DualInstanceFiber> load_dual_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config, "cannot open instance file '" + path.string() + "'", "classify.instance");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::config, "parse error in '" + path.string() + "': " + e.what(), "classify.instance");
    }
    return parse_dual_instance(j);
}

/// Per-alpha dual flags for an explicit instance file.
inline CommandResult cmd_classify(const RunConfig& c, int jobs = 1) {
    CommandResult out{"classify", 0, detail::base_report(c, "classify"), {}};
    if (c.instance.empty()) throw Error(ErrorCode::config, "no instance file given", "classify.instance");
    const std::filesystem::path p =
        std::filesystem::path(c.instance).is_absolute() ? std::filesystem::path(c.instance) : c.base_dir / c.instance;
    const auto fibers = load_dual_instance(p);
    std::vector<DualReport> reports(fibers.size());
    parallel_for(fibers.size(), jobs, [&](std::size_t i) {
        reports[i] = evaluate_dual(fibers[i].a, fibers[i].a_prime, c.tol, c.svd_cutoff);
    });
    CsvTable t{"classify",
               {"alpha", "alternate", "oblique", "type_I", "type_II", "residual", "oblique_residual",
                "type_I_residual", "type_II_residual"},
               {}};
    json per = json::array();
    bool all_alt = true, all_obl = true, all_I = true, all_II = true;
    json failing = json::array();
    for (const auto& r : reports) {
        per.push_back(to_json(r));
        t.add({format_double(r.alpha), detail::flag(r.dual.alternate), detail::flag(r.dual.oblique),
               r.classified ? detail::flag(r.type_I) : "", r.classified ? detail::flag(r.type_II) : "",
               format_double(r.dual.residual), format_double(r.dual.oblique_residual),
               format_double(r.type_I_residual), format_double(r.type_II_residual)});
        all_alt = all_alt && r.dual.alternate;
        all_obl = all_obl && r.dual.oblique;
        all_I = all_I && r.classified && r.type_I;
        all_II = all_II && r.classified && r.type_II;
        if (!r.dual.alternate) failing.push_back(r.alpha);
    }
    out.report["checks"] = per;
    out.report["summary"] = {{"fibers", reports.size()},
                             {"alternate_all", all_alt},
                             {"oblique_all", all_obl},
                             {"type_I_all", all_I},
                             {"type_II_all", all_II},
                             {"alternate_failures", failing}};
    out.report["traces"].push_back("classify.csv");
    out.tables.push_back(std::move(t));
    out.exit_code = all_alt ? 0 : 1;
    return out;
}

/// Dispatch by command name ("check" takes the check name in `which`).
inline CommandResult run_command(const std::string& command, const std::string& which, const RunConfig& c, int jobs) {
    if (command == "bracket") return cmd_bracket(c, jobs);
    if (command == "check") return cmd_check(c, which, jobs);
    if (command == "gabor-scan") return cmd_gabor_scan(c, jobs);
    if (command == "classify") return cmd_classify(c, jobs);
    throw Error(ErrorCode::config, "unknown command '" + command + "'");
}

/// Report text without the timing block; identical inputs give identical text.
inline std::string render_report(const CommandResult& r) { return r.report.dump(2) + "\n"; }

/// Writes <command>.json (with a "timing" block) and every CSV table into dir.
inline void write_outputs(const CommandResult& r, const std::filesystem::path& dir, double wall_time_s, int jobs) {
    json rep = r.report;
    rep["exit_code"] = r.exit_code;
    rep["timing"] = {{"timestamp", utc_timestamp()}, {"wall_time_s", wall_time_s}, {"jobs", jobs}};
    std::string name = r.command;
    write_text(dir, name + ".json", rep.dump(2) + "\n");
    for (const auto& t : r.tables) write_text(dir, t.name + ".csv", to_csv(t));
}

}  // namespace hrf

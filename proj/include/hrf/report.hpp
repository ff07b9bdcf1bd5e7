#pragma once

// Report serialisation: JSON trees for verdicts and RFC-4180 CSV tables for
// traces.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrf/bracket.hpp"
#include "hrf/error.hpp"
#include "hrf/fiber_frames.hpp"

namespace hrf {

using json = nlohmann::json;

inline constexpr const char* engine_version = "0.1.0";

/// Decimal rendering with 17 significant digits.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

/// RFC-4180 text: CRLF line endings, header row first.
inline std::string to_csv(const CsvTable& t) {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_field(cells[i]);
        }
        out += "\r\n";
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const Witness& w) {
    json j;
    j["alpha"] = finite_or_null(w.alpha);
    if (w.has_lattice) j["lambda1"] = {{"m", w.m}, {"n", w.n}};
    j["value"] = to_json(w.value);
    return j;
}

inline json to_json(const CheckReport& r) {
    json j;
    j["name"] = r.name;
    j["status"] = std::string(to_string(r.status));
    j["verdict"] = r.verdict;
    j["max_violation"] = finite_or_null(r.max_violation);
    j["tolerance"] = r.tolerance;
    j["truncation_residual"] = finite_or_null(r.truncation_residual);
    j["worst_witness"] = to_json(r.worst);
    json d = json::object();
    for (const auto& [k, v] : r.diagnostics) d[k] = finite_or_null(v);
    j["diagnostics"] = d;
    if (!r.message.empty()) j["message"] = r.message;
    return j;
}

inline json to_json(const DualReport& r) {
    json j;
    j["alpha"] = r.alpha;
    j["alternate"] = r.dual.alternate;
    j["oblique"] = r.dual.oblique;
    j["classified"] = r.classified;
    j["type_I"] = r.classified ? json(r.type_I) : json(nullptr);
    j["type_II"] = r.classified ? json(r.type_II) : json(nullptr);
    j["residual"] = r.dual.residual;
    j["oblique_residual"] = r.dual.oblique_residual;
    j["type_I_residual"] = r.type_I_residual;
    j["type_II_residual"] = r.type_II_residual;
    j["rank"] = r.dual.rank;
    j["rank_prime"] = r.dual.rank_prime;
    return j;
}

/// Writes `text` to dir/name, creating the directory.
inline void write_text(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::config, "cannot write '" + (dir / name).string() + "'", "output.dir");
    out << text;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace hrf

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "hrf/commands.hpp"
#include "oracles.hpp"

using namespace hrf;
namespace fs = std::filesystem;

namespace {

const fs::path work_dir = fs::path(HRF_TEST_WORK_DIR) / "cli";

fs::path write_file(const std::string& name, const std::string& text) {
    fs::create_directories(work_dir);
    const fs::path p = work_dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args, const std::string& log = "last.log") {
    const std::string cmd = std::string(HRF_BIN) + " " + args + " > " + (work_dir / log).string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string last_log() { return read_file(work_dir / "last.log"); }

const char* half_box_config = R"({
  "windows": {"v": {"preset": "half-box-sqrt2", "n": 512}},
  "lattice": {"a": 1, "b": 2, "k_max": 2, "central_range": 1},
  "field": {"t": 0.55},
  "torus": {"n_alpha": 48},
  "trials": 8,
  "seed": 3
})";

json matrix_json(const Eigen::MatrixXcd& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back({M(r, c).real(), M(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

json dual_instance(std::uint64_t seed, int fibers, bool perturb_odd) {
    std::mt19937_64 rng(seed);
    json j;
    j["dimension"] = 4;
    j["fibers"] = json::array();
    for (int i = 0; i < fibers; ++i) {
        const auto cat = perturb_odd && i % 2 ? oracle::DualCategory::perturbed : oracle::DualCategory::canonical;
        const auto inst = oracle::make_dual_instance(rng, cat, 4, 5, (i + 0.5) / fibers);
        j["fibers"].push_back({{"alpha", inst.a.alpha},
                               {"weights", inst.a.weights},
                               {"A", matrix_json(inst.a.vectors)},
                               {"A_prime", matrix_json(inst.b.vectors)}});
    }
    return j;
}

}  // namespace

TEST(Config, ParsesAndRejectsUnknownKeys) {
    const RunConfig c = parse_config(json::parse(half_box_config));
    EXPECT_EQ(c.lattice.k_max, 2);
    EXPECT_EQ(c.n_alpha, 48u);
    EXPECT_EQ(c.seed, 3u);
    try {
        parse_config(json::parse(R"({"lattice": {"a": 1, "bb": 2}})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.key(), "lattice.bb");
    }
    try {
        parse_config(json::parse(R"({"lattice": {"a": 1, "b": 1.5}})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.key(), "lattice.a*lattice.b");
    }
    try {
        parse_config(json::parse(R"({"field": {"t": 1.0}})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.key(), "field.t");
    }
    try {
        parse_config(json::parse(R"({"torus": {"n_alpha": "many"}})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.key(), "torus.n_alpha");
    }
}

TEST(Report, CsvAndNumberFormatting) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(2.0), "2");
    CsvTable t{"t", {"a", "b"}, {}};
    t.add({"1", "x,y"});
    t.add({"2", "say \"hi\""});
    EXPECT_EQ(to_csv(t), "a,b\r\n1,\"x,y\"\r\n2,\"say \"\"hi\"\"\"\r\n");
}

TEST(Commands, BracketTraceClosedForm) {
    RunConfig c = parse_config(json::parse(half_box_config));
    const auto r = cmd_bracket(c);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_LT(r.report["summary"]["max_self_deviation"].get<double>(), 1e-8);
    EXPECT_NEAR(r.report["summary"]["field_norm_squared"].get<double>(), (1.0 - 0.55 * 0.55) / 2.0, 1e-12);
    ASSERT_EQ(r.tables.size(), 1u);
    EXPECT_EQ(r.tables[0].rows.size(), 48u);
}

TEST(Commands, ZeroWindowTraceIsZero) {
    const fs::path csv = write_file("zero.csv", "0,0\n0,0\n0,0\n0,0\n");
    json j = json::parse(half_box_config);
    j["windows"]["v"] = {{"file", csv.string()}, {"x0", 0.0}, {"dx", 0.25}};
    const auto r = cmd_bracket(parse_config(j));
    for (const auto& row : r.tables[0].rows) {
        EXPECT_EQ(std::stod(row[1]), 0.0);
        EXPECT_EQ(std::stod(row[2]), 0.0);
    }
}

TEST(Commands, GaborScanColumns) {
    json j = json::parse(half_box_config);
    j["scan"] = {{"t_list", {0.55, 0.7, 0.9}}};
    const auto r = cmd_gabor_scan(parse_config(j));
    EXPECT_EQ(r.exit_code, 0);
    for (const auto& e : r.report["checks"]) EXPECT_EQ(e["equivalence"], "consistent");
    j["windows"]["w"] = {{"preset", "half-box-sqrt2"}, {"n", 512}, {"support", {0.5, 1.5}}};
    const auto o = cmd_gabor_scan(parse_config(j));
    for (const auto& row : o.tables[0].rows) EXPECT_NEAR(std::stod(row[3]), -1.0, 1e-12);
}

TEST(Commands, ClassifyInstances) {
    const fs::path good = write_file("canonical.json", dual_instance(1, 6, false).dump());
    json j = json::parse(half_box_config);
    j["classify"] = {{"instance", good.string()}};
    const auto r = cmd_classify(parse_config(j));
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_TRUE(r.report["summary"]["type_I_all"].get<bool>());
    EXPECT_TRUE(r.report["summary"]["type_II_all"].get<bool>());

    const fs::path bad = write_file("perturbed.json", dual_instance(2, 6, true).dump());
    j["classify"] = {{"instance", bad.string()}};
    const auto p = cmd_classify(parse_config(j));
    EXPECT_EQ(p.exit_code, 1);
    const auto& failures = p.report["summary"]["alternate_failures"];
    ASSERT_EQ(failures.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(failures[i].get<double>(), (2.0 * i + 1.5) / 6.0);
}

TEST(Cli, ExitCodes) {
    const fs::path cfg = write_file("half_box.json", half_box_config);
    const std::string out = " --out " + (work_dir / "out").string();
    EXPECT_EQ(run("check orth --config " + cfg.string() + out), 0);
    EXPECT_TRUE(fs::exists(work_dir / "out" / "check_orth.json"));
    EXPECT_TRUE(fs::exists(work_dir / "out" / "check_orth_trace.csv"));

    json box = json::parse(half_box_config);
    box["windows"]["v"]["preset"] = "box";
    box["lattice"] = {{"a", 1}, {"b", 1}, {"k_max", 2}};
    box["field"]["t"] = 0.5;
    const fs::path box_cfg = write_file("box.json", box.dump());
    EXPECT_EQ(run("check orth --config " + box_cfg.string() + out), 1);
    const json rep = json::parse(read_file(work_dir / "out" / "check_orth.json"));
    EXPECT_TRUE(rep["checks"][0]["worst_witness"].contains("lambda1"));
    EXPECT_EQ(rep["exit_code"], 1);

    json bad_t = json::parse(half_box_config);
    bad_t["field"]["t"] = 1.2;
    EXPECT_EQ(run("bracket --config " + write_file("bad_t.json", bad_t.dump()).string() + out), 2);
    EXPECT_NE(last_log().find("field.t"), std::string::npos);

    json bad_ab = json::parse(half_box_config);
    bad_ab["lattice"]["b"] = 1.5;
    EXPECT_EQ(run("bracket --config " + write_file("bad_ab.json", bad_ab.dump()).string() + out), 2);
    EXPECT_NE(last_log().find("lattice.a*lattice.b"), std::string::npos);

    EXPECT_EQ(run("check nonsense --config " + cfg.string()), 2);
    EXPECT_EQ(run("bracket --config " + (work_dir / "missing.json").string()), 2);
}

TEST(Cli, ClassifyValidation) {
    const fs::path cfg = write_file("half_box.json", half_box_config);
    const std::string out = " --out " + (work_dir / "out").string();
    const fs::path empty = write_file("empty.json", R"({"dimension": 3, "fibers": []})");
    EXPECT_EQ(run("classify --config " + cfg.string() + " --instance " + empty.string() + out), 2);
    EXPECT_NE(last_log().find("instance.fibers"), std::string::npos);

    json big;
    big["dimension"] = 65;
    big["fibers"] = json::array();
    const fs::path capped = write_file("capped.json", big.dump());
    EXPECT_EQ(run("classify --config " + cfg.string() + " --instance " + capped.string() + out), 2);
    EXPECT_NE(last_log().find("cap"), std::string::npos);

    const fs::path good = write_file("canonical.json", dual_instance(1, 4, false).dump());
    EXPECT_EQ(run("classify --config " + cfg.string() + " --instance " + good.string() + out), 0);
}

TEST(Cli, ReportsIdenticalAcrossJobCounts) {
    json j = json::parse(half_box_config);
    j["scan"] = {{"t_list", {0.55, 0.8}}};
    const fs::path cfg = write_file("determinism.json", j.dump());
    for (const std::string cmd : {"check repro", "gabor-scan", "bracket"}) {
        const fs::path d1 = work_dir / "jobs1", d8 = work_dir / "jobs8";
        ASSERT_EQ(run(cmd + " --jobs 1 --config " + cfg.string() + " --out " + d1.string()),
                  run(cmd + " --jobs 8 --config " + cfg.string() + " --out " + d8.string()));
        for (const auto& e : fs::directory_iterator(d1)) {
            const std::string name = e.path().filename().string();
            std::string a = read_file(e.path()), b = read_file(d8 / name);
            if (e.path().extension() == ".json") {
                json ja = json::parse(a), jb = json::parse(b);
                ja.erase("timing");
                jb.erase("timing");
                a = ja.dump(2);
                b = jb.dump(2);
            }
            EXPECT_EQ(a, b) << cmd << " " << name;
        }
    }
}

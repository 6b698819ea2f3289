// End-to-end checks on the command-line runner: every bundled scenario
// produces byte-identical artifacts when rerun, seed and output overrides
// work, thread count never changes output bytes, and failures map to the
// documented exit codes.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pomdp/csv.hpp"
#include "pomdp/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kScenarios[] = {"filter", "sensitivity", "orders",   "social", "detect",
                            "dp",     "game",        "ruler",    "estimate"};

fs::path scratch_root() {
    fs::path p = fs::temp_directory_path() / "pomdp_cli_checks";
    fs::create_directories(p);
    return p;
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = scratch_root() / name;
    fs::remove_all(p);
    return p;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(POMDP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string bundled_config(const std::string& name) {
    return (fs::path(POMDP_SCENARIO_DIR) / (name + ".json")).string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        REQUIRE(entry.is_regular_file());
        out[entry.path().filename().string()] = slurp(entry.path());
    }
    return out;
}

} // namespace

TEST_CASE("every bundled scenario reruns to identical bytes") {
    for (const char* name : kScenarios) {
        INFO("scenario " << name);
        fs::path a = fresh_dir(std::string(name) + "_a");
        fs::path b = fresh_dir(std::string(name) + "_b");
        std::string cfg = bundled_config(name);
        REQUIRE(run_cli("--config " + cfg + " --out " + a.string()) == 0);
        REQUIRE(run_cli("--config " + cfg + " --out " + b.string()) == 0);

        auto ca = dir_contents(a);
        auto cb = dir_contents(b);
        REQUIRE(ca.size() == cb.size());
        REQUIRE(ca.size() >= 2); // at least one artifact plus the manifest
        REQUIRE(ca.count("manifest.json") == 1);
        for (const auto& [file, bytes] : ca) {
            INFO("file " << file);
            REQUIRE(cb.count(file) == 1);
            REQUIRE(bytes == cb.at(file));
        }
    }
}

TEST_CASE("manifest lists every artifact with its true size and hash") {
    fs::path dir = fresh_dir("manifest_check");
    REQUIRE(run_cli("--config " + bundled_config("filter") + " --out " + dir.string()) == 0);

    json manifest = json::parse(slurp(dir / "manifest.json"));
    REQUIRE(manifest["scenario"] == "filter");
    auto files = manifest["files"];
    REQUIRE(files.is_array());
    REQUIRE(!files.empty());

    std::size_t on_disk = 0;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().filename() != "manifest.json") ++on_disk;
    REQUIRE(files.size() == on_disk);

    for (const auto& e : files) {
        std::string bytes = slurp(dir / e["name"].get<std::string>());
        REQUIRE(bytes.size() == e["bytes"].get<std::size_t>());
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016lx",
                      static_cast<unsigned long>(pomdp::fnv1a64(bytes)));
        REQUIRE(e["hash"].get<std::string>() == hex);
    }
}

TEST_CASE("thread count changes wall time only, never bytes") {
    fs::path t1 = fresh_dir("dp_threads_1");
    fs::path t4 = fresh_dir("dp_threads_4");
    std::string cfg = bundled_config("dp");
    REQUIRE(run_cli("--config " + cfg + " --out " + t1.string() + " --threads 1") == 0);
    REQUIRE(run_cli("--config " + cfg + " --out " + t4.string() + " --threads 4") == 0);
    REQUIRE(dir_contents(t1) == dir_contents(t4));
}

TEST_CASE("seed override changes the data and is reproducible") {
    fs::path a = fresh_dir("seed_a");
    fs::path b = fresh_dir("seed_b");
    fs::path c = fresh_dir("seed_c");
    std::string cfg = bundled_config("filter");
    REQUIRE(run_cli("--config " + cfg + " --out " + a.string() + " --seed 123") == 0);
    REQUIRE(run_cli("--config " + cfg + " --out " + b.string() + " --seed 123") == 0);
    REQUIRE(run_cli("--config " + cfg + " --out " + c.string() + " --seed 124") == 0);
    REQUIRE(dir_contents(a) == dir_contents(b));
    REQUIRE(slurp(a / "filter_path.csv") != slurp(c / "filter_path.csv"));
}

TEST_CASE("matching pennies solves to value zero") {
    fs::path dir = fresh_dir("pennies");
    REQUIRE(run_cli("--config " + bundled_config("game") + " --out " + dir.string()) == 0);
    json value = json::parse(slurp(dir / "value.json"));
    REQUIRE(std::abs(value["value"].get<double>()) <= 1e-8);
    REQUIRE(value["column_strategy"].size() == 2);
    REQUIRE(value["row_strategy"].size() == 2);
}

TEST_CASE("unknown scenario name exits 4") {
    fs::path dir = fresh_dir("unknown_scn");
    fs::create_directories(dir);
    fs::path cfg = dir / "config.json";
    std::ofstream(cfg) << R"({"scenario":"frobnicate","model":{},"seed":0,"out_dir":")"
                       << (dir / "out").string() << R"("})";
    REQUIRE(run_cli("--config " + cfg.string()) == 4);
}

TEST_CASE("malformed configs exit 2") {
    fs::path dir = fresh_dir("bad_cfg");
    fs::create_directories(dir);

    fs::path not_json = dir / "not_json.json";
    std::ofstream(not_json) << "{ this is not json";
    REQUIRE(run_cli("--config " + not_json.string()) == 2);

    fs::path missing_field = dir / "missing.json";
    std::ofstream(missing_field) << R"({"scenario":"filter","seed":0})";
    REQUIRE(run_cli("--config " + missing_field.string()) == 2);

    fs::path bad_model = dir / "bad_model.json";
    std::ofstream(bad_model)
        << R"({"scenario":"filter","model":{"P":[[0.9,0.2],[0.2,0.8]],)"
        << R"("B":[[1.0],[1.0]],"pi0":[0.5,0.5]},"seed":0,"out_dir":")"
        << (dir / "out").string() << R"("})";
    REQUIRE(run_cli("--config " + bad_model.string()) == 2);

    REQUIRE(run_cli("--config " + dir.string() + "/does_not_exist.json") == 2);
}

TEST_CASE("runtime failures inside a scenario exit 3") {
    fs::path dir = fresh_dir("runtime_fail");
    fs::create_directories(dir);
    fs::path cfg = dir / "bad_threshold.json";
    std::ofstream(cfg) << R"({"scenario":"detect","model":{"kind":"shiryaev",)"
                       << R"("B":[[0.7,0.3],[0.3,0.7]],"p":0.01},)"
                       << R"("params":{"threshold":-5.0},"seed":7,"out_dir":")"
                       << (dir / "out").string() << R"("})";
    REQUIRE(run_cli("--config " + cfg.string()) == 3);
}

TEST_CASE("config loader reports the offending JSON pointer") {
    using pomdp::load_scenario_config;
    fs::path out = fresh_dir("pointer_check");
    json j = {{"scenario", "filter"},
              {"model", {{"P", {{0.9, 0.1}, {0.2, 0.8}}}, {"pi0", {0.5, 0.5}}}},
              {"seed", 1},
              {"out_dir", out.string()}};
    try {
        pomdp::run_scenario(load_scenario_config(j));
        FAIL("expected a validation error");
    } catch (const pomdp::Error& e) {
        REQUIRE(e.code() == "ConfigValidation");
        REQUIRE(std::string(e.what()).find("/model/B") != std::string::npos);
    }

    json bad_seed = {{"scenario", "filter"}, {"model", json::object()}, {"seed", -3}};
    try {
        load_scenario_config(bad_seed);
        FAIL("expected a validation error");
    } catch (const pomdp::Error& e) {
        REQUIRE(e.code() == "ConfigValidation");
        REQUIRE(std::string(e.what()).find("/seed") != std::string::npos);
    }
}

TEST_CASE("detect summary reports the alarm against the planted change") {
    fs::path dir = fresh_dir("detect_summary");
    REQUIRE(run_cli("--config " + bundled_config("detect") + " --out " + dir.string()) == 0);
    json summary = json::parse(slurp(dir / "summary.json"));
    REQUIRE(summary["change_at"] == 80);
    REQUIRE(summary["stopped"].get<bool>());
    REQUIRE(summary["stop_time"].get<std::size_t>() >= 80);
    REQUIRE(summary["detection_delay"].get<std::size_t>() < 60);
}

TEST_CASE("ruler occupation file carries the stationary prediction") {
    fs::path dir = fresh_dir("ruler_columns");
    REQUIRE(run_cli("--config " + bundled_config("ruler") + " --out " + dir.string()) == 0);
    std::string head = slurp(dir / "ruler_occupation.csv");
    REQUIRE(head.rfind("candidate,mean_cost,visits,occupation,stationary", 0) == 0);
    json summary = json::parse(slurp(dir / "summary.json"));
    REQUIRE(summary["estimate"].get<std::size_t>() == 0); // lowest mean cost wins
}


#pragma once

// Scenario runner behind the command-line tool. A scenario is a JSON config
// naming one of the bundled experiment kinds plus a model block, optional
// parameters, a seed, and an output directory. Each run writes its artifacts
// (CSV traces, JSON summaries) and finishes with a manifest listing every
// file with its byte count and content hash. Outputs are byte-identical for
// identical configs regardless of thread count.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pomdp/belief_dp.hpp"
#include "pomdp/csv.hpp"
#include "pomdp/detect.hpp"
#include "pomdp/estimate.hpp"
#include "pomdp/filter.hpp"
#include "pomdp/games.hpp"
#include "pomdp/markov.hpp"
#include "pomdp/orders.hpp"
#include "pomdp/search_ruler.hpp"
#include "pomdp/social.hpp"

namespace pomdp {

using nlohmann::json;

enum class ScenarioKind { Filter, Sensitivity, Orders, Social, Detect, Dp, Game, Ruler, Estimate };

inline const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Filter: return "filter";
        case ScenarioKind::Sensitivity: return "sensitivity";
        case ScenarioKind::Orders: return "orders";
        case ScenarioKind::Social: return "social";
        case ScenarioKind::Detect: return "detect";
        case ScenarioKind::Dp: return "dp";
        case ScenarioKind::Game: return "game";
        case ScenarioKind::Ruler: return "ruler";
        case ScenarioKind::Estimate: return "estimate";
    }
    return "?";
}

inline ScenarioKind parse_scenario_kind(const std::string& s) {
    if (s == "filter") return ScenarioKind::Filter;
    if (s == "sensitivity") return ScenarioKind::Sensitivity;
    if (s == "orders") return ScenarioKind::Orders;
    if (s == "social") return ScenarioKind::Social;
    if (s == "detect") return ScenarioKind::Detect;
    if (s == "dp") return ScenarioKind::Dp;
    if (s == "game") return ScenarioKind::Game;
    if (s == "ruler") return ScenarioKind::Ruler;
    if (s == "estimate") return ScenarioKind::Estimate;
    fail("UnknownScenario", "no scenario named '" + s + "'");
}

// --------------------------------------------------------------------------
// Config extraction. Every failure names the offending location as a JSON
// pointer so a bad config can be fixed without reading source.

namespace cfgjson {

[[noreturn]] inline void bad(const std::string& pointer, const std::string& what) {
    fail("ConfigValidation", pointer + ": " + what);
}

inline const json& member(const json& j, const std::string& ptr, const std::string& key) {
    if (!j.is_object()) bad(ptr.empty() ? "/" : ptr, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) bad(ptr + "/" + key, "missing required field");
    return *it;
}

inline bool has(const json& j, const std::string& key) {
    return j.is_object() && j.contains(key);
}

inline double as_double(const json& j, const std::string& ptr) {
    if (!j.is_number()) bad(ptr, "expected a number");
    return j.get<double>();
}

inline std::uint64_t as_u64(const json& j, const std::string& ptr) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    bad(ptr, "expected a nonnegative integer");
}

inline std::size_t as_size(const json& j, const std::string& ptr) {
    return static_cast<std::size_t>(as_u64(j, ptr));
}

inline bool as_bool(const json& j, const std::string& ptr) {
    if (!j.is_boolean()) bad(ptr, "expected a boolean");
    return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& ptr) {
    if (!j.is_string()) bad(ptr, "expected a string");
    return j.get<std::string>();
}

inline Vec as_vec(const json& j, const std::string& ptr) {
    if (!j.is_array() || j.empty()) bad(ptr, "expected a nonempty array of numbers");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v[i] = as_double(j[i], ptr + "/" + std::to_string(i));
    return v;
}

inline Matrix as_matrix(const json& j, const std::string& ptr) {
    if (!j.is_array() || j.empty()) bad(ptr, "expected a nonempty array of rows");
    std::size_t rows = j.size(), cols = 0;
    std::vector<double> data;
    for (std::size_t i = 0; i < rows; ++i) {
        Vec row = as_vec(j[i], ptr + "/" + std::to_string(i));
        if (i == 0)
            cols = row.size();
        else if (row.size() != cols)
            bad(ptr + "/" + std::to_string(i), "ragged matrix rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(rows, cols, std::move(data));
}

inline double number_or(const json& parent, const std::string& ptr, const std::string& key,
                        double fallback) {
    if (!has(parent, key)) return fallback;
    return as_double(parent[key], ptr + "/" + key);
}

inline std::size_t size_or(const json& parent, const std::string& ptr, const std::string& key,
                           std::size_t fallback) {
    if (!has(parent, key)) return fallback;
    return as_size(parent[key], ptr + "/" + key);
}

inline bool bool_or(const json& parent, const std::string& ptr, const std::string& key,
                    bool fallback) {
    if (!has(parent, key)) return fallback;
    return as_bool(parent[key], ptr + "/" + key);
}

inline std::string string_or(const json& parent, const std::string& ptr, const std::string& key,
                             std::string fallback) {
    if (!has(parent, key)) return fallback;
    return as_string(parent[key], ptr + "/" + key);
}

// Model pieces are validated by their own modules; a rejected piece is a
// config problem, so the module error is refiled under the field's pointer.
template <class F>
auto checked(F&& build, const std::string& ptr) -> decltype(build()) {
    try {
        return build();
    } catch (const Error& e) {
        bad(ptr, e.what());
    }
}

} // namespace cfgjson

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::Filter;
    json model;
    json params;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
};

inline ScenarioConfig load_scenario_config(const json& j) {
    using namespace cfgjson;
    if (!j.is_object()) bad("/", "config root must be an object");
    ScenarioConfig cfg;
    cfg.kind = parse_scenario_kind(as_string(member(j, "", "scenario"), "/scenario"));
    cfg.model = member(j, "", "model");
    if (!cfg.model.is_object()) bad("/model", "expected an object");
    if (has(j, "params")) {
        cfg.params = j["params"];
        if (!cfg.params.is_object()) bad("/params", "expected an object");
    } else {
        cfg.params = json::object();
    }
    cfg.seed = as_u64(member(j, "", "seed"), "/seed");
    cfg.out_dir = string_or(j, "", "out_dir", "out");
    if (cfg.out_dir.empty()) bad("/out_dir", "must be a nonempty path");
    return cfg;
}

inline ScenarioConfig load_scenario_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("ConfigValidation", "cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail("ConfigValidation", "config file '" + path + "' is not valid JSON: " + e.what());
    }
    return load_scenario_config(j);
}

// --------------------------------------------------------------------------
// Artifact bookkeeping.

struct ManifestEntry {
    std::string name;
    std::uint64_t bytes = 0;
    std::string hash; // FNV-1a 64 of the file contents, hex
};

struct RunManifest {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> files;
    std::string directory;
};

namespace detail {

class ArtifactSink {
public:
    explicit ArtifactSink(const std::string& out_dir) : dir_(out_dir) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) fail("IoError", "cannot create output directory '" + out_dir + "'");
    }

    std::string path(const std::string& name) {
        names_.push_back(name);
        return (dir_ / name).string();
    }

    void write_json(const std::string& name, const json& j) {
        std::ofstream out(path(name), std::ios::binary);
        if (!out) fail("IoError", "cannot open '" + name + "' for writing");
        out << j.dump(2) << '\n';
        if (!out) fail("IoError", "failed writing '" + name + "'");
    }

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
};

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

inline RunManifest finalize_manifest(const ScenarioConfig& cfg, ArtifactSink& sink) {
    RunManifest man;
    man.scenario = to_string(cfg.kind);
    man.seed = cfg.seed;
    man.directory = sink.dir().string();

    std::vector<std::string> names = sink.names();
    std::sort(names.begin(), names.end());
    for (const std::string& name : names) {
        std::ifstream in(sink.dir() / name, std::ios::binary);
        if (!in) fail("IoError", "artifact '" + name + "' missing at manifest time");
        std::string contents((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
        man.files.push_back(
            {name, contents.size(), hex64(fnv1a64(contents))});
    }

    json j;
    j["scenario"] = man.scenario;
    j["seed"] = man.seed;
    j["files"] = json::array();
    for (const ManifestEntry& e : man.files)
        j["files"].push_back({{"name", e.name}, {"bytes", e.bytes}, {"hash", e.hash}});
    std::ofstream out(sink.dir() / "manifest.json", std::ios::binary);
    if (!out) fail("IoError", "cannot write manifest.json");
    out << j.dump(2) << '\n';
    return man;
}

// ---- filter ---------------------------------------------------------------
// Simulates the chain, runs the posterior recursion, and records the belief
// path with the per-step observation likelihoods.

inline void run_filter_scenario(const ScenarioConfig& cfg, ArtifactSink& sink) {
    using namespace cfgjson;
    const std::string mp = "/model";
    HmmModel model = checked(
        [&] {
            return make_hmm(make_stochastic(as_matrix(member(cfg.model, mp, "P"), mp + "/P")),
                            StochasticMatrix(as_matrix(member(cfg.model, mp, "B"), mp + "/B")),
                            Belief(as_vec(member(cfg.model, mp, "pi0"), mp + "/pi0")));
        },
        mp);
    const std::size_t steps = size_or(cfg.params, "/params", "steps", 50);
    if (steps == 0) bad("/params/steps", "must be positive");

    const std::size_t X = model.num_states();
    RngStream rng(cfg.seed, 0);

    std::vector<std::string> header = {"k", "y", "likelihood"};
    for (std::size_t i = 0; i < X; ++i) header.push_back("pi_" + std::to_string(i + 1));
    CsvWriter csv(sink.path("filter_path.csv"), header);

    std::size_t x = rng.categorical(model.pi0.vec());
    Belief belief = model.pi0;
    double total_loglik = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        x = rng.categorical(model.P.matrix().row(x));
        std::size_t y = rng.categorical(model.B.matrix().row(x));
        auto [post, sigma] = filter_step(model, belief, y);
        belief = post;
        total_loglik += std::log(sigma);
        std::vector<std::string> row = {CsvWriter::cell(k), CsvWriter::cell(y),
                                        CsvWriter::cell(sigma)};
        for (std::size_t i = 0; i < X; ++i) row.push_back(CsvWriter::cell(belief[i]));
        csv.row(row);
    }

    json summary;
    summary["steps"] = steps;
    summary["states"] = X;
    summary["total_loglik"] = total_loglik;
    summary["final_belief"] = belief.vec();
    sink.write_json("summary.json", summary);
}

// ---- sensitivity ----------------------------------------------------------
// True-model chain filtered in parallel under the true and a perturbed
// kernel; records the observed L1 gap against the per-step bound.

inline void run_sensitivity_scenario(const ScenarioConfig& cfg, ArtifactSink& sink) {
    using namespace cfgjson;
    const std::string mp = "/model";
    HmmModel model = checked(
        [&] {
            return make_hmm(make_stochastic(as_matrix(member(cfg.model, mp, "P"), mp + "/P")),
                            StochasticMatrix(as_matrix(member(cfg.model, mp, "B"), mp + "/B")),
                            Belief(as_vec(member(cfg.model, mp, "pi0"), mp + "/pi0")));
        },
        mp);
    StochasticMatrix Pbar = checked(
        [&] {
            return make_stochastic(
                as_matrix(member(cfg.params, "/params", "P_nominal"), "/params/P_nominal"));
        },
        "/params/P_nominal");
    const std::size_t steps = size_or(cfg.params, "/params", "steps", 200);
    if (steps == 0) bad("/params/steps", "must be positive");

    RngStream rng(cfg.seed, 0);
    SensitivityReport report = run_sensitivity_experiment(model, Pbar, steps, rng);

    CsvWriter csv(sink.path("sensitivity.csv"),
                  {"k", "observed_l1", "samplepath_bound", "A_value", "mu_value"});
    double max_observed = 0.0;
    std::size_t violations = 0;
    for (const SensitivityRecord& r : report.records) {
        max_observed = std::max(max_observed, r.observed_l1);
        if (r.observed_l1 > r.samplepath_bound + 1e-12) ++violations;
        csv.row({CsvWriter::cell(r.k), CsvWriter::cell(r.observed_l1),
                 CsvWriter::cell(r.samplepath_bound), CsvWriter::cell(r.A_value),
                 CsvWriter::cell(r.mu_value)});
    }

    json summary;
    summary["epsilon"] = report.epsilon;
    summary["steps"] = steps;
    summary["max_observed_l1"] = max_observed;
    summary["bound_violations"] = violations;
    sink.write_json("summary.json", summary);
}

// ---- orders ---------------------------------------------------------------
// Structural report on one transition kernel: total positivity, likelihood
// ratio and first-order dominance between consecutive rows, contraction
// coefficients, and the stationary distribution.

inline void run_orders_scenario(const ScenarioConfig& cfg, ArtifactSink& sink) {
    using namespace cfgjson;
    const std::string mp = "/model";
    StochasticMatrix P = checked(
        [&] { return make_stochastic(as_matrix(member(cfg.model, mp, "P"), mp + "/P")); }, mp);
    const Matrix& M = P.matrix();
    const std::size_t X = P.rows();

    CsvWriter csv(sink.path("row_orders.csv"),
                  {"row", "mlr_next_dominates", "fosd_next_dominates"});
    bool all_mlr = true, all_fosd = true;
    for (std::size_t i = 0; i + 1 < X; ++i) {
        Belief lo(M.row(i), 1e-6), hi(M.row(i + 1), 1e-6);
        bool mlr = static_cast<bool>(mlr_dominates(hi, lo));
        bool fosd = static_cast<bool>(fosd_dominates(hi, lo));
        all_mlr = all_mlr && mlr;
        all_fosd = all_fosd && fosd;
        csv.row({CsvWriter::cell(i), CsvWriter::cell(mlr), CsvWriter::cell(fosd)});
    }

    json verdicts;
    verdicts["tp2"] = static_cast<bool>(is_tp2(M));
    verdicts["rows_mlr_increasing"] = all_mlr;
    verdicts["rows_fosd_increasing"] = all_fosd;
    verdicts["dobrushin_coefficient"] = dobrushin_coefficient(P);
    verdicts["second_eigenvalue_modulus"] = second_eigenvalue_modulus(P);
    try {
        verdicts["stationary"] = stationary_distribution(P).vec();
    } catch (const Error&) {
        verdicts["stationary"] = nullptr;
    }
    sink.write_json("orders.json", verdicts);
}

// ---- social ---------------------------------------------------------------
// Sequential Bayesian agents acting on a shared public belief; records the
// action path next to the public belief path.

inline void run_social_scenario(const ScenarioConfig& cfg, ArtifactSink& sink) {
    using namespace cfgjson;
    const std::string mp = "/model";
    SocialModel model = checked(
        [&] {
            return make_social_model(
                StochasticMatrix(as_matrix(member(cfg.model, mp, "B"), mp + "/B")),
                as_matrix(member(cfg.model, mp, "costs"), mp + "/costs"),
                Belief(as_vec(member(cfg.model, mp, "prior"), mp + "/prior")));
        },
        mp);
    const std::size_t steps = size_or(cfg.params, "/params", "steps", 40);
    if (steps == 0) bad("/params/steps", "must be positive");
    const std::size_t theta = size_or(cfg.params, "/params", "theta_true", 0);
    if (theta >= 2) bad("/params/theta_true", "hypothesis index must be 0 or 1");

    RngStream rng(cfg.seed, 0);
    std::vector<SocialTraceRecord> trace = simulate_social(model, theta, steps, rng);

    CsvWriter csv(sink.path("social_path.csv"), {"t", "y", "action", "belief_1", "belief_2"});
    for (const SocialTraceRecord& r : trace)
        csv.row({CsvWriter::cell(r.t), CsvWriter::cell(r.y), CsvWriter::cell(r.action),
                 CsvWriter::cell(r.belief_1), CsvWriter::cell(r.belief_2)});

    std::size_t first = steps + 1, switches = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (i > 0 && trace[i].action != trace[i - 1].action) ++switches;
        if (first > steps && trace[i].action == theta) first = trace[i].t;
    }
    json summary;
    summary["steps"] = steps;
    summary["theta_true"] = theta;
    summary["first_correct_action"] = first;
    summary["action_switches"] = switches;
    summary["final_action"] = trace.empty() ? 0 : trace.back().action;
    sink.write_json("summary.json", summary);
}

// ---- detect ---------------------------------------------------------------
// Change-point stream with a known change time; runs the chosen detection
// statistic against a threshold and records the statistic path.

inline void run_detect_scenario(const ScenarioConfig& cfg, ArtifactSink& sink) {
    using namespace cfgjson;
    const std::string mp = "/model";
    StochasticMatrix B = checked(
        [&] { return StochasticMatrix(as_matrix(member(cfg.model, mp, "B"), mp + "/B")); }, mp);
    if (B.rows() != 2) bad(mp + "/B", "needs exactly two rows: post-change then pre-change");

    const std::string kind_s = string_or(cfg.model, mp, "kind", "shiryaev");
    DetectorKind kind;
    if (kind_s == "shiryaev")
        kind = DetectorKind::Shiryaev;
    else if (kind_s == "shiryaev-roberts")
        kind = DetectorKind::ShiryaevRoberts;
    else
        bad(mp + "/kind", "expected 'shiryaev' or 'shiryaev-roberts'");
    const double p = number_or(cfg.model, mp, "p", 0.0);
    if (kind == DetectorKind::Shiryaev && !(p > 0.0 && p < 1.0))
        bad(mp + "/p", "shiryaev needs a change probability in (0,1)");

    const double threshold = as_double(member(cfg.params, "/params", "threshold"),
                                       "/params/threshold");
    const std::size_t steps = size_or(cfg.params, "/params", "steps", 200);
    if (steps == 0) bad("/params/steps", "must be positive");
    const std::size_t change_at = size_or(cfg.params, "/params", "change_at", steps / 2 + 1);
    if (change_at == 0) bad("/params/change_at", "change time is 1-based");

    RngStream rng(cfg.seed, 0);
    std::vector<std::size_t> stream(steps);
    for (std::size_t k = 1; k <= steps; ++k) {
        std::size_t state = k >= change_at ? 0 : 1; // row 0 is post-change
        stream[k - 1] = rng.categorical(B.matrix().row(state));
    }

    DetectorState state = checked([&] { return make_detector(kind, p); }, mp);
    std::vector<DetectorTraceRecord> trace;
    std::size_t stop = run_detector(stream, state, B, threshold, &trace);

    CsvWriter csv(sink.path("detect_path.csv"), {"k", "y", "statistic", "stopped"});
    for (const DetectorTraceRecord& r : trace)
        csv.row({CsvWriter::cell(r.k), CsvWriter::cell(r.y), CsvWriter::cell(r.statistic),
                 CsvWriter::cell(r.stopped)});

    json summary;
    summary["detector"] = kind_s;
    summary["threshold"] = threshold;
    summary["steps"] = steps;
    summary["change_at"] = change_at;
    summary["stopped"] = stop <= steps;
    summary["stop_time"] = stop; // steps + 1 when the run ends without an alarm
    summary["detection_delay"] =
        stop <= steps && stop >= change_at ? json(stop - change_at) : json(nullptr);
    sink.write_json("summary.json", summary);
}

// ---- dp -------------------------------------------------------------------
// Finite-horizon value iteration on the belief grid. The model block either
// names the ear-or-commit benchmark ("tiger") or spells out per-action
// matrices. Grid points are independent, so extra threads change wall time
// only, never output bytes.

inline void run_dp_scenario(const ScenarioConfig& cfg, ArtifactSink& sink, std::size_t threads) {
    using namespace cfgjson;
    const std::string mp = "/model";
    PomdpModel model;
    if (has(cfg.model, "tiger")) {
        const json& t = cfg.model["tiger"];
        const std::string tp = mp + "/tiger";
        if (!t.is_object()) bad(tp, "expected an object");
        model = checked(
            [&] {
                return tiger_model(number_or(t, tp, "p", 0.85), number_or(t, tp, "q", 0.85),
                                   number_or(t, tp, "alpha", 10.0), number_or(t, tp, "beta", 1.0),
                                   number_or(t, tp, "gamma", 0.2));
            },
            tp);
    } else {
        model = checked(
            [&] {
                const json& Pj = member(cfg.model, mp, "P");
                const json& Bj = member(cfg.model, mp, "B");
                const json& cj = member(cfg.model, mp, "cost");
                if (!Pj.is_array() || !Bj.is_array() || !cj.is_array())
                    bad(mp, "P, B, cost must be arrays indexed by action");
                std::vector<StochasticMatrix> P, B;
                std::vector<Vec> cost;
                for (std::size_t u = 0; u < Pj.size(); ++u)
                    P.push_back(
                        make_stochastic(as_matrix(Pj[u], mp + "/P/" + std::to_string(u))));
                for (std::size_t u = 0; u < Bj.size(); ++u)
                    B.push_back(
                        StochasticMatrix(as_matrix(Bj[u], mp + "/B/" + std::to_string(u))));
                for (std::size_t u = 0; u < cj.size(); ++u)
                    cost.push_back(as_vec(cj[u], mp + "/cost/" + std::to_string(u)));
                return make_pomdp(std::move(P), std::move(B), std::move(cost),
                                  bool_or(cfg.model, mp, "costs_are_rewards", false),
                                  number_or(cfg.model, mp, "discount", 1.0));
            },
            mp);
    }

    const std::size_t horizon = size_or(cfg.params, "/params", "horizon", 4);
    if (horizon == 0) bad("/params/horizon", "must be positive");
    const std::size_t resolution = size_or(cfg.params, "/params", "resolution", 101);
    if (resolution < 2) bad("/params/resolution", "needs at least two grid points");

    std::vector<BeliefGridValue> sweeps =
        value_iteration_grid(model, horizon, resolution, {}, threads);

    std::vector<std::string> header = {"horizon", "grid_index"};
    for (std::size_t i = 0; i < model.X; ++i) header.push_back("pi_" + std::to_string(i + 1));
    header.push_back("value");
    header.push_back("action");
    CsvWriter csv(sink.path("value_function.csv"), header);
    for (std::size_t h = 0; h < sweeps.size(); ++h) {
        const BeliefGridValue& sweep = sweeps[h];
        for (std::size_t g = 0; g < sweep.grid.size(); ++g) {
            std::vector<std::string> row = {CsvWriter::cell(h), CsvWriter::cell(g)};
            for (std::size_t i = 0; i < model.X; ++i)
                row.push_back(CsvWriter::cell(sweep.grid[g][i]));
            row.push_back(CsvWriter::cell(sweep.values[g]));
            row.push_back(CsvWriter::cell(sweep.policy[g]));
            csv.row(row);
        }
    }

    json summary;
    summary["states"] = model.X;
    summary["actions"] = model.U;
    summary["horizon"] = horizon;
    summary["resolution"] = resolution;
    summary["grid_points"] = sweeps.empty() ? 0 : sweeps.back().grid.size();
    const Vec& last = sweeps.back().values;
    summary["value_min"] = *std::min_element(last.begin(), last.end());
    summary["value_max"] = *std::max_element(last.begin(), last.end());
    sink.write_json("summary.json", summary);
}

// ---- game -----------------------------------------------------------------
// Solves one zero-sum matrix game by linear programming and writes the value
// with both optimal mixtures.

inline void run_game_scenario(const ScenarioConfig& cfg, ArtifactSink& sink) {
    using namespace cfgjson;
    const std::string mp = "/model";
    Matrix payoff = as_matrix(member(cfg.model, mp, "payoff"), mp + "/payoff");
    MatrixGameSolution sol = matrix_game_value(MatrixGame{payoff});

    json out;
    out["value"] = sol.value;
    out["column_strategy"] = sol.column_strategy;
    out["row_strategy"] = sol.row_strategy;
    sink.write_json("value.json", out);
}

// ---- ruler ----------------------------------------------------------------
// Random-search chain over a finite candidate set scored by noisy costs; the
// model block gives the normalized mean cost of each candidate directly.

inline void run_ruler_scenario(const ScenarioConfig& cfg, ArtifactSink& sink) {
    using namespace cfgjson;
    const std::string mp = "/model";
    Vec means = as_vec(member(cfg.model, mp, "means"), mp + "/means");
    for (std::size_t i = 0; i < means.size(); ++i)
        if (!(means[i] >= 0.0 && means[i] <= 1.0))
            bad(mp + "/means/" + std::to_string(i), "mean costs live in [0,1]");
    const double lower = number_or(cfg.model, mp, "lower", 0.0);
    const double upper = number_or(cfg.model, mp, "upper", 1.0);

    const std::size_t steps = size_or(cfg.params, "/params", "steps", 20000);
    if (steps == 0) bad("/params/steps", "must be positive");
    SearchRulerOptions opts;
    opts.antithetic = bool_or(cfg.params, "/params", "antithetic", false);
    opts.initial = size_or(cfg.params, "/params", "initial", 0);
    opts.acceptance_floor = number_or(cfg.params, "/params", "acceptance_floor", 0.0);
    if (opts.initial >= means.size()) bad("/params/initial", "initial candidate out of range");

    const std::size_t S = means.size();
    StochasticObjective obj = checked(
        [&] {
            return make_stochastic_objective(
                S, lower, upper, [means, lower, upper](std::size_t i, RngStream& r) {
                    return r.uniform() < means[i] ? upper : lower;
                });
        },
        mp);

    RngStream rng(cfg.seed, 0);
    SearchTrace tr = checked([&] { return search_ruler_run(obj, steps, rng, opts); }, "/params");

    bool interior = true;
    for (double m : means) interior = interior && m > 0.0 && m < 1.0;
    Vec stationary;
    if (interior && S > 1) stationary = search_ruler_stationary(means).vec();

    {
        std::vector<std::string> header = {"candidate", "mean_cost", "visits", "occupation"};
        if (!stationary.empty()) header.push_back("stationary");
        CsvWriter csv(sink.path("ruler_occupation.csv"), header);
        for (std::size_t i = 0; i < S; ++i) {
            std::vector<std::string> row = {CsvWriter::cell(i), CsvWriter::cell(means[i]),
                                            CsvWriter::cell(tr.visit_counts[i]),
                                            CsvWriter::cell(tr.occupation[i])};
            if (!stationary.empty()) row.push_back(CsvWriter::cell(stationary[i]));
            csv.row(row);
        }
    }
    {
        CsvWriter csv(sink.path("ruler_path.csv"), {"step", "candidate", "moved"});
        for (std::size_t k = 0; k < tr.path.size(); ++k)
            csv.row({CsvWriter::cell(k + 1), CsvWriter::cell(tr.path[k]),
                     CsvWriter::cell(tr.moved[k] != 0)});
    }

    json summary;
    summary["steps"] = steps;
    summary["estimate"] = tr.estimate;
    summary["final_candidate"] = tr.final_candidate;
    summary["clamp_events"] = tr.clamp_events;
    summary["antithetic"] = opts.antithetic;
    sink.write_json("summary.json", summary);
}

// ---- estimate -------------------------------------------------------------
// Online parameter estimation on a simulated Gaussian-output chain; records
// the estimate path with one-step prediction errors and likelihood
// increments.

inline void run_estimate_scenario(const ScenarioConfig& cfg, ArtifactSink& sink) {
    using namespace cfgjson;
    const std::string mp = "/model";
    StochasticMatrix P = checked(
        [&] { return make_stochastic(as_matrix(member(cfg.model, mp, "P"), mp + "/P")); },
        mp + "/P");
    Vec levels = as_vec(member(cfg.model, mp, "levels"), mp + "/levels");
    const double sigma = as_double(member(cfg.model, mp, "sigma"), mp + "/sigma");
    GaussianHmm truth = checked([&] { return make_gaussian_hmm(P, levels, sigma); }, mp);

    EstimatorConfig est;
    const std::string alg = string_or(cfg.params, "/params", "algorithm", "recem");
    if (alg == "recem")
        est.algorithm = Estimator::RecEM;
    else if (alg == "rml")
        est.algorithm = Estimator::RML;
    else if (alg == "rpe")
        est.algorithm = Estimator::RPE;
    else
        bad("/params/algorithm", "expected 'recem', 'rml', or 'rpe'");
    est.step = number_or(cfg.params, "/params", "step", 0.01);
    est.batch = size_or(cfg.params, "/params", "batch", 100);
    est.info_floor = number_or(cfg.params, "/params", "info_floor", 1e-3);
    est.level_min = number_or(cfg.params, "/params", "level_min", -10.0);
    est.level_max = number_or(cfg.params, "/params", "level_max", 10.0);
    est.fd_step = number_or(cfg.params, "/params", "fd_step", 1e-4);
    checked([&] { check_estimator_config(est); return 0; }, "/params");

    const std::size_t steps = size_or(cfg.params, "/params", "steps", 5000);
    if (steps == 0) bad("/params/steps", "must be positive");
    Vec init = has(cfg.params, "init_levels")
                   ? as_vec(cfg.params["init_levels"], "/params/init_levels")
                   : Vec(levels.size(), 0.5 * (est.level_min + est.level_max));
    ParamEstimate initial = checked(
        [&] { return make_param_estimate(init, sigma, P, est); }, "/params/init_levels");

    RngStream rng(cfg.seed, 0);
    EstimationRun run = run_estimation(truth, initial, est, steps, rng);

    const std::size_t X = levels.size();
    std::vector<std::string> header = {"k"};
    for (std::size_t i = 0; i < X; ++i) header.push_back("g_" + std::to_string(i + 1));
    header.push_back("pred_error");
    header.push_back("loglik_increment");
    CsvWriter csv(sink.path("estimate_path.csv"), header);
    for (std::size_t k = 1; k <= steps; ++k) {
        std::vector<std::string> row = {CsvWriter::cell(k)};
        for (std::size_t i = 0; i < X; ++i) row.push_back(CsvWriter::cell(run.level_path[k][i]));
        row.push_back(CsvWriter::cell(run.pred_errors[k - 1]));
        row.push_back(CsvWriter::cell(run.loglik_increments[k - 1]));
        csv.row(row);
    }

    json summary;
    summary["algorithm"] = alg;
    summary["steps"] = steps;
    summary["final_levels"] = run.final_estimate.levels;
    summary["true_levels"] = levels;
    summary["floor_events"] = run.floor_events;
    summary["refreshes"] = run.refreshes;
    sink.write_json("summary.json", summary);
}

} // namespace detail

// Runs one scenario end to end and writes the manifest last, so a manifest on
// disk means every artifact listed in it was written completely.
inline RunManifest run_scenario(const ScenarioConfig& cfg, std::size_t threads = 1) {
    if (threads == 0) fail("ConfigValidation", "--threads: must be positive");
    detail::ArtifactSink sink(cfg.out_dir);
    try {
        switch (cfg.kind) {
            case ScenarioKind::Filter: detail::run_filter_scenario(cfg, sink); break;
            case ScenarioKind::Sensitivity: detail::run_sensitivity_scenario(cfg, sink); break;
            case ScenarioKind::Orders: detail::run_orders_scenario(cfg, sink); break;
            case ScenarioKind::Social: detail::run_social_scenario(cfg, sink); break;
            case ScenarioKind::Detect: detail::run_detect_scenario(cfg, sink); break;
            case ScenarioKind::Dp: detail::run_dp_scenario(cfg, sink, threads); break;
            case ScenarioKind::Game: detail::run_game_scenario(cfg, sink); break;
            case ScenarioKind::Ruler: detail::run_ruler_scenario(cfg, sink); break;
            case ScenarioKind::Estimate: detail::run_estimate_scenario(cfg, sink); break;
        }
    } catch (const Error& e) {
        if (e.code() == "ConfigValidation" || e.code() == "UnknownScenario") throw;
        fail(e.code(),
             std::string("scenario '") + to_string(cfg.kind) + "' failed: " + e.what());
    }
    return detail::finalize_manifest(cfg, sink);
}

} // namespace pomdp

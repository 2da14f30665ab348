#include "funess/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "funess/error.hpp"
#include "funess/montecarlo.hpp"

namespace funess {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "params",       "lambda",         "tau_grid",  "q_list",  "seed",
        "n_trajectories", "output_dir",   "horizon",   "walk_grid", "markov_reference",
        "threads",      "max_exported_paths", "walk_readout", "quick", "inject_fault"};
    return keys;
}

template <class T>
T get_as(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("config key '") + key + "': " + e.what());
    }
}

double q_entry(const json& entry) {
    if (entry.is_number()) return entry.get<double>();
    if (entry.is_array() && entry.size() == 2 && entry[0].is_number() && entry[1].is_number()) {
        const double q1 = entry[0].get<double>();
        const double q2 = entry[1].get<double>();
        if (std::abs(q1 + q2 - 1.0) > kColumnSumTolerance) {
            fail(ErrorCode::ConfigError, "q_list pair does not sum to 1");
        }
        return q1;
    }
    fail(ErrorCode::ConfigError, "q_list entries must be numbers or [q1, q2] pairs");
}

WalkReadout readout_from(const std::string& s) {
    if (s == "trajectory") return WalkReadout::Trajectory;
    if (s == "independent_marginal") return WalkReadout::IndependentMarginal;
    fail(ErrorCode::ConfigError, "walk_readout must be 'trajectory' or 'independent_marginal', got '" + s + "'");
}

void read_params(const json& j, RawParams& p) {
    if (!j.is_object()) fail(ErrorCode::ConfigError, "'params' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) fail(ErrorCode::ConfigError, "params." + key + " must be a number");
        const double v = value.get<double>();
        if (key == "k") p.k = v;
        else if (key == "r") p.r = v;
        else if (key == "alpha") p.alpha = v;
        else if (key == "x1") p.x1 = v;
        else if (key == "x2") p.x2 = v;
        else if (key == "q1") p.q1 = v;
        else if (key == "t0") p.t0 = v;
        else fail(ErrorCode::ConfigError, "unknown params key '" + key + "'");
    }
}

std::vector<double> grid_from(const json& j, const char* key) {
    if (!j.is_array()) fail(ErrorCode::ConfigError, std::string(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) fail(ErrorCode::ConfigError, std::string(key) + " must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

}  // namespace

RunConfig default_config() {
    RunConfig cfg;
    cfg.lambda = 1.0;
    cfg.tau_grid = linspace(0.0, 3.0, 31);
    cfg.q_list = {0.2, 0.5, 0.8};
    cfg.walk_grid = linspace(0.0, 10.0, 41);
    return cfg;
}

RunConfig parse_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigError, std::string("invalid JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("config") && doc.contains("files")) doc = doc["config"];
    if (!doc.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!known_keys().contains(key)) fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }

    RunConfig cfg = default_config();
    if (doc.contains("params")) read_params(doc["params"], cfg.params);
    if (doc.contains("lambda")) {
        if (doc["lambda"].is_null()) cfg.lambda.reset();
        else cfg.lambda = get_as<double>(doc, "lambda");
    }
    if (doc.contains("tau_grid")) cfg.tau_grid = grid_from(doc["tau_grid"], "tau_grid");
    if (doc.contains("walk_grid")) cfg.walk_grid = grid_from(doc["walk_grid"], "walk_grid");
    if (doc.contains("q_list")) {
        if (!doc["q_list"].is_array()) fail(ErrorCode::ConfigError, "q_list must be an array");
        cfg.q_list.clear();
        for (const auto& e : doc["q_list"]) cfg.q_list.push_back(q_entry(e));
    }
    if (doc.contains("seed")) cfg.seed = get_as<std::uint64_t>(doc, "seed");
    if (doc.contains("n_trajectories")) cfg.n_trajectories = get_as<std::size_t>(doc, "n_trajectories");
    if (doc.contains("output_dir")) cfg.output_dir = get_as<std::string>(doc, "output_dir");
    if (doc.contains("horizon")) cfg.horizon = get_as<double>(doc, "horizon");
    if (doc.contains("markov_reference")) cfg.markov_reference = get_as<bool>(doc, "markov_reference");
    if (doc.contains("threads")) {
        if (doc["threads"].is_null()) cfg.threads.reset();
        else cfg.threads = get_as<std::size_t>(doc, "threads");
    }
    if (doc.contains("max_exported_paths")) cfg.max_exported_paths = get_as<std::size_t>(doc, "max_exported_paths");
    if (doc.contains("walk_readout")) cfg.walk_readout = readout_from(get_as<std::string>(doc, "walk_readout"));
    if (doc.contains("quick")) cfg.quick = get_as<bool>(doc, "quick");
    if (doc.contains("inject_fault")) cfg.inject_fault = get_as<bool>(doc, "inject_fault");
    validate_config(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigError, "cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

void validate_config(const RunConfig& cfg) {
    (void)validate_params(cfg.params);
    for (std::size_t i = 0; i < cfg.tau_grid.size(); ++i) {
        if (!std::isfinite(cfg.tau_grid[i]) || cfg.tau_grid[i] < 0.0) {
            fail(ErrorCode::ConfigError, "tau_grid entries must be finite and non-negative");
        }
        if (i > 0 && !(cfg.tau_grid[i] > cfg.tau_grid[i - 1])) {
            fail(ErrorCode::ConfigError, "tau_grid must be strictly ascending");
        }
    }
    for (double q1 : cfg.q_list) {
        if (!(q1 >= 0.0 && q1 <= 1.0)) fail(ErrorCode::ConfigError, "q_list entries must lie in [0, 1]");
    }
    if (cfg.lambda && (!std::isfinite(*cfg.lambda) || *cfg.lambda < 0.0)) {
        fail(ErrorCode::ConfigError, "lambda must be finite and non-negative");
    }
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) fail(ErrorCode::ConfigError, "horizon must be positive");
    if (cfg.n_trajectories < 1) fail(ErrorCode::ConfigError, "n_trajectories must be at least 1");
    if (cfg.threads && *cfg.threads < 1) fail(ErrorCode::ConfigError, "threads must be at least 1");
    for (std::size_t i = 0; i < cfg.walk_grid.size(); ++i) {
        const double t = cfg.walk_grid[i];
        if (!(t >= cfg.params.t0 && t <= cfg.params.t0 + cfg.horizon)) {
            fail(ErrorCode::ConfigError, "walk_grid entries must lie in [t0, t0 + horizon]");
        }
        if (i > 0 && !(t > cfg.walk_grid[i - 1])) fail(ErrorCode::ConfigError, "walk_grid must be strictly ascending");
    }
    if (cfg.output_dir.empty()) fail(ErrorCode::ConfigError, "output_dir must not be empty");
}

std::string_view to_string(WalkReadout readout) {
    return readout == WalkReadout::Trajectory ? "trajectory" : "independent_marginal";
}

std::string dump_config(const RunConfig& cfg) {
    json j;
    j["params"] = {{"k", cfg.params.k},   {"r", cfg.params.r},   {"alpha", cfg.params.alpha}, {"x1", cfg.params.x1},
                   {"x2", cfg.params.x2}, {"q1", cfg.params.q1}, {"t0", cfg.params.t0}};
    j["lambda"] = cfg.lambda ? json(*cfg.lambda) : json(nullptr);
    j["tau_grid"] = cfg.tau_grid;
    j["q_list"] = cfg.q_list;
    j["seed"] = cfg.seed;
    j["n_trajectories"] = cfg.n_trajectories;
    j["output_dir"] = cfg.output_dir;
    j["horizon"] = cfg.horizon;
    j["walk_grid"] = cfg.walk_grid;
    j["markov_reference"] = cfg.markov_reference;
    j["threads"] = cfg.threads ? json(*cfg.threads) : json(nullptr);
    j["max_exported_paths"] = cfg.max_exported_paths;
    j["walk_readout"] = std::string(to_string(cfg.walk_readout));
    j["quick"] = cfg.quick;
    j["inject_fault"] = cfg.inject_fault;
    return j.dump(2);
}

std::size_t resolve_threads(const RunConfig& cfg) {
    std::size_t n = cfg.threads.value_or(default_thread_count());
    if (const char* env = std::getenv("FUNESS_THREADS")) {
        char* end = nullptr;
        const unsigned long cap = std::strtoul(env, &end, 10);
        if (end != env && cap > 0) n = std::min<std::size_t>(n, cap);
    }
    return std::max<std::size_t>(n, 1);
}

}  // namespace funess

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsedde/errors.hpp"
#include "sparsedde/gibbs.hpp"
#include "sparsedde/model.hpp"
#include "sparsedde/signal.hpp"

namespace sparsedde {

namespace cfgdetail {

inline void check_keys(const nlohmann::json &j, const std::string &where,
                       std::initializer_list<const char *> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto &item : j.items()) {
        bool ok = false;
        for (const char *a : allowed)
            if (item.key() == a) ok = true;
        if (!ok) throw ConfigError(where + "." + item.key() + ": unknown key");
    }
}

inline double get_number(const nlohmann::json &j, const std::string &where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

inline double opt_number(const nlohmann::json &j, const char *key, const std::string &where, double fallback) {
    if (!j.contains(key)) return fallback;
    return get_number(j[key], where + "." + key);
}

inline std::int64_t get_integer(const nlohmann::json &j, const std::string &where) {
    if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
    return j.get<std::int64_t>();
}

inline std::string get_string(const nlohmann::json &j, const std::string &where) {
    if (!j.is_string()) throw ConfigError(where + ": expected a string");
    return j.get<std::string>();
}

inline bool opt_bool(const nlohmann::json &j, const char *key, const std::string &where, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
    return j[key].get<bool>();
}

inline Eigen::VectorXd get_vector(const nlohmann::json &j, const std::string &where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = get_number(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

} // namespace cfgdetail

struct SimulateConfig {
    SparseDelayModel model;
    Eigen::VectorXd history;
    double dt = 0.0;
    double t_end = 0.0;
    double noise_fraction = 0.0;
    bool derivatives = false;  // include exact dx columns in the CSV
};

struct DiscoverConfig {
    std::string data_path;
    std::vector<std::string> catalog;
    Eigen::Index window_start = 0;
    Eigen::Index window_end = 0;
    int n_mc = 2000;
    double pip_threshold = 0.5;
    FilterSpec filter;
    Hyperparameters hyper;
    double correlation_threshold = 0.99;
    bool auto_drop = false;
    std::vector<std::string> drop;
    double shrink_threshold = 1e-100;
    Eigen::Index min_window_start = 5;
    bool constant_history = true;  // delayed copies for rows i < tau use the first sample
    bool trace = false;
};

struct PredictConfig {
    std::string model_path;                 // either a model ...
    std::vector<std::string> chain_paths;   // ... or one chain per equation
    Eigen::VectorXd history;
    double dt = 0.0;
    double t_end = 0.0;
    int n_draws = 200;
    std::string truth_path;                 // optional comparison model
    std::optional<double> phase_delay;      // also emit a phase portrait
};

struct ReportConfig {
    std::string truth_path;
    std::vector<std::pair<std::string, std::string>> entries;  // (label, model path)
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string mode;  // "simulate" | "discover" | "predict" | "report"
    std::optional<SimulateConfig> simulate_cfg;
    std::optional<DiscoverConfig> discover_cfg;
    std::optional<PredictConfig> predict_cfg;
    std::optional<ReportConfig> report_cfg;
};

inline SimulateConfig parse_simulate_config(const nlohmann::json &j, const std::string &where) {
    cfgdetail::check_keys(j, where, {"model", "history", "dt", "t_end", "noise_fraction", "derivatives"});
    SimulateConfig c;
    if (!j.contains("model")) throw ConfigError(where + ".model: required");
    c.model = model_from_json(j["model"], where + ".model");
    if (!j.contains("history")) throw ConfigError(where + ".history: required");
    c.history = cfgdetail::get_vector(j["history"], where + ".history");
    if (c.history.size() != c.model.m)
        throw ConfigError(where + ".history: length must equal the model dimension");
    if (!j.contains("dt")) throw ConfigError(where + ".dt: required");
    c.dt = cfgdetail::get_number(j["dt"], where + ".dt");
    if (!j.contains("t_end")) throw ConfigError(where + ".t_end: required");
    c.t_end = cfgdetail::get_number(j["t_end"], where + ".t_end");
    c.noise_fraction = cfgdetail::opt_number(j, "noise_fraction", where, 0.0);
    if (c.noise_fraction < 0.0) throw ConfigError(where + ".noise_fraction: must be >= 0");
    c.derivatives = cfgdetail::opt_bool(j, "derivatives", where, false);
    return c;
}

inline nlohmann::json simulate_config_to_json(const SimulateConfig &c) {
    nlohmann::json j;
    j["model"] = model_to_json(c.model);
    j["history"] = std::vector<double>(c.history.data(), c.history.data() + c.history.size());
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["noise_fraction"] = c.noise_fraction;
    j["derivatives"] = c.derivatives;
    return j;
}

inline DiscoverConfig parse_discover_config(const nlohmann::json &j, const std::string &where) {
    cfgdetail::check_keys(j, where,
                          {"data", "catalog", "window", "n_mc", "pip_threshold", "filter", "hyperparameters",
                           "correlation", "shrink_threshold", "min_window_start", "constant_history",
                           "trace"});
    DiscoverConfig c;
    if (!j.contains("data")) throw ConfigError(where + ".data: required");
    c.data_path = cfgdetail::get_string(j["data"], where + ".data");
    if (!j.contains("catalog") || !j["catalog"].is_array() || j["catalog"].empty())
        throw ConfigError(where + ".catalog: required non-empty array of term strings");
    for (std::size_t i = 0; i < j["catalog"].size(); ++i) {
        const std::string path = where + ".catalog[" + std::to_string(i) + "]";
        const std::string term = cfgdetail::get_string(j["catalog"][i], path);
        try {
            parse_term(term);  // validate the grammar up front
        } catch (const ConfigError &e) {
            throw ConfigError(path + ": " + e.what());
        }
        c.catalog.push_back(term);
    }
    if (!j.contains("window")) throw ConfigError(where + ".window: required");
    cfgdetail::check_keys(j["window"], where + ".window", {"start", "end"});
    if (!j["window"].contains("start") || !j["window"].contains("end"))
        throw ConfigError(where + ".window: needs start and end");
    c.window_start = cfgdetail::get_integer(j["window"]["start"], where + ".window.start");
    c.window_end = cfgdetail::get_integer(j["window"]["end"], where + ".window.end");
    if (j.contains("n_mc")) c.n_mc = static_cast<int>(cfgdetail::get_integer(j["n_mc"], where + ".n_mc"));
    c.pip_threshold = cfgdetail::opt_number(j, "pip_threshold", where, 0.5);
    if (j.contains("filter")) {
        const auto &f = j["filter"];
        cfgdetail::check_keys(f, where + ".filter", {"order", "cutoff", "enabled"});
        if (f.contains("order"))
            c.filter.order = static_cast<int>(cfgdetail::get_integer(f["order"], where + ".filter.order"));
        c.filter.cutoff = cfgdetail::opt_number(f, "cutoff", where + ".filter", 0.1);
        c.filter.enabled = cfgdetail::opt_bool(f, "enabled", where + ".filter", true);
    }
    if (j.contains("hyperparameters")) {
        const auto &h = j["hyperparameters"];
        cfgdetail::check_keys(h, where + ".hyperparameters",
                              {"alpha_p", "beta_p", "alpha_sigma", "beta_sigma", "alpha_nu", "beta_nu",
                               "dirichlet_alpha"});
        const std::string hw = where + ".hyperparameters";
        c.hyper.alpha_p = cfgdetail::opt_number(h, "alpha_p", hw, c.hyper.alpha_p);
        c.hyper.beta_p = cfgdetail::opt_number(h, "beta_p", hw, c.hyper.beta_p);
        c.hyper.alpha_sigma = cfgdetail::opt_number(h, "alpha_sigma", hw, c.hyper.alpha_sigma);
        c.hyper.beta_sigma = cfgdetail::opt_number(h, "beta_sigma", hw, c.hyper.beta_sigma);
        c.hyper.alpha_nu = cfgdetail::opt_number(h, "alpha_nu", hw, c.hyper.alpha_nu);
        c.hyper.beta_nu = cfgdetail::opt_number(h, "beta_nu", hw, c.hyper.beta_nu);
        c.hyper.dirichlet_alpha = cfgdetail::opt_number(h, "dirichlet_alpha", hw, c.hyper.dirichlet_alpha);
    }
    if (j.contains("correlation")) {
        const auto &r = j["correlation"];
        cfgdetail::check_keys(r, where + ".correlation", {"threshold", "auto_drop", "drop"});
        c.correlation_threshold = cfgdetail::opt_number(r, "threshold", where + ".correlation", 0.99);
        c.auto_drop = cfgdetail::opt_bool(r, "auto_drop", where + ".correlation", false);
        if (r.contains("drop")) {
            if (!r["drop"].is_array()) throw ConfigError(where + ".correlation.drop: expected an array");
            for (std::size_t i = 0; i < r["drop"].size(); ++i) {
                const std::string path = where + ".correlation.drop[" + std::to_string(i) + "]";
                const std::string term = cfgdetail::get_string(r["drop"][i], path);
                try {
                    parse_term(term);
                } catch (const ConfigError &e) {
                    throw ConfigError(path + ": " + e.what());
                }
                c.drop.push_back(term);
            }
        }
    }
    c.shrink_threshold = cfgdetail::opt_number(j, "shrink_threshold", where, 1e-100);
    if (j.contains("min_window_start"))
        c.min_window_start = cfgdetail::get_integer(j["min_window_start"], where + ".min_window_start");
    c.constant_history = cfgdetail::opt_bool(j, "constant_history", where, true);
    c.trace = cfgdetail::opt_bool(j, "trace", where, false);
    return c;
}

inline nlohmann::json discover_config_to_json(const DiscoverConfig &c) {
    nlohmann::json j;
    j["data"] = c.data_path;
    j["catalog"] = c.catalog;
    j["window"] = {{"start", c.window_start}, {"end", c.window_end}};
    j["n_mc"] = c.n_mc;
    j["pip_threshold"] = c.pip_threshold;
    j["filter"] = {{"order", c.filter.order}, {"cutoff", c.filter.cutoff}, {"enabled", c.filter.enabled}};
    j["hyperparameters"] = {{"alpha_p", c.hyper.alpha_p},         {"beta_p", c.hyper.beta_p},
                            {"alpha_sigma", c.hyper.alpha_sigma}, {"beta_sigma", c.hyper.beta_sigma},
                            {"alpha_nu", c.hyper.alpha_nu},       {"beta_nu", c.hyper.beta_nu},
                            {"dirichlet_alpha", c.hyper.dirichlet_alpha}};
    j["correlation"] = {{"threshold", c.correlation_threshold}, {"auto_drop", c.auto_drop}, {"drop", c.drop}};
    j["shrink_threshold"] = c.shrink_threshold;
    j["min_window_start"] = c.min_window_start;
    j["constant_history"] = c.constant_history;
    j["trace"] = c.trace;
    return j;
}

inline PredictConfig parse_predict_config(const nlohmann::json &j, const std::string &where) {
    cfgdetail::check_keys(j, where,
                          {"model", "chains", "history", "dt", "t_end", "n_draws", "truth", "phase_delay"});
    PredictConfig c;
    if (j.contains("model")) c.model_path = cfgdetail::get_string(j["model"], where + ".model");
    if (j.contains("chains")) {
        if (!j["chains"].is_array() || j["chains"].empty())
            throw ConfigError(where + ".chains: expected a non-empty array of chain paths");
        for (std::size_t i = 0; i < j["chains"].size(); ++i)
            c.chain_paths.push_back(
                cfgdetail::get_string(j["chains"][i], where + ".chains[" + std::to_string(i) + "]"));
    }
    if (c.model_path.empty() == c.chain_paths.empty())
        throw ConfigError(where + ": exactly one of 'model' or 'chains' is required");
    if (!j.contains("history")) throw ConfigError(where + ".history: required");
    c.history = cfgdetail::get_vector(j["history"], where + ".history");
    if (!j.contains("dt")) throw ConfigError(where + ".dt: required");
    c.dt = cfgdetail::get_number(j["dt"], where + ".dt");
    if (!j.contains("t_end")) throw ConfigError(where + ".t_end: required");
    c.t_end = cfgdetail::get_number(j["t_end"], where + ".t_end");
    if (j.contains("n_draws")) c.n_draws = static_cast<int>(cfgdetail::get_integer(j["n_draws"], where + ".n_draws"));
    if (j.contains("truth")) c.truth_path = cfgdetail::get_string(j["truth"], where + ".truth");
    if (j.contains("phase_delay")) c.phase_delay = cfgdetail::get_number(j["phase_delay"], where + ".phase_delay");
    return c;
}

inline nlohmann::json predict_config_to_json(const PredictConfig &c) {
    nlohmann::json j;
    if (!c.model_path.empty()) j["model"] = c.model_path;
    if (!c.chain_paths.empty()) j["chains"] = c.chain_paths;
    j["history"] = std::vector<double>(c.history.data(), c.history.data() + c.history.size());
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["n_draws"] = c.n_draws;
    if (!c.truth_path.empty()) j["truth"] = c.truth_path;
    if (c.phase_delay) j["phase_delay"] = *c.phase_delay;
    return j;
}

inline ReportConfig parse_report_config(const nlohmann::json &j, const std::string &where) {
    cfgdetail::check_keys(j, where, {"truth", "entries"});
    ReportConfig c;
    if (!j.contains("truth")) throw ConfigError(where + ".truth: required");
    c.truth_path = cfgdetail::get_string(j["truth"], where + ".truth");
    if (!j.contains("entries") || !j["entries"].is_array() || j["entries"].empty())
        throw ConfigError(where + ".entries: required non-empty array");
    for (std::size_t i = 0; i < j["entries"].size(); ++i) {
        const std::string ew = where + ".entries[" + std::to_string(i) + "]";
        cfgdetail::check_keys(j["entries"][i], ew, {"label", "model"});
        if (!j["entries"][i].contains("label") || !j["entries"][i].contains("model"))
            throw ConfigError(ew + ": needs label and model");
        c.entries.emplace_back(cfgdetail::get_string(j["entries"][i]["label"], ew + ".label"),
                               cfgdetail::get_string(j["entries"][i]["model"], ew + ".model"));
    }
    return c;
}

inline nlohmann::json report_config_to_json(const ReportConfig &c) {
    nlohmann::json j;
    j["truth"] = c.truth_path;
    j["entries"] = nlohmann::json::array();
    for (const auto &[label, model] : c.entries)
        j["entries"].push_back({{"label", label}, {"model", model}});
    return j;
}

/// A run config holds exactly one mode section. `outputs` and `command` are
/// accepted (and ignored) so an emitted manifest is itself re-runnable.
inline RunConfig parse_run_config(const nlohmann::json &j) {
    cfgdetail::check_keys(j, "config",
                          {"seed", "simulate", "discover", "predict", "report", "command", "outputs"});
    RunConfig c;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw ConfigError("config.seed: expected an integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    int modes = 0;
    if (j.contains("simulate")) {
        c.mode = "simulate";
        c.simulate_cfg = parse_simulate_config(j["simulate"], "config.simulate");
        ++modes;
    }
    if (j.contains("discover")) {
        c.mode = "discover";
        c.discover_cfg = parse_discover_config(j["discover"], "config.discover");
        ++modes;
    }
    if (j.contains("predict")) {
        c.mode = "predict";
        c.predict_cfg = parse_predict_config(j["predict"], "config.predict");
        ++modes;
    }
    if (j.contains("report")) {
        c.mode = "report";
        c.report_cfg = parse_report_config(j["report"], "config.report");
        ++modes;
    }
    if (modes != 1) throw ConfigError("config: exactly one of simulate/discover/predict/report is required");
    if (j.contains("command") && j["command"].get<std::string>() != c.mode)
        throw ConfigError("config.command: does not match the config section present");
    return c;
}

/// The full effective config (defaults resolved), re-runnable as-is.
inline nlohmann::json run_config_to_json(const RunConfig &c) {
    nlohmann::json j;
    j["command"] = c.mode;
    j["seed"] = c.seed;
    if (c.simulate_cfg) j["simulate"] = simulate_config_to_json(*c.simulate_cfg);
    if (c.discover_cfg) j["discover"] = discover_config_to_json(*c.discover_cfg);
    if (c.predict_cfg) j["predict"] = predict_config_to_json(*c.predict_cfg);
    if (c.report_cfg) j["report"] = report_config_to_json(*c.report_cfg);
    return j;
}

inline nlohmann::json load_json_file(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file: " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError(path + ": " + e.what());
    }
}

} // namespace sparsedde

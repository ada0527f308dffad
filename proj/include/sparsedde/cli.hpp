#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <json.hpp>

#include "sparsedde/config.hpp"
#include "sparsedde/dde.hpp"
#include "sparsedde/pipeline.hpp"
#include "sparsedde/predictor.hpp"
#include "sparsedde/signal.hpp"

namespace sparsedde {

namespace clidetail {

inline void write_text(const std::filesystem::path &path, const std::string &content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path.string());
    f << content;
}

inline void write_json(const std::filesystem::path &path, const nlohmann::json &j) {
    write_text(path, j.dump(2) + "\n");
}

inline void write_manifest(const std::filesystem::path &out_dir, const RunConfig &cfg,
                           const nlohmann::json &outputs) {
    nlohmann::json j = run_config_to_json(cfg);
    j["outputs"] = outputs;
    write_json(out_dir / "manifest.json", j);
}

} // namespace clidetail

/// simulate: integrate the configured model, optionally corrupt with noise,
/// write data.csv + truth_model.json + manifest.json.
inline int cmd_simulate(const RunConfig &run, const std::filesystem::path &out_dir) {
    const SimulateConfig &cfg = *run.simulate_cfg;
    TrajectoryData traj = simulate(cfg.model, cfg.history, cfg.t_end, cfg.dt);
    if (cfg.noise_fraction > 0.0) {
        NoiseSpec noise{cfg.noise_fraction, run.seed};
        traj = add_noise(traj, noise);
        traj.derivatives.reset();  // stale once noise is added
    } else if (!cfg.derivatives) {
        traj.derivatives.reset();
    }
    std::filesystem::create_directories(out_dir);
    write_trajectory_csv((out_dir / "data.csv").string(), traj);
    write_model_json((out_dir / "truth_model.json").string(), cfg.model);
    nlohmann::json outputs;
    outputs["data"] = "data.csv";
    outputs["truth_model"] = "truth_model.json";
    outputs["rows"] = traj.n();
    clidetail::write_manifest(out_dir, run, outputs);
    return 0;
}

/// discover: run the pipeline, write model.json + summary.json (+ chain
/// traces with --trace) + manifest.json.
inline int cmd_discover(const RunConfig &run, const std::filesystem::path &out_dir) {
    const DiscoverConfig &cfg = *run.discover_cfg;
    const TrajectoryData raw = read_trajectory_csv(cfg.data_path);
    const DiscoveryResult result = run_discovery(raw, cfg, run.seed);

    std::filesystem::create_directories(out_dir);
    write_model_json((out_dir / "model.json").string(), result.model);

    nlohmann::json summary;
    summary["catalog"] = result.catalog.names;
    summary["dropped_terms"] = result.dropped_terms;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto &p : result.screened_pairs) pairs.push_back(describe_pair(p, result.catalog));
    summary["correlation_pairs"] = pairs;
    summary["averaged_tau_seconds"] = result.model.delay;
    summary["rendered"] = render_equations(result.model);
    summary["equations"] = nlohmann::json::array();
    for (std::size_t e = 0; e < result.summaries.size(); ++e) {
        nlohmann::json je = summary_to_json(result.summaries[e], result.catalog);
        je["notices"] = result.chains[e].notices;
        je["min_q_ratio"] = result.chains[e].min_q_ratio;
        summary["equations"].push_back(je);
    }
    clidetail::write_json(out_dir / "summary.json", summary);

    nlohmann::json outputs;
    outputs["model"] = "model.json";
    outputs["summary"] = "summary.json";
    if (cfg.trace) {
        for (std::size_t e = 0; e < result.chains.size(); ++e) {
            const std::string base = "chain_eq" + std::to_string(e + 1);
            clidetail::write_json(out_dir / (base + ".json"), chain_to_json(result.chains[e]));
            std::ofstream csv(out_dir / (base + ".csv"), std::ios::binary);
            write_chain_csv(csv, result.chains[e]);
            outputs["chains"].push_back(base + ".json");
        }
    }
    clidetail::write_manifest(out_dir, run, outputs);
    std::cout << render_equations(result.model);
    return 0;
}

namespace clidetail {

inline void write_band_csv(const std::filesystem::path &path, const PredictionBand &band,
                           const std::optional<TrajectoryData> &truth) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path.string());
    const Eigen::Index m = band.mean.cols();
    f << "t";
    for (Eigen::Index j = 0; j < m; ++j) {
        const std::string sfx = m == 1 ? "" : "_x" + std::to_string(j + 1);
        f << ",mean" << sfx << ",lo95" << sfx << ",hi95" << sfx;
        if (truth) f << ",truth" << sfx;
    }
    f << "\n";
    for (Eigen::Index i = 0; i < band.t.size(); ++i) {
        f << format_double(band.t[i]);
        for (Eigen::Index j = 0; j < m; ++j) {
            f << "," << format_double(band.mean(i, j)) << "," << format_double(band.lo95(i, j)) << ","
              << format_double(band.hi95(i, j));
            if (truth) f << "," << format_double(truth->states(i, j));
        }
        f << "\n";
    }
}

inline void write_phase_csv(const std::filesystem::path &path,
                            const std::vector<std::pair<double, double>> &pts) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path.string());
    f << "x,x_delayed\n";
    for (const auto &[x, xd] : pts) f << format_double(x) << "," << format_double(xd) << "\n";
}

} // namespace clidetail

/// predict: point prediction from a model file, or mean + 95% band from chain
/// traces; optional truth column and phase-portrait CSV.
inline int cmd_predict(const RunConfig &run, const std::filesystem::path &out_dir) {
    const PredictConfig &cfg = *run.predict_cfg;
    std::filesystem::create_directories(out_dir);
    nlohmann::json outputs;

    std::optional<TrajectoryData> truth;
    if (!cfg.truth_path.empty()) {
        const SparseDelayModel truth_model = read_model_json(cfg.truth_path);
        truth = simulate(truth_model, cfg.history, cfg.t_end, cfg.dt);
    }

    TrajectoryData point_traj;
    if (!cfg.model_path.empty()) {
        const SparseDelayModel model = read_model_json(cfg.model_path);
        point_traj = predict(model, cfg.history, cfg.t_end, cfg.dt);
        point_traj.derivatives.reset();
        std::ofstream f(out_dir / "prediction.csv", std::ios::binary);
        write_trajectory_csv(f, point_traj);
        outputs["prediction"] = "prediction.csv";
    } else {
        std::vector<ChainRecord> chains;
        for (const auto &path : cfg.chain_paths)
            chains.push_back(chain_from_json(load_json_file(path), path));
        CandidateCatalog catalog = CandidateCatalog::from_strings(chains.front().catalog_names);
        const PredictionBand band = predict_with_uncertainty(chains, catalog, cfg.history, cfg.t_end,
                                                             cfg.dt, cfg.n_draws, run.seed);
        clidetail::write_band_csv(out_dir / "band.csv", band, truth);
        outputs["band"] = "band.csv";
        outputs["n_diverged"] = band.n_diverged;
        outputs["n_used"] = band.n_used;

        // mean-coefficient model for the phase portrait / point trajectory
        std::vector<PosteriorSummary> summaries;
        for (const auto &c : chains) summaries.push_back(summarize(c));
        const SparseDelayModel mean_model = to_model(summaries, catalog, chains.front().dt);
        point_traj = predict(mean_model, cfg.history, cfg.t_end, cfg.dt);
    }

    if (cfg.phase_delay) {
        const auto pts = phase_portrait(point_traj, *cfg.phase_delay);
        clidetail::write_phase_csv(out_dir / "phase.csv", pts);
        outputs["phase"] = "phase.csv";
    }
    clidetail::write_manifest(out_dir, run, outputs);
    return 0;
}

/// report: parameter-error table of identified models against a truth model.
inline int cmd_report(const RunConfig &run, const std::filesystem::path &out_dir) {
    const ReportConfig &cfg = *run.report_cfg;
    const SparseDelayModel truth = read_model_json(cfg.truth_path);
    std::filesystem::create_directories(out_dir);

    nlohmann::json rows = nlohmann::json::array();
    std::string csv = "label,e_theta\n";
    for (const auto &[label, path] : cfg.entries) {
        const SparseDelayModel model = read_model_json(path);
        const double e = parameter_error(model, truth);
        rows.push_back({{"label", label}, {"model", path}, {"e_theta", e}});
        csv += label + "," + format_double(e) + "\n";
    }
    clidetail::write_text(out_dir / "report.csv", csv);
    clidetail::write_json(out_dir / "report.json", rows);
    nlohmann::json outputs;
    outputs["report_csv"] = "report.csv";
    outputs["report_json"] = "report.json";
    clidetail::write_manifest(out_dir, run, outputs);
    return 0;
}

/// Shared driver: loads the config, applies flag overrides, dispatches, and
/// maps failures onto the documented exit codes (2 config, 3 correlation
/// gate, 4 numerical).
inline int run_cli(const std::string &command, const std::string &config_path,
                   const std::string &out_dir, std::optional<std::uint64_t> seed_override,
                   bool trace_flag) {
    try {
        RunConfig run = parse_run_config(load_json_file(config_path));
        if (run.mode != command)
            throw ConfigError("config file is for '" + run.mode + "' but the '" + command +
                              "' subcommand was invoked");
        if (seed_override) run.seed = *seed_override;
        if (trace_flag && run.discover_cfg) run.discover_cfg->trace = true;
        if (command == "simulate") return cmd_simulate(run, out_dir);
        if (command == "discover") return cmd_discover(run, out_dir);
        if (command == "predict") return cmd_predict(run, out_dir);
        if (command == "report") return cmd_report(run, out_dir);
        throw ConfigError("unknown command: " + command);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CorrelationGateError &e) {
        std::cerr << "correlation gate: " << e.what() << "\n";
        return 3;
    } catch (const Error &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace sparsedde

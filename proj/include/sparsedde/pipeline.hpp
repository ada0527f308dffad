#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsedde/config.hpp"
#include "sparsedde/gibbs.hpp"
#include "sparsedde/library.hpp"
#include "sparsedde/posterior.hpp"
#include "sparsedde/signal.hpp"
#include "sparsedde/trajectory.hpp"

namespace sparsedde {

struct DiscoveryResult {
    CandidateCatalog catalog;                 // after drops
    std::vector<std::string> dropped_terms;   // via drop list or auto_drop
    std::vector<CorrelatedPair> screened_pairs;
    std::vector<ChainRecord> chains;          // one per state equation
    std::vector<PosteriorSummary> summaries;
    SparseDelayModel model;
    TrajectoryData prepared;                  // filtered + differentiated data
};

/// Formats a correlated pair as `name_i ~ name_j (corr)`.
inline std::string describe_pair(const CorrelatedPair &p, const CandidateCatalog &cat) {
    std::ostringstream os;
    os.precision(6);
    os << cat.names[static_cast<std::size_t>(p.i)] << " ~ " << cat.names[static_cast<std::size_t>(p.j)]
       << " (|corr| = " << p.correlation << ")";
    return os.str();
}

/// The full discovery pipeline: filter -> differentiate -> correlation gate
/// -> one Gibbs chain per state equation -> posterior summaries and model.
///
/// The correlation gate is hard: discovery refuses to start while unresolved
/// pairs exist, unless the config lists the terms to drop or sets auto_drop
/// (which removes the higher-indexed column of each offending pair).
inline DiscoveryResult run_discovery(const TrajectoryData &raw, const DiscoverConfig &cfg,
                                     std::uint64_t seed) {
    raw.validate();
    CandidateCatalog catalog = CandidateCatalog::from_strings(cfg.catalog);
    catalog.validate_dimension(raw.dim());

    DiscoveryResult result;

    // explicit drop list first
    if (!cfg.drop.empty()) {
        std::vector<int> drop_idx;
        for (const auto &name : cfg.drop) {
            const TermDescriptor t = parse_term(name);
            const int idx = catalog.find(t);
            if (idx < 0) throw ConfigError("correlation.drop: term '" + name + "' is not in the catalog");
            drop_idx.push_back(idx);
            result.dropped_terms.push_back(term_name(t));
        }
        catalog = catalog.without(drop_idx);
    }

    TrajectoryData prepared = butterworth_zero_phase(raw, cfg.filter);
    prepared = differentiate(prepared);

    // edge rows are dominated by filter transients and one-sided stencils
    const Eigen::Index trim = cfg.filter.enabled ? 3 * cfg.filter.order + 2 : 2;

    // correlation screen at the start of the search window: that library has
    // the most rows, and pair correlations vary only weakly with the delay
    // index, so one check is representative
    {
        const EvaluatedLibrary screen_lib =
            cfg.constant_history
                ? evaluate_library_constant_history(prepared, catalog, cfg.window_start, 0, trim)
                : evaluate_library(prepared, catalog, cfg.window_start);
        auto pairs = correlation_screen(screen_lib, cfg.correlation_threshold);
        result.screened_pairs = pairs;
        if (!pairs.empty()) {
            if (!cfg.auto_drop) {
                std::string msg = "correlated candidate pairs above threshold " +
                                  format_double(cfg.correlation_threshold) + ": ";
                for (std::size_t i = 0; i < pairs.size(); ++i)
                    msg += (i ? "; " : "") + describe_pair(pairs[i], catalog);
                msg += ". List resolutions under discover.correlation.drop or set "
                       "discover.correlation.auto_drop.";
                throw CorrelationGateError(msg);
            }
            std::set<int> to_drop;
            for (const auto &p : pairs) to_drop.insert(p.j);
            for (int idx : to_drop)
                result.dropped_terms.push_back(catalog.names[static_cast<std::size_t>(idx)]);
            catalog = catalog.without(std::vector<int>(to_drop.begin(), to_drop.end()));
        }
    }

    for (Eigen::Index e = 0; e < raw.dim(); ++e) {
        SamplerConfig scfg;
        scfg.n_mc = cfg.n_mc;
        scfg.window_start = cfg.window_start;
        scfg.window_end = cfg.window_end;
        scfg.seed = derive_seed(seed, 1000 + static_cast<std::uint64_t>(e));
        scfg.hyper = cfg.hyper;
        scfg.shrink_threshold = cfg.shrink_threshold;
        scfg.min_window_start = cfg.min_window_start;
        scfg.constant_history = cfg.constant_history;
        scfg.boundary_trim = cfg.constant_history ? trim : 0;
        GibbsSampler sampler(prepared, catalog, e, scfg);
        result.chains.push_back(sampler.run_chain());
        result.summaries.push_back(summarize(result.chains.back(), cfg.pip_threshold));
    }

    result.model = to_model(result.summaries, catalog, prepared.dt);
    result.catalog = std::move(catalog);
    result.prepared = std::move(prepared);
    return result;
}

// --- chain trace serialization (self-contained, reloadable for prediction) ---

inline nlohmann::json chain_to_json(const ChainRecord &c) {
    nlohmann::json j;
    j["dt"] = c.dt;
    j["n_mc"] = c.n_mc;
    j["burn_in_end"] = c.burn_in_end;
    j["tau_freeze_iteration"] = c.tau_freeze_iteration;
    if (c.tau_fixed_iteration) j["tau_fixed_iteration"] = *c.tau_fixed_iteration;
    j["frozen_tau"] = c.frozen_tau;
    j["catalog"] = c.catalog_names;
    j["min_q_ratio"] = c.min_q_ratio;
    j["cholesky_jitter_count"] = c.cholesky_jitter_count;
    j["notices"] = c.notices;
    nlohmann::json its = nlohmann::json::array();
    for (const auto &it : c.iterations) {
        nlohmann::json ji;
        ji["tau"] = it.tau;
        std::string zs(it.z.size(), '0');
        for (std::size_t k = 0; k < it.z.size(); ++k)
            if (it.z[k]) zs[k] = '1';
        ji["z"] = zs;
        ji["theta"] = std::vector<double>(it.theta.data(), it.theta.data() + it.theta.size());
        ji["sigma2"] = it.sigma2;
        ji["nu"] = it.nu;
        ji["p0"] = it.p0;
        ji["window"] = {it.window_lo, it.window_hi};
        its.push_back(std::move(ji));
    }
    j["iterations"] = std::move(its);
    return j;
}

inline ChainRecord chain_from_json(const nlohmann::json &j, const std::string &where = "chain") {
    ChainRecord c;
    c.dt = j.at("dt").get<double>();
    c.n_mc = j.at("n_mc").get<int>();
    c.burn_in_end = j.at("burn_in_end").get<int>();
    c.tau_freeze_iteration = j.at("tau_freeze_iteration").get<int>();
    if (j.contains("tau_fixed_iteration")) c.tau_fixed_iteration = j["tau_fixed_iteration"].get<int>();
    c.frozen_tau = j.at("frozen_tau").get<Eigen::Index>();
    c.catalog_names = j.at("catalog").get<std::vector<std::string>>();
    c.min_q_ratio = j.value("min_q_ratio", 0.0);
    c.cholesky_jitter_count = j.value("cholesky_jitter_count", 0);
    if (j.contains("notices")) c.notices = j["notices"].get<std::vector<std::string>>();
    for (const auto &ji : j.at("iterations")) {
        IterationRecord it;
        it.tau = ji.at("tau").get<Eigen::Index>();
        const std::string zs = ji.at("z").get<std::string>();
        it.z.resize(zs.size());
        for (std::size_t k = 0; k < zs.size(); ++k) it.z[k] = zs[k] == '1';
        const auto th = ji.at("theta").get<std::vector<double>>();
        it.theta = Eigen::Map<const Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size()));
        it.sigma2 = ji.at("sigma2").get<double>();
        it.nu = ji.at("nu").get<double>();
        it.p0 = ji.at("p0").get<double>();
        it.window_lo = ji.at("window")[0].get<Eigen::Index>();
        it.window_hi = ji.at("window")[1].get<Eigen::Index>();
        c.iterations.push_back(std::move(it));
    }
    if (c.iterations.size() != static_cast<std::size_t>(c.n_mc))
        throw ConfigError(where + ": iteration count does not match n_mc");
    return c;
}

/// Flat per-iteration trace for plotting.
inline void write_chain_csv(std::ostream &os, const ChainRecord &c) {
    const std::size_t k = c.catalog_names.size();
    os << "iter,tau,sigma2,nu,p0,window_lo,window_hi";
    for (std::size_t i = 0; i < k; ++i) os << ",z" << (i + 1);
    for (std::size_t i = 0; i < k; ++i) os << ",theta" << (i + 1);
    os << "\n";
    for (std::size_t t = 0; t < c.iterations.size(); ++t) {
        const auto &it = c.iterations[t];
        os << t << "," << it.tau << "," << format_double(it.sigma2) << "," << format_double(it.nu) << ","
           << format_double(it.p0) << "," << it.window_lo << "," << it.window_hi;
        for (std::size_t i = 0; i < k; ++i) os << "," << int(it.z[i]);
        for (std::size_t i = 0; i < k; ++i) os << "," << format_double(it.theta[static_cast<Eigen::Index>(i)]);
        os << "\n";
    }
}

} // namespace sparsedde

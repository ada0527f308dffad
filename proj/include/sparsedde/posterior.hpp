#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sparsedde/errors.hpp"
#include "sparsedde/gibbs.hpp"
#include "sparsedde/model.hpp"
#include "sparsedde/terms.hpp"

namespace sparsedde {

/// Posterior reduction of one chain: PIPs, inclusion-conditional weight
/// statistics, and the converged delay.
struct PosteriorSummary {
    Eigen::VectorXd pip;          // K, exact rational counts over the final half
    Eigen::VectorXd weight_mean;  // K, mean of theta_k over iterates with Z_k = 1
    Eigen::VectorXd weight_sd;    // K, sample sd over the same iterates
    Eigen::Index tau_index = 0;
    double tau_seconds = 0.0;
    std::vector<int> retained;    // indices with pip > threshold (strict)
    int n_post = 0;               // N_F
    double pip_threshold = 0.5;
    bool empty_model = false;     // nothing exceeded the threshold
};

/// PIP and weight statistics over the final N_MC/2 iterations (the tau-frozen
/// phase). Weight summaries are conditional on inclusion: zeros from spike
/// iterates do not dilute the mean.
inline PosteriorSummary summarize(const ChainRecord &chain, double pip_threshold = 0.5) {
    if (chain.iterations.size() != static_cast<std::size_t>(chain.n_mc) || chain.n_mc < 2)
        throw Error("summarize: incomplete chain");
    const int start = chain.n_mc / 2;
    const int n_f = chain.n_mc - start;
    const auto k = static_cast<Eigen::Index>(chain.iterations.front().z.size());

    PosteriorSummary s;
    s.pip_threshold = pip_threshold;
    s.n_post = n_f;
    s.pip = Eigen::VectorXd::Zero(k);
    s.weight_mean = Eigen::VectorXd::Zero(k);
    s.weight_sd = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(k);

    for (int t = start; t < chain.n_mc; ++t) {
        const auto &it = chain.iterations[static_cast<std::size_t>(t)];
        for (Eigen::Index j = 0; j < k; ++j) {
            if (!it.z[static_cast<std::size_t>(j)]) continue;
            count[j] += 1.0;
            sum[j] += it.theta[j];
            sum_sq[j] += it.theta[j] * it.theta[j];
        }
    }
    for (Eigen::Index j = 0; j < k; ++j) {
        s.pip[j] = count[j] / static_cast<double>(n_f);
        if (count[j] > 0.0) s.weight_mean[j] = sum[j] / count[j];
        if (count[j] > 1.0) {
            const double var = (sum_sq[j] - sum[j] * sum[j] / count[j]) / (count[j] - 1.0);
            s.weight_sd[j] = var > 0.0 ? std::sqrt(var) : 0.0;
        }
        if (s.pip[j] > pip_threshold) s.retained.push_back(static_cast<int>(j));
    }
    s.tau_index = chain.frozen_tau;
    s.tau_seconds = static_cast<double>(chain.frozen_tau) * chain.dt;
    s.empty_model = s.retained.empty();
    return s;
}

/// Assembles the discovered model. One summary per state equation; the delay
/// is the average of the per-equation delays (per-equation values stay in the
/// emitted report).
inline SparseDelayModel to_model(const std::vector<PosteriorSummary> &summaries,
                                 const CandidateCatalog &catalog, double dt) {
    if (summaries.empty()) throw Error("to_model: no summaries");
    SparseDelayModel model;
    model.m = static_cast<int>(summaries.size());
    double delay_sum = 0.0;
    for (const auto &s : summaries) {
        std::vector<ModelTerm> eq;
        for (int j : s.retained)
            eq.push_back({catalog.terms[static_cast<std::size_t>(j)], s.weight_mean[j], s.weight_sd[j]});
        model.equations.push_back(std::move(eq));
        delay_sum += s.tau_seconds;
    }
    model.delay = delay_sum / static_cast<double>(summaries.size());
    (void)dt;
    return model;
}

/// Mean squared coefficient difference over the union of true and identified
/// terms; a term present on one side only contributes its full squared
/// coefficient. (The reference metric leaves e_theta undefined; this
/// definition is the one used throughout this project.)
inline double parameter_error(const SparseDelayModel &model, const SparseDelayModel &truth) {
    if (model.m != truth.m) throw Error("parameter_error: dimension mismatch");
    double total = 0.0;
    std::size_t count = 0;
    for (int e = 0; e < model.m; ++e) {
        std::map<std::string, std::pair<double, double>> coef;  // name -> (identified, true)
        for (const auto &mt : model.equations[static_cast<std::size_t>(e)])
            coef[term_name(mt.term)].first = mt.coefficient;
        for (const auto &mt : truth.equations[static_cast<std::size_t>(e)])
            coef[term_name(mt.term)].second = mt.coefficient;
        for (const auto &[name, pair] : coef) {
            const double d = pair.first - pair.second;
            total += d * d;
            ++count;
        }
    }
    if (count == 0) return 0.0;
    return total / static_cast<double>(count);
}

inline nlohmann::json summary_to_json(const PosteriorSummary &s, const CandidateCatalog &catalog) {
    nlohmann::json j;
    j["tau_index"] = s.tau_index;
    j["tau_seconds"] = s.tau_seconds;
    j["n_post"] = s.n_post;
    j["pip_threshold"] = s.pip_threshold;
    j["empty_model"] = s.empty_model;
    j["terms"] = nlohmann::json::array();
    for (Eigen::Index k = 0; k < s.pip.size(); ++k) {
        nlohmann::json jt;
        jt["name"] = catalog.names[static_cast<std::size_t>(k)];
        jt["pip"] = s.pip[k];
        jt["weight_mean"] = s.weight_mean[k];
        jt["weight_sd"] = s.weight_sd[k];
        jt["retained"] = s.pip[k] > s.pip_threshold;
        j["terms"].push_back(jt);
    }
    return j;
}

} // namespace sparsedde

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sparsedde/dde.hpp"
#include "sparsedde/errors.hpp"
#include "sparsedde/gibbs.hpp"
#include "sparsedde/model.hpp"
#include "sparsedde/posterior.hpp"
#include "sparsedde/rng.hpp"
#include "sparsedde/trajectory.hpp"

namespace sparsedde {

/// Point prediction: simulate the mean-coefficient model. Same code path as
/// dde simulation, so ground-truth models reproduce simulate() bit-identically.
inline TrajectoryData predict(const SparseDelayModel &model, const Eigen::VectorXd &history,
                              double t_end, double dt) {
    return simulate(model, history, t_end, dt);
}

struct PredictionBand {
    Eigen::VectorXd t;
    Eigen::MatrixXd mean;   // N x m
    Eigen::MatrixXd lo95;   // pointwise 2.5th percentile
    Eigen::MatrixXd hi95;   // pointwise 97.5th percentile
    int n_requested = 0;
    int n_diverged = 0;     // excluded draws, reported not hidden
    int n_used = 0;
};

namespace detail {

/// Linear-interpolation empirical quantile over a sorted copy.
inline double quantile(std::vector<double> &v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double w = pos - std::floor(pos);
    return (1.0 - w) * v[lo] + w * v[hi];
}

/// Model with the iterate's (Z, theta) coefficients and the converged delay.
inline SparseDelayModel model_from_iterates(const std::vector<const IterationRecord *> &its,
                                            const CandidateCatalog &catalog, double delay) {
    SparseDelayModel model;
    model.m = static_cast<int>(its.size());
    model.delay = delay;
    for (const auto *it : its) {
        std::vector<ModelTerm> eq;
        for (std::size_t k = 0; k < it->z.size(); ++k)
            if (it->z[k]) eq.push_back({catalog.terms[k], it->theta[static_cast<Eigen::Index>(k)], 0.0});
        model.equations.push_back(std::move(eq));
    }
    return model;
}

} // namespace detail

/// Re-simulates `n_draws` post-burn-in posterior iterates (uniform picks from
/// the final, tau-frozen half of each chain) and reduces them to a pointwise
/// mean and empirical 95% band. Diverged draws are excluded and counted.
inline PredictionBand predict_with_uncertainty(const std::vector<ChainRecord> &chains,
                                               const CandidateCatalog &catalog,
                                               const Eigen::VectorXd &history, double t_end, double dt,
                                               int n_draws = 200, std::uint64_t seed = 0) {
    if (chains.empty()) throw Error("predict_with_uncertainty: no chains");
    if (n_draws < 1) throw Error("predict_with_uncertainty: n_draws must be >= 1");
    const auto m = static_cast<Eigen::Index>(chains.size());
    if (history.size() != m) throw Error("predict_with_uncertainty: history size != number of chains");

    double delay = 0.0;
    for (const auto &c : chains) delay += static_cast<double>(c.frozen_tau) * c.dt;
    delay /= static_cast<double>(chains.size());

    Rng rng(seed);
    std::vector<Eigen::MatrixXd> draws;
    draws.reserve(static_cast<std::size_t>(n_draws));
    int n_diverged = 0;
    for (int d = 0; d < n_draws; ++d) {
        std::vector<const IterationRecord *> its;
        for (const auto &c : chains) {
            const int start = c.n_mc / 2;
            const auto pick = static_cast<std::size_t>(rng.uniform_int(start, c.n_mc - 1));
            its.push_back(&c.iterations[pick]);
        }
        const SparseDelayModel model = detail::model_from_iterates(its, catalog, delay);
        try {
            draws.push_back(simulate(model, history, t_end, dt).states);
        } catch (const Diverged &) {
            ++n_diverged;
        } catch (const SingularOperand &) {
            ++n_diverged;
        }
    }
    if (draws.empty()) throw AllDrawsDiverged("every posterior draw diverged during re-simulation");

    const Eigen::Index n = draws.front().rows();
    PredictionBand band;
    band.n_requested = n_draws;
    band.n_diverged = n_diverged;
    band.n_used = static_cast<int>(draws.size());
    band.t.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) band.t[i] = static_cast<double>(i) * dt;
    band.mean = Eigen::MatrixXd::Zero(n, m);
    band.lo95.resize(n, m);
    band.hi95.resize(n, m);
    std::vector<double> column(draws.size());
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < draws.size(); ++d) column[d] = draws[d](i, j);
            double s = 0.0;
            for (double v : column) s += v;
            band.mean(i, j) = s / static_cast<double>(column.size());
            std::vector<double> tmp = column;
            band.lo95(i, j) = detail::quantile(tmp, 0.025);
            tmp = column;
            band.hi95(i, j) = detail::quantile(tmp, 0.975);
        }
    }
    return band;
}

/// (x(t), x(t - delay)) point series for phase-portrait plotting. Grid lookup
/// when the delay is an integer number of steps, linear interpolation otherwise.
inline std::vector<std::pair<double, double>> phase_portrait(const TrajectoryData &traj, double delay,
                                                             Eigen::Index channel = 0) {
    if (delay < 0.0) throw Error("phase_portrait: delay must be >= 0");
    if (channel < 0 || channel >= traj.dim()) throw Error("phase_portrait: bad channel");
    const double lag = delay / traj.dt;
    const auto lag_floor = static_cast<Eigen::Index>(std::floor(lag));
    std::vector<std::pair<double, double>> pts;
    for (Eigen::Index i = 0; i < traj.n(); ++i) {
        const double pos = static_cast<double>(i) - lag;
        if (pos < 0.0) continue;
        double delayed;
        const double nearest = std::nearbyint(pos);
        if (std::abs(pos - nearest) < 1e-9) {
            delayed = traj.states(static_cast<Eigen::Index>(nearest), channel);
        } else {
            const auto j = i - lag_floor - 1;
            const double w = pos - std::floor(pos);
            delayed = (1.0 - w) * traj.states(j, channel) + w * traj.states(j + 1, channel);
        }
        pts.emplace_back(traj.states(i, channel), delayed);
    }
    return pts;
}

} // namespace sparsedde

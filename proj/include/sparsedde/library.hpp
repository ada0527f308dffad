#pragma once

#include <algorithm>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "sparsedde/errors.hpp"
#include "sparsedde/terms.hpp"
#include "sparsedde/trajectory.hpp"

namespace sparsedde {

/// Paired rows (x_i, x_{i-tau}, y_i) for i = row_start .. N-1.
struct AugmentedData {
    Eigen::MatrixXd x;        // N_eff x m
    Eigen::MatrixXd x_tau;    // N_eff x m
    Eigen::MatrixXd y;        // N_eff x m, derivative targets
    Eigen::Index row_start = 0;
};

/// Drops boundary rows that lack delayed history and pairs each remaining row
/// with its delayed copy. `row_start` defaults to tau_index (the minimal trim);
/// the sampler passes the initial window end so every delay index in a run
/// shares the same target rows.
inline AugmentedData augment(const TrajectoryData &data, Eigen::Index tau_index,
                             Eigen::Index row_start = -1) {
    const Eigen::Index n = data.n();
    if (!data.derivatives) throw Error("augment: derivatives required");
    if (tau_index < 1 || tau_index > n - 2)
        throw DelayTooLarge("augment: tau_index " + std::to_string(tau_index) +
                            " outside [1, " + std::to_string(n - 2) + "]");
    if (row_start < 0) row_start = tau_index;
    if (row_start < tau_index) throw Error("augment: row_start must be >= tau_index");
    if (row_start > n - 1) throw DelayTooLarge("augment: row_start leaves no rows");

    const Eigen::Index n_eff = n - row_start;
    AugmentedData out;
    out.row_start = row_start;
    out.x = data.states.bottomRows(n_eff);
    out.x_tau = data.states.middleRows(row_start - tau_index, n_eff);
    out.y = data.derivatives->bottomRows(n_eff);
    return out;
}

/// The evaluated candidate library L_tau for one delay index and one target
/// derivative channel.
struct EvaluatedLibrary {
    Eigen::Index tau_index = 0;
    Eigen::Index row_offset = 0;   // rows dropped from the top of the data
    Eigen::MatrixXd matrix;        // N_eff x K
    Eigen::VectorXd target;        // N_eff

    Eigen::Index n_eff() const { return matrix.rows(); }
    Eigen::Index k() const { return matrix.cols(); }
};

inline EvaluatedLibrary evaluate_library(const TrajectoryData &data, const CandidateCatalog &catalog,
                                         Eigen::Index tau_index, Eigen::Index target_channel = 0,
                                         Eigen::Index row_start = -1) {
    catalog.validate_dimension(data.dim());
    if (target_channel < 0 || target_channel >= data.dim())
        throw Error("evaluate_library: bad target channel");
    const AugmentedData aug = augment(data, tau_index, row_start);
    const Eigen::Index n_eff = aug.x.rows();
    const Eigen::Index k = catalog.size();
    if (n_eff < k)
        throw DelayTooLarge("evaluate_library: N_eff = " + std::to_string(n_eff) +
                            " < K = " + std::to_string(k) + " (regression underdetermined)");

    EvaluatedLibrary lib;
    lib.tau_index = tau_index;
    lib.row_offset = aug.row_start;
    lib.matrix.resize(n_eff, k);
    lib.target = aug.y.col(target_channel);
    for (Eigen::Index i = 0; i < n_eff; ++i) {
        const Eigen::VectorXd xi = aug.x.row(i).transpose();
        const Eigen::VectorXd xti = aug.x_tau.row(i).transpose();
        for (Eigen::Index c = 0; c < k; ++c) {
            double v;
            try {
                v = evaluate_term(catalog.terms[c], xi, xti);
            } catch (const SingularOperand &) {
                throw SingularOperand("catalog term '" + catalog.names[c] + "' hits a singularity at data row " +
                                      std::to_string(aug.row_start + i) +
                                      " (drop the term via the correlation/drop config to proceed)");
            }
            if (!std::isfinite(v))
                throw SingularOperand("catalog term '" + catalog.names[c] + "' evaluates non-finite at data row " +
                                      std::to_string(aug.row_start + i));
            lib.matrix(i, c) = v;
        }
    }
    return lib;
}

/// Library variant for data recorded from a constant pre-sample history: the
/// delayed copy for rows i < tau_index is the first sample (the history
/// value), so every delay index shares the same rows and the same target.
/// `boundary_trim` rows are cut from both ends (filter/stencil edge effects).
inline EvaluatedLibrary evaluate_library_constant_history(const TrajectoryData &data,
                                                          const CandidateCatalog &catalog,
                                                          Eigen::Index tau_index,
                                                          Eigen::Index target_channel = 0,
                                                          Eigen::Index boundary_trim = 0) {
    catalog.validate_dimension(data.dim());
    if (!data.derivatives) throw Error("evaluate_library: derivatives required");
    if (target_channel < 0 || target_channel >= data.dim())
        throw Error("evaluate_library: bad target channel");
    const Eigen::Index n = data.n();
    if (tau_index < 1 || tau_index > n - 2)
        throw DelayTooLarge("evaluate_library: tau_index " + std::to_string(tau_index) +
                            " outside [1, " + std::to_string(n - 2) + "]");
    if (boundary_trim < 0 || 2 * boundary_trim >= n - catalog.size())
        throw Error("evaluate_library: boundary_trim too large");
    const Eigen::Index n_eff = n - 2 * boundary_trim;
    const Eigen::Index k = catalog.size();
    if (n_eff < k)
        throw DelayTooLarge("evaluate_library: N_eff = " + std::to_string(n_eff) +
                            " < K = " + std::to_string(k) + " (regression underdetermined)");

    EvaluatedLibrary lib;
    lib.tau_index = tau_index;
    lib.row_offset = boundary_trim;
    lib.matrix.resize(n_eff, k);
    lib.target = data.derivatives->col(target_channel).segment(boundary_trim, n_eff);
    for (Eigen::Index r = 0; r < n_eff; ++r) {
        const Eigen::Index i = boundary_trim + r;
        const Eigen::VectorXd xi = data.states.row(i).transpose();
        const Eigen::VectorXd xti = data.states.row(std::max<Eigen::Index>(i - tau_index, 0)).transpose();
        for (Eigen::Index c = 0; c < k; ++c) {
            double v;
            try {
                v = evaluate_term(catalog.terms[c], xi, xti);
            } catch (const SingularOperand &) {
                throw SingularOperand("catalog term '" + catalog.names[c] + "' hits a singularity at data row " +
                                      std::to_string(i) +
                                      " (drop the term via the correlation/drop config to proceed)");
            }
            if (!std::isfinite(v))
                throw SingularOperand("catalog term '" + catalog.names[c] + "' evaluates non-finite at data row " +
                                      std::to_string(i));
            lib.matrix(r, c) = v;
        }
    }
    return lib;
}

struct CorrelatedPair {
    int i = 0;
    int j = 0;              // i < j, catalog indices
    double correlation = 0; // absolute Pearson correlation
};

/// All unordered column pairs with |Pearson correlation| >= threshold,
/// ordered by (i, j). Near-constant columns are skipped (no defined
/// correlation; exactly-zero columns are handled by the sampler clamp).
inline std::vector<CorrelatedPair> correlation_screen(const EvaluatedLibrary &lib,
                                                      double threshold = 0.99) {
    const Eigen::Index n = lib.n_eff();
    const Eigen::Index k = lib.k();
    Eigen::MatrixXd centered = lib.matrix.rowwise() - lib.matrix.colwise().mean();
    Eigen::VectorXd norms = centered.colwise().norm();
    const double floor = 1e-14 * static_cast<double>(n);
    std::vector<CorrelatedPair> pairs;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (norms[i] < floor) continue;
        for (Eigen::Index j = i + 1; j < k; ++j) {
            if (norms[j] < floor) continue;
            const double corr = std::abs(centered.col(i).dot(centered.col(j))) / (norms[i] * norms[j]);
            if (corr >= threshold)
                pairs.push_back({static_cast<int>(i), static_cast<int>(j), corr});
        }
    }
    return pairs;
}

/// Bounded LRU cache of evaluated libraries keyed by delay index.
/// Concurrent reads are fine; inserts take the mutex.
class LibraryCache {
  public:
    explicit LibraryCache(std::size_t capacity = 256) : capacity_(capacity) {}

    template <typename BuildFn>
    std::shared_ptr<const EvaluatedLibrary> get(Eigen::Index tau_index, BuildFn &&build) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = map_.find(tau_index);
            if (it != map_.end()) {
                order_.splice(order_.begin(), order_, it->second.order_it);
                return it->second.lib;
            }
        }
        auto lib = std::make_shared<const EvaluatedLibrary>(build(tau_index));
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = map_.find(tau_index);
        if (it != map_.end()) return it->second.lib;  // raced with another builder
        order_.push_front(tau_index);
        map_[tau_index] = {lib, order_.begin()};
        if (map_.size() > capacity_) {
            map_.erase(order_.back());
            order_.pop_back();
        }
        return lib;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return map_.size();
    }

  private:
    struct Entry {
        std::shared_ptr<const EvaluatedLibrary> lib;
        std::list<Eigen::Index>::iterator order_it;
    };
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::unordered_map<Eigen::Index, Entry> map_;
    std::list<Eigen::Index> order_;
};

/// Sufficient statistics of a library: everything the sampler's marginal
/// likelihoods and conditionals need, independent of N_eff once built.
struct LibraryStats {
    Eigen::MatrixXd gram;       // L^T L, K x K
    Eigen::VectorXd lty;        // L^T Y
    double yty = 0.0;           // Y^T Y
    Eigen::Index n_eff = 0;
    std::vector<int> zero_columns;  // exactly-zero columns over the effective rows

    static LibraryStats from(const EvaluatedLibrary &lib) {
        LibraryStats s;
        s.gram = lib.matrix.transpose() * lib.matrix;
        s.lty = lib.matrix.transpose() * lib.target;
        s.yty = lib.target.squaredNorm();
        s.n_eff = lib.n_eff();
        for (Eigen::Index c = 0; c < lib.k(); ++c)
            if ((lib.matrix.col(c).array() == 0.0).all()) s.zero_columns.push_back(static_cast<int>(c));
        return s;
    }
};

} // namespace sparsedde

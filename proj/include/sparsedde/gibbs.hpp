#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sparsedde/errors.hpp"
#include "sparsedde/library.hpp"
#include "sparsedde/rng.hpp"
#include "sparsedde/terms.hpp"
#include "sparsedde/trajectory.hpp"

namespace sparsedde {

struct Hyperparameters {
    double alpha_p = 0.1;
    double beta_p = 0.1;
    double alpha_sigma = 1e-4;
    double beta_sigma = 1e-4;
    double alpha_nu = 0.1;
    double beta_nu = 0.1;
    double dirichlet_alpha = 1.0;

    void validate() const {
        for (double v : {alpha_p, beta_p, alpha_sigma, beta_sigma, alpha_nu, beta_nu, dirichlet_alpha})
            if (!(v > 0.0)) throw Error("hyperparameters must be strictly positive");
    }
};

struct SamplerConfig {
    int n_mc = 2000;
    Eigen::Index window_start = 0;
    Eigen::Index window_end = 0;
    std::uint64_t seed = 0;
    Hyperparameters hyper;
    double shrink_threshold = 1e-100;
    Eigen::Index min_window_start = 5;

    // Library row policy. constant_history fills the delayed copy for rows
    // i < tau with the first sample (exact for data recorded from a constant
    // pre-sample history), so every delay index regresses the same target;
    // with it off, rows i < tau are dropped per the augmentation definition.
    bool constant_history = true;
    Eigen::Index boundary_trim = 0;  // rows cut from both ends in constant_history mode

    // Diagnostics hooks. Fixing nu/p0/G turns the adaptive pieces off so the
    // (Z, tau) sub-chain targets an enumerable stationary distribution;
    // freeze_tau_schedule=false keeps sampling tau for the whole chain.
    std::optional<double> fixed_nu;
    std::optional<double> fixed_p0;
    bool fixed_uniform_g = false;
    bool freeze_tau_schedule = true;
};

/// One Gibbs iterate.
struct SamplerState {
    Eigen::Index tau = 0;
    std::vector<std::uint8_t> z;
    Eigen::VectorXd theta;            // exact zeros where z = 0
    double sigma2 = 1.0;
    double nu = 0.5;
    double p0 = 0.1;
    Eigen::VectorXd g;                // over [window_lo, window_hi], sums to 1
    Eigen::VectorXd dirichlet_alpha;  // same support; counts accumulate here
    Eigen::Index window_lo = 0;
    Eigen::Index window_hi = 0;
    bool tau_fixed = false;
    std::vector<std::uint8_t> clamped;  // zero-column terms, held at z = 0

    Eigen::Index active_count() const {
        Eigen::Index r = 0;
        for (auto v : z) r += v;
        return r;
    }
};

/// Cholesky-factor view of the reduced Gaussian posterior
/// Sigma^{-1} = L_r^T L_r + nu^{-1} I_r, mu = Sigma L_r^T Y.
struct GaussianPosteriorParams {
    std::vector<int> active;      // catalog indices with z = 1
    Eigen::VectorXd mu;
    Eigen::MatrixXd chol_lower;   // R with Sigma^{-1} = R R^T
    double log_det_sigma_inv = 0.0;
    double quad = 0.0;            // mu^T Sigma^{-1} mu

    Eigen::Index r() const { return static_cast<Eigen::Index>(active.size()); }
};

struct IterationRecord {
    Eigen::Index tau = 0;
    std::vector<std::uint8_t> z;
    Eigen::VectorXd theta;
    double sigma2 = 0.0;
    double nu = 0.0;
    double p0 = 0.0;
    Eigen::Index window_lo = 0;
    Eigen::Index window_hi = 0;
};

struct ChainRecord {
    double dt = 0.0;
    int n_mc = 0;
    int burn_in_end = 0;            // n_mc / 4
    int tau_freeze_iteration = 0;   // n_mc / 2
    std::optional<int> tau_fixed_iteration;  // absorbing-state fix, if any
    Eigen::Index frozen_tau = 0;
    std::vector<IterationRecord> iterations;
    std::vector<std::string> catalog_names;

    // numerical diagnostics
    double min_q_ratio = 0.0;       // min of (Y'Y - mu'Sigma^{-1}mu) / Y'Y seen
    int cholesky_jitter_count = 0;
    std::vector<std::string> notices;
};

namespace detail {

struct NumericsDiag {
    double min_q_ratio = std::numeric_limits<double>::infinity();
    int jitter_count = 0;
};

/// Cholesky of A with one jitter retry (1e-10 * trace / r added to the
/// diagonal); CholeskyFailure after that.
inline Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd a, NumericsDiag *diag) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const double jitter = 1e-10 * a.trace() / static_cast<double>(a.rows());
    a.diagonal().array() += jitter;
    if (diag) ++diag->jitter_count;
    llt.compute(a);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    throw CholeskyFailure("posterior precision matrix is not positive definite");
}

} // namespace detail

inline GaussianPosteriorParams compute_posterior_params(const LibraryStats &stats,
                                                        const std::vector<std::uint8_t> &z, double nu,
                                                        detail::NumericsDiag *diag = nullptr) {
    GaussianPosteriorParams p;
    for (std::size_t k = 0; k < z.size(); ++k)
        if (z[k]) p.active.push_back(static_cast<int>(k));
    const Eigen::Index r = p.r();
    if (r == 0) return p;

    Eigen::MatrixXd a(r, r);
    Eigen::VectorXd b(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        b[i] = stats.lty[p.active[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < r; ++j)
            a(i, j) = stats.gram(p.active[static_cast<std::size_t>(i)], p.active[static_cast<std::size_t>(j)]);
    }
    a.diagonal().array() += 1.0 / nu;

    p.chol_lower = detail::cholesky_with_jitter(std::move(a), diag);
    const Eigen::VectorXd w = p.chol_lower.triangularView<Eigen::Lower>().solve(b);
    p.quad = w.squaredNorm();
    p.mu = p.chol_lower.transpose().triangularView<Eigen::Upper>().solve(w);
    p.log_det_sigma_inv = 2.0 * p.chol_lower.diagonal().array().log().sum();
    return p;
}

/// log p(Y | Z, L_tau, nu): theta and sigma^2 integrated out analytically.
/// Entirely in log space; the r = 0 case falls out of the same expression
/// (empty determinant, quad = 0).
inline double log_marginal_from_stats(const LibraryStats &stats, const std::vector<std::uint8_t> &z,
                                      double nu, const Hyperparameters &hyper,
                                      detail::NumericsDiag *diag = nullptr) {
    const GaussianPosteriorParams p = compute_posterior_params(stats, z, nu, diag);
    double q = stats.yty - p.quad;
    if (diag && stats.yty > 0.0)
        diag->min_q_ratio = std::min(diag->min_q_ratio, q / stats.yty);
    if (q < 0.0) q = 0.0;  // residual quadratic form; negatives are roundoff
    const double n = static_cast<double>(stats.n_eff);
    const double r = static_cast<double>(p.r());
    return -0.5 * p.log_det_sigma_inv - 0.5 * r * std::log(nu) - 0.5 * n * std::log(2.0 * M_PI) +
           hyper.alpha_sigma * std::log(hyper.beta_sigma) + std::lgamma(hyper.alpha_sigma + 0.5 * n) -
           std::lgamma(hyper.alpha_sigma) -
           (hyper.alpha_sigma + 0.5 * n) * std::log(hyper.beta_sigma + 0.5 * q);
}

/// Spec-shaped overload: L_r holds only the included columns.
inline double log_marginal_likelihood(const Eigen::VectorXd &y, const Eigen::MatrixXd &l_r, double nu,
                                      const Hyperparameters &hyper) {
    LibraryStats stats;
    stats.gram = l_r.transpose() * l_r;
    stats.lty = l_r.transpose() * y;
    stats.yty = y.squaredNorm();
    stats.n_eff = y.size();
    const std::vector<std::uint8_t> z(static_cast<std::size_t>(l_r.cols()), 1);
    return log_marginal_from_stats(stats, z, nu, hyper);
}

/// exp-normalizes log weights via logsumexp; invariant to adding a constant.
inline Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd &logw) {
    const double m = logw.maxCoeff();
    Eigen::VectorXd w = (logw.array() - m).exp();
    return w / w.sum();
}

/// The Gibbs sampler for one derivative channel. Draws
/// {tau, L_tau, Z, sigma^2, nu, p0, G, theta} sequentially per iteration,
/// with dynamic delay-window shrinking and the burn-in / average / freeze
/// schedule for tau.
class GibbsSampler {
  public:
    GibbsSampler(const TrajectoryData &data, CandidateCatalog catalog, Eigen::Index target_channel,
                 SamplerConfig config)
        : data_(data), catalog_(std::move(catalog)), channel_(target_channel), cfg_(config) {
        cfg_.hyper.validate();
        if (!data_.derivatives) throw Error("sampler: derivatives required (run differentiate first)");
        catalog_.validate_dimension(data_.dim());
        if (cfg_.n_mc < 8) throw Error("sampler: n_mc must be >= 8");
        const Eigen::Index n = data_.n();
        if (cfg_.window_end - cfg_.window_start < 2)
            throw WindowTooSmall("sampler: window must span at least 3 indices");
        if (cfg_.window_start < cfg_.min_window_start)
            throw WindowTouchesZero("sampler: window start " + std::to_string(cfg_.window_start) +
                                    " below the minimum " + std::to_string(cfg_.min_window_start) +
                                    " (tau = 0 is an absorbing state)");
        if (cfg_.window_end > n - 2)
            throw DelayTooLarge("sampler: window end exceeds N-2");
        if (n - cfg_.window_end < catalog_.size())
            throw DelayTooLarge("sampler: window end leaves N_eff = " +
                                std::to_string(n - cfg_.window_end) + " rows < K = " +
                                std::to_string(catalog_.size()));
    }

    const CandidateCatalog &catalog() const { return catalog_; }
    const SamplerConfig &config() const { return cfg_; }

    EvaluatedLibrary build_library(Eigen::Index tau) const {
        if (cfg_.constant_history)
            return evaluate_library_constant_history(data_, catalog_, tau, channel_, cfg_.boundary_trim);
        return evaluate_library(data_, catalog_, tau, channel_);
    }

    /// Per-index library statistics, cached for the run.
    const LibraryStats &stats_for(Eigen::Index tau) {
        auto it = stats_.find(tau);
        if (it != stats_.end()) return it->second;
        return stats_.emplace(tau, LibraryStats::from(build_library(tau))).first->second;
    }

    SamplerState init(Rng &rng) {
        SamplerState s;
        s.window_lo = cfg_.window_start;
        s.window_hi = cfg_.window_end;
        s.tau = rng.uniform_int(s.window_lo, s.window_hi);
        s.nu = cfg_.fixed_nu.value_or(0.5);
        s.p0 = cfg_.fixed_p0.value_or(0.1);
        const Eigen::Index w = s.window_hi - s.window_lo + 1;
        s.g = Eigen::VectorXd::Constant(w, 1.0 / static_cast<double>(w));
        s.dirichlet_alpha = Eigen::VectorXd::Constant(w, cfg_.hyper.dirichlet_alpha);

        // OLS warm start: threshold at 1% of the largest magnitude.
        const EvaluatedLibrary lib = build_library(s.tau);
        const Eigen::VectorXd ols =
            lib.matrix.colPivHouseholderQr().solve(lib.target);
        const double max_w = ols.cwiseAbs().maxCoeff();
        const Eigen::Index k = catalog_.size();
        s.z.assign(static_cast<std::size_t>(k), 0);
        s.theta = Eigen::VectorXd::Zero(k);
        s.clamped.assign(static_cast<std::size_t>(k), 0);
        const LibraryStats &stats = stats_for(s.tau);
        for (int zc : stats.zero_columns) {
            s.clamped[static_cast<std::size_t>(zc)] = 1;
            notices_.push_back("term '" + catalog_.names[static_cast<std::size_t>(zc)] +
                               "' is identically zero over the effective rows; clamped to excluded");
        }
        for (Eigen::Index i = 0; i < k; ++i) {
            if (s.clamped[static_cast<std::size_t>(i)]) continue;
            if (std::abs(ols[i]) >= 0.01 * max_w && max_w > 0.0) {
                s.z[static_cast<std::size_t>(i)] = 1;
                s.theta[i] = ols[i];
            }
        }
        s.sigma2 = (lib.target - lib.matrix * ols).squaredNorm() / static_cast<double>(lib.n_eff());
        if (s.sigma2 <= 0.0) s.sigma2 = 1e-12;
        return s;
    }

    /// Step 1: multinomial draw of the delay index over the current window,
    /// then Remark-2 window shrink / absorbing handling. Returns the
    /// normalized zeta over the pre-shrink window (diagnostic).
    Eigen::VectorXd sample_tau(SamplerState &s, Rng &rng, bool allow_absorbing_fix = true) {
        if (s.tau_fixed) return Eigen::VectorXd::Ones(1);
        const Eigen::Index lo = s.window_lo;
        const Eigen::Index hi = s.window_hi;
        Eigen::VectorXd logw(hi - lo + 1);
        for (Eigen::Index j = lo; j <= hi; ++j)
            logw[j - lo] =
                log_marginal_from_stats(stats_for(j), s.z, s.nu, cfg_.hyper, &diag_) + std::log(s.g[j - lo]);
        const Eigen::VectorXd zeta = normalize_log_weights(logw);
        const Eigen::Index pick = rng.categorical(zeta);
        s.tau = lo + pick;
        s.dirichlet_alpha[pick] += 1.0;  // the sampled index's concentration grows by one

        // shrink to the support where zeta exceeds the threshold
        Eigen::Index new_lo = lo + zeta.size();
        Eigen::Index new_hi = lo - 1;
        for (Eigen::Index i = 0; i < zeta.size(); ++i) {
            if (zeta[i] > cfg_.shrink_threshold) {
                new_lo = std::min(new_lo, lo + i);
                new_hi = std::max(new_hi, lo + i);
            }
        }
        new_lo = std::min(new_lo, s.tau);
        new_hi = std::max(new_hi, s.tau);
        if (new_lo != lo || new_hi != hi) {
            const Eigen::Index w = new_hi - new_lo + 1;
            s.g = s.g.segment(new_lo - lo, w).eval();
            s.g /= s.g.sum();
            s.dirichlet_alpha = s.dirichlet_alpha.segment(new_lo - lo, w).eval();
            s.window_lo = new_lo;
            s.window_hi = new_hi;
        }
        if (new_lo == new_hi) {
            s.tau = new_lo;  // window collapsed: converged
            s.tau_fixed = true;
        } else if (allow_absorbing_fix && zeta.maxCoeff() >= 1.0 - 1e-15) {
            s.tau_fixed = true;
        }
        return zeta;
    }

    /// Step 3: per-candidate Bernoulli flips using log marginal-likelihood
    /// ratios; mu_k = 1 / (1 + exp(log lambda_k + log(1-p0) - log p0)).
    void sample_Z(SamplerState &s, Rng &rng) {
        const LibraryStats &stats = stats_for(s.tau);
        const double lp0 = std::log(s.p0);
        const double l1mp0 = std::log1p(-s.p0);
        double cur_ll = log_marginal_from_stats(stats, s.z, s.nu, cfg_.hyper, &diag_);
        for (std::size_t k = 0; k < s.z.size(); ++k) {
            if (s.clamped[k]) continue;
            const std::uint8_t old = s.z[k];
            s.z[k] = old ? 0 : 1;
            double other_ll;
            try {
                other_ll = log_marginal_from_stats(stats, s.z, s.nu, cfg_.hyper, &diag_);
            } catch (const CholeskyFailure &) {
                s.z[k] = old;  // keep the previous value for this candidate
                notices_.push_back("Cholesky failure while flipping '" + catalog_.names[k] + "'; kept previous Z");
                continue;
            }
            const double ll1 = old ? cur_ll : other_ll;
            const double ll0 = old ? other_ll : cur_ll;
            const double a = (ll0 - ll1) + l1mp0 - lp0;  // log lambda_k + log((1-p0)/p0)
            double mu_k;
            if (a > 0) {
                const double e = std::exp(-a);
                mu_k = e / (1.0 + e);
            } else {
                mu_k = 1.0 / (1.0 + std::exp(a));
            }
            s.z[k] = rng.uniform() < mu_k ? 1 : 0;
            cur_ll = s.z[k] ? ll1 : ll0;
        }
    }

    std::pair<double, double> sigma2_posterior_params(const SamplerState &s) {
        const LibraryStats &stats = stats_for(s.tau);
        const GaussianPosteriorParams p = compute_posterior_params(stats, s.z, s.nu, &diag_);
        double q = stats.yty - p.quad;
        if (stats.yty > 0.0) diag_.min_q_ratio = std::min(diag_.min_q_ratio, q / stats.yty);
        if (q < 0.0) q = 0.0;
        return {cfg_.hyper.alpha_sigma + 0.5 * static_cast<double>(p.r() + stats.n_eff),
                cfg_.hyper.beta_sigma + 0.5 * q};
    }

    /// Step 4: sigma^2 | Y, L, Z, nu with theta marginalized out (the all-spike
    /// state must not be absorbing).
    void sample_sigma2(SamplerState &s, Rng &rng) {
        const auto [shape, scale] = sigma2_posterior_params(s);
        s.sigma2 = rng.inverse_gamma(shape, scale);
    }

    std::pair<double, double> nu_posterior_params(const SamplerState &s) const {
        double dot = 0.0;
        double r = 0.0;
        for (std::size_t k = 0; k < s.z.size(); ++k)
            if (s.z[k]) {
                dot += s.theta[static_cast<Eigen::Index>(k)] * s.theta[static_cast<Eigen::Index>(k)];
                r += 1.0;
            }
        return {cfg_.hyper.alpha_nu + 0.5 * r, cfg_.hyper.beta_nu + dot / (2.0 * s.sigma2)};
    }

    void sample_nu(SamplerState &s, Rng &rng) {
        if (cfg_.fixed_nu) {
            s.nu = *cfg_.fixed_nu;
            return;
        }
        const auto [shape, scale] = nu_posterior_params(s);
        s.nu = rng.inverse_gamma(shape, scale);
    }

    std::pair<double, double> p0_posterior_params(const SamplerState &s) const {
        const double h = static_cast<double>(s.active_count());
        return {cfg_.hyper.alpha_p + h,
                cfg_.hyper.beta_p + (static_cast<double>(catalog_.size()) - h)};
    }

    void sample_p0(SamplerState &s, Rng &rng) {
        if (cfg_.fixed_p0) {
            s.p0 = *cfg_.fixed_p0;
            return;
        }
        const auto [a, b] = p0_posterior_params(s);
        s.p0 = std::clamp(rng.beta(a, b), 1e-300, 1.0 - 1e-16);
    }

    void sample_G(SamplerState &s, Rng &rng) {
        if (cfg_.fixed_uniform_g) {
            s.g = Eigen::VectorXd::Constant(s.g.size(), 1.0 / static_cast<double>(s.g.size()));
            return;
        }
        s.g = rng.dirichlet(s.dirichlet_alpha);
    }

    /// Step 8: theta_r ~ N(mu, sigma^2 Sigma) via triangular solves of the
    /// Sigma^{-1} factor; spike entries stay exactly zero.
    void sample_theta(SamplerState &s, Rng &rng) {
        const LibraryStats &stats = stats_for(s.tau);
        const GaussianPosteriorParams p = compute_posterior_params(stats, s.z, s.nu, &diag_);
        s.theta = Eigen::VectorXd::Zero(catalog_.size());
        if (p.r() == 0) return;
        const Eigen::VectorXd u = rng.normal_vector(p.r());
        const Eigen::VectorXd dev =
            p.chol_lower.transpose().triangularView<Eigen::Upper>().solve(u);
        const Eigen::VectorXd theta_r = p.mu + std::sqrt(s.sigma2) * dev;
        for (Eigen::Index i = 0; i < p.r(); ++i)
            s.theta[p.active[static_cast<std::size_t>(i)]] = theta_r[i];
    }

    /// Runs the full schedule: burn-in for the first quarter, tau averaged
    /// over the second quarter (round-half-even) and frozen for the second
    /// half. Deterministic for a fixed seed.
    ChainRecord run_chain() {
        Rng rng(cfg_.seed);
        SamplerState s = init(rng);

        ChainRecord rec;
        rec.dt = data_.dt;
        rec.n_mc = cfg_.n_mc;
        rec.burn_in_end = cfg_.n_mc / 4;
        rec.tau_freeze_iteration = cfg_.n_mc / 2;
        rec.catalog_names = catalog_.names;
        rec.iterations.reserve(static_cast<std::size_t>(cfg_.n_mc));

        for (int t = 0; t < cfg_.n_mc; ++t) {
            try {
                if (cfg_.freeze_tau_schedule && t == rec.tau_freeze_iteration && !s.tau_fixed) {
                    double sum = 0.0;
                    for (int i = rec.burn_in_end; i < rec.tau_freeze_iteration; ++i)
                        sum += static_cast<double>(rec.iterations[static_cast<std::size_t>(i)].tau);
                    const double avg = sum / static_cast<double>(rec.tau_freeze_iteration - rec.burn_in_end);
                    s.tau = static_cast<Eigen::Index>(std::nearbyint(avg));  // round half to even
                    s.tau_fixed = true;
                }
                const bool tau_phase = !cfg_.freeze_tau_schedule || t < rec.tau_freeze_iteration;
                if (!s.tau_fixed && tau_phase) {
                    const bool was_fixed = s.tau_fixed;
                    sample_tau(s, rng, /*allow_absorbing_fix=*/t < rec.burn_in_end);
                    if (!was_fixed && s.tau_fixed && !rec.tau_fixed_iteration)
                        rec.tau_fixed_iteration = t;
                }
                stats_for(s.tau);  // step 2: library refresh for the sampled index
                sample_Z(s, rng);
                sample_sigma2(s, rng);
                sample_nu(s, rng);
                sample_p0(s, rng);
                sample_G(s, rng);
                sample_theta(s, rng);
            } catch (const Error &e) {
                throw Error("iteration " + std::to_string(t) + ": " + e.what());
            }
            rec.iterations.push_back({s.tau, s.z, s.theta, s.sigma2, s.nu, s.p0, s.window_lo, s.window_hi});
        }
        rec.frozen_tau = s.tau;
        rec.min_q_ratio = std::isfinite(diag_.min_q_ratio) ? diag_.min_q_ratio : 0.0;
        rec.cholesky_jitter_count = diag_.jitter_count;
        rec.notices = notices_;
        return rec;
    }

  private:
    TrajectoryData data_;
    CandidateCatalog catalog_;
    Eigen::Index channel_;
    SamplerConfig cfg_;
    std::unordered_map<Eigen::Index, LibraryStats> stats_;
    detail::NumericsDiag diag_;
    std::vector<std::string> notices_;
};

} // namespace sparsedde

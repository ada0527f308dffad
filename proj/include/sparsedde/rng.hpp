#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace sparsedde {

/// SplitMix64 step; used to derive independent sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for sub-stream `stream` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

/// Seeded random source with hand-rolled distributions.
///
/// std::mt19937_64 output is pinned by the standard, but the std::*_distribution
/// algorithms are implementation-defined, so every draw here is built from raw
/// 64-bit words. Identical seeds give bit-identical streams on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_word() { return engine_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] inclusive, by rejection (unbiased).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return lo + static_cast<std::int64_t>(engine_()); // full 2^64 span
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % range + 1) % range;
        std::uint64_t x = engine_();
        while (x > limit) x = engine_();
        return lo + static_cast<std::int64_t>(x % range);
    }

    /// Standard normal via one-shot Box-Muller (the sine sibling is discarded
    /// so a draw always consumes exactly two words).
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    /// Gamma(shape, scale=1), Marsaglia-Tsang; shape < 1 boosted via the
    /// u^{1/shape} identity.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Inverse-Gamma(shape, scale): if X ~ IG then 1/X ~ Gamma(shape, rate=scale).
    double inverse_gamma(double shape, double scale) { return scale / gamma(shape); }

    double beta(double a, double b) {
        const double ga = gamma(a);
        const double gb = gamma(b);
        const double s = ga + gb;
        if (s <= 0.0) return 0.5; // both underflowed; a,b astronomically small
        return ga / s;
    }

    /// Dirichlet over `alpha`; entries >= 0 and renormalized to sum to 1.
    Eigen::VectorXd dirichlet(const Eigen::VectorXd &alpha) {
        Eigen::VectorXd g(alpha.size());
        for (Eigen::Index i = 0; i < alpha.size(); ++i) g[i] = gamma(alpha[i]);
        const double s = g.sum();
        if (s <= 0.0) return Eigen::VectorXd::Constant(alpha.size(), 1.0 / static_cast<double>(alpha.size()));
        return g / s;
    }

    /// One categorical draw from (unnormalized, non-negative) weights.
    Eigen::Index categorical(const Eigen::VectorXd &weights) {
        const double total = weights.sum();
        const double u = uniform() * total;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace sparsedde

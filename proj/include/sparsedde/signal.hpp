#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sparsedde/errors.hpp"
#include "sparsedde/rng.hpp"
#include "sparsedde/trajectory.hpp"

namespace sparsedde {

struct NoiseSpec {
    double fraction = 0.0;   // noise std as a fraction of each channel's sample std
    std::uint64_t seed = 0;
};

struct FilterSpec {
    int order = 4;
    double cutoff = 0.1;     // normalized to Nyquist, in (0, 1)
    bool enabled = true;
};

/// Adds i.i.d. zero-mean Gaussian noise per channel, std = fraction * sample
/// std of that channel. Channel j uses sub-stream derive_seed(seed, j), so the
/// result does not depend on channel processing order.
inline TrajectoryData add_noise(const TrajectoryData &data, const NoiseSpec &spec) {
    if (spec.fraction < 0.0) throw Error("add_noise: fraction must be >= 0");
    TrajectoryData out = data;
    if (spec.fraction == 0.0) return out;
    const Eigen::Index n = data.n();
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
        const double mean = data.states.col(j).mean();
        const double ssq = (data.states.col(j).array() - mean).square().sum();
        const double sd = std::sqrt(ssq / static_cast<double>(n - 1));
        const double noise_sd = spec.fraction * sd;
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(j)));
        for (Eigen::Index i = 0; i < n; ++i) out.states(i, j) += noise_sd * rng.normal();
    }
    return out;
}

/// First derivatives by 5-point finite differences (exact for degree <= 4).
///
/// Interior:      (x[i-2] - 8 x[i-1] + 8 x[i+1] - x[i+2]) / (12 dt)
/// i = 0:         (-25 x0 + 48 x1 - 36 x2 + 16 x3 - 3 x4) / (12 dt)
/// i = 1:         (-3 x0 - 10 x1 + 18 x2 - 6 x3 + x4) / (12 dt)
/// and mirrored (sign-flipped, reversed) stencils at the right edge.
inline TrajectoryData differentiate(const TrajectoryData &data) {
    const Eigen::Index n = data.n();
    if (n < 7) throw TooShort("differentiate: need at least 7 samples");
    const double h12 = 12.0 * data.dt;
    TrajectoryData out = data;
    Eigen::MatrixXd d(n, data.dim());
    const auto &x = data.states;
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
        d(0, j) = (-25 * x(0, j) + 48 * x(1, j) - 36 * x(2, j) + 16 * x(3, j) - 3 * x(4, j)) / h12;
        d(1, j) = (-3 * x(0, j) - 10 * x(1, j) + 18 * x(2, j) - 6 * x(3, j) + x(4, j)) / h12;
        for (Eigen::Index i = 2; i < n - 2; ++i)
            d(i, j) = (x(i - 2, j) - 8 * x(i - 1, j) + 8 * x(i + 1, j) - x(i + 2, j)) / h12;
        d(n - 2, j) = (-x(n - 5, j) + 6 * x(n - 4, j) - 18 * x(n - 3, j) + 10 * x(n - 2, j) + 3 * x(n - 1, j)) / h12;
        d(n - 1, j) = (3 * x(n - 5, j) - 16 * x(n - 4, j) + 36 * x(n - 3, j) - 48 * x(n - 2, j) + 25 * x(n - 1, j)) / h12;
    }
    out.derivatives = std::move(d);
    return out;
}

namespace detail {

/// One second-order section, transfer (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
    double b0, b1, b2, a1, a2;
};

/// Low-pass Butterworth as unity-DC-gain biquads: analog prototype poles on
/// the unit circle, cutoff pre-warped for the bilinear transform.
inline std::vector<Biquad> butterworth_sos(int order, double cutoff) {
    const double warped = std::tan(M_PI * cutoff / 2.0);
    std::vector<Biquad> sections;
    for (int k = 1; 2 * k <= order; ++k) {
        const double angle = M_PI * (2.0 * k + order - 1.0) / (2.0 * order);
        const std::complex<double> s = warped * std::exp(std::complex<double>(0.0, angle));
        const std::complex<double> z = (1.0 + s) / (1.0 - s);
        const double a1 = -2.0 * z.real();
        const double a2 = std::norm(z);
        const double b0 = (1.0 + a1 + a2) / 4.0;
        sections.push_back({b0, 2.0 * b0, b0, a1, a2});
    }
    if (order % 2 == 1) {
        const double z = (1.0 - warped) / (1.0 + warped);  // real pole
        const double a1 = -z;
        const double b0 = (1.0 + a1) / 2.0;
        sections.push_back({b0, b0, 0.0, a1, 0.0});
    }
    return sections;
}

/// Steady-state DF2T initial conditions for a unit-amplitude constant input;
/// scaled by the actual first sample before each pass (lfilter_zi style), so a
/// constant signal passes through exactly.
inline std::pair<double, double> section_zi(const Biquad &s) {
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    return {dc - s.b0, s.b2 - s.a2 * dc};
}

inline void run_section(const Biquad &s, std::vector<double> &x) {
    auto [z1, z2] = section_zi(s);
    z1 *= x[0];
    z2 *= x[0];
    for (double &v : x) {
        const double y = s.b0 * v + z1;
        z1 = s.b1 * v - s.a1 * y + z2;
        z2 = s.b2 * v - s.a2 * y;
        v = y;
    }
}

inline void filtfilt_channel(const std::vector<Biquad> &sections, std::vector<double> &x, int pad) {
    const std::size_t n = x.size();
    std::vector<double> ext;
    ext.reserve(n + 2 * static_cast<std::size_t>(pad));
    for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[static_cast<std::size_t>(i)]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (int i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - static_cast<std::size_t>(i)]);

    for (const auto &s : sections) run_section(s, ext);
    std::reverse(ext.begin(), ext.end());
    for (const auto &s : sections) run_section(s, ext);
    std::reverse(ext.begin(), ext.end());

    for (std::size_t i = 0; i < n; ++i) x[i] = ext[static_cast<std::size_t>(pad) + i];
}

} // namespace detail

/// Zero-phase low-pass Butterworth: bilinear-transform design, applied
/// forward then backward with odd-reflection padding of length 3 * order.
inline TrajectoryData butterworth_zero_phase(const TrajectoryData &data, const FilterSpec &spec) {
    if (!spec.enabled) return data;
    if (!(spec.cutoff > 0.0 && spec.cutoff < 1.0))
        throw CutoffOutOfRange("butterworth: cutoff must lie in (0, 1) as a fraction of Nyquist");
    if (spec.order < 1) throw Error("butterworth: order must be >= 1");
    const int pad = 3 * spec.order;
    if (data.n() <= 3 * spec.order)
        throw TooShort("butterworth: need more than 3*order samples");

    const auto sections = detail::butterworth_sos(spec.order, spec.cutoff);
    TrajectoryData out = data;
    std::vector<double> chan(static_cast<std::size_t>(data.n()));
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
        for (Eigen::Index i = 0; i < data.n(); ++i) chan[static_cast<std::size_t>(i)] = data.states(i, j);
        detail::filtfilt_channel(sections, chan, pad);
        for (Eigen::Index i = 0; i < data.n(); ++i) out.states(i, j) = chan[static_cast<std::size_t>(i)];
    }
    return out;
}

} // namespace sparsedde

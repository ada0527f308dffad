#pragma once

// Test-only closed-form CDFs and a KS statistic, independent of the library
// code under test. Incomplete gamma/beta via the classic series + continued
// fraction evaluations.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace testsupport {

// regularized lower incomplete gamma P(a, x)
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // series
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    // continued fraction for Q(a, x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    const double q = std::exp(-x + a * std::log(x) - gln) * h;
    return 1.0 - q;
}

inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h;
}

// regularized incomplete beta I_x(a, b)
inline double beta_inc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                               b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

inline double beta_cdf(double x, double a, double b) { return beta_inc(a, b, x); }

// X ~ InverseGamma(shape, scale): F(x) = Q(shape, scale / x)
inline double inverse_gamma_cdf(double x, double shape, double scale) {
    if (x <= 0.0) return 0.0;
    return 1.0 - gamma_p(shape, scale / x);
}

// two-sided KS statistic of samples against a CDF
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf &&cdf) {
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// critical value at significance alpha = 0.01 (asymptotic)
inline double ks_critical_01(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

} // namespace testsupport

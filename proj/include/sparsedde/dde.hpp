#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sparsedde/errors.hpp"
#include "sparsedde/model.hpp"
#include "sparsedde/trajectory.hpp"

namespace sparsedde {

inline constexpr double kOverflowBound = 1e12;

namespace detail {

/// Delayed-state lookup on the partially computed solution grid.
///
/// `pos` is the lag target in index units (may be fractional). Values at
/// t <= 0 come from the constant history; values exactly on a stored grid
/// point are returned verbatim; everything else is cubic Hermite on the
/// bracketing segment using the stored node states and node derivatives.
struct DelayedLookup {
    const Eigen::MatrixXd &states;
    const Eigen::MatrixXd &derivs;
    const Eigen::VectorXd &history;
    double dt;

    Eigen::VectorXd operator()(double pos) const {
        if (pos <= 0.0) return history;
        const double nearest = std::nearbyint(pos);
        if (std::abs(pos - nearest) < 1e-9)
            return states.row(static_cast<Eigen::Index>(nearest)).transpose();
        const auto j = static_cast<Eigen::Index>(std::floor(pos));
        const double a = pos - static_cast<double>(j);
        const double a2 = a * a;
        const double a3 = a2 * a;
        const double h00 = 2 * a3 - 3 * a2 + 1;
        const double h10 = a3 - 2 * a2 + a;
        const double h01 = -2 * a3 + 3 * a2;
        const double h11 = a3 - a2;
        return h00 * states.row(j).transpose() + h01 * states.row(j + 1).transpose() +
               dt * (h10 * derivs.row(j).transpose() + h11 * derivs.row(j + 1).transpose());
    }
};

inline void check_bounded(const Eigen::VectorXd &x, double t, double bound) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > bound)
        throw Diverged("state exceeded overflow bound at t = " + format_double(t), t);
}

} // namespace detail

/// Integrates a constant-delay model forward from a constant history.
///
/// Method of steps with classical 4-stage Runge-Kutta, internal step equal to
/// the output dt. x(t) = history for all t <= 0. Requires delay == 0 or
/// delay >= dt so that every stage's lag target lies on the already-computed
/// part of the grid. Deterministic: identical inputs give bit-identical output.
inline TrajectoryData simulate(const SparseDelayModel &model, const Eigen::VectorXd &history,
                               double t_end, double dt, double overflow_bound = kOverflowBound) {
    model.validate();
    if (history.size() != model.m) throw Error("simulate: history size != m");
    if (!(dt > 0.0)) throw Error("simulate: dt must be > 0");
    if (!(t_end > 0.0)) throw Error("simulate: t_end must be > 0");
    if (model.delay != 0.0 && model.delay < dt) throw Error("simulate: delay must be 0 or >= dt");

    const auto n_steps = static_cast<Eigen::Index>(std::llround(t_end / dt));
    if (n_steps < 1) throw Error("simulate: t_end shorter than one step");
    const Eigen::Index n = n_steps + 1;
    const double lag = model.delay / dt;  // lag in index units

    TrajectoryData out;
    out.dt = dt;
    out.t0 = 0.0;
    out.states.resize(n, model.m);
    Eigen::MatrixXd derivs(n, model.m);
    out.states.row(0) = history.transpose();

    const detail::DelayedLookup delayed{out.states, derivs, history, dt};
    const bool no_delay = model.delay == 0.0;

    for (Eigen::Index i = 0; i < n_steps; ++i) {
        const double fi = static_cast<double>(i);
        const Eigen::VectorXd xi = out.states.row(i).transpose();
        const Eigen::VectorXd k1 = rhs(model, xi, no_delay ? xi : delayed(fi - lag));
        derivs.row(i) = k1.transpose();

        const Eigen::VectorXd x2 = xi + 0.5 * dt * k1;
        const Eigen::VectorXd k2 = rhs(model, x2, no_delay ? x2 : delayed(fi + 0.5 - lag));
        const Eigen::VectorXd x3 = xi + 0.5 * dt * k2;
        const Eigen::VectorXd k3 = rhs(model, x3, no_delay ? x3 : delayed(fi + 0.5 - lag));
        const Eigen::VectorXd x4 = xi + dt * k3;
        const Eigen::VectorXd k4 = rhs(model, x4, no_delay ? x4 : delayed(fi + 1.0 - lag));

        out.states.row(i + 1) = (xi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).transpose();
        detail::check_bounded(out.states.row(i + 1).transpose(), (fi + 1.0) * dt, overflow_bound);
    }
    {
        const Eigen::VectorXd xn = out.states.row(n - 1).transpose();
        derivs.row(n - 1) =
            rhs(model, xn, no_delay ? xn : delayed(static_cast<double>(n - 1) - lag)).transpose();
    }
    out.derivatives = std::move(derivs);
    return out;
}

} // namespace sparsedde

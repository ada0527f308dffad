#include <gtest/gtest.h>

#include <cmath>

#include "sparsedde/dde.hpp"
#include "sparsedde/rng.hpp"
#include "support/oracles.hpp"

using namespace sparsedde;

namespace {

SparseDelayModel decay_model() {
    // xdot = -x_tau, delay 1
    SparseDelayModel m;
    m.m = 1;
    m.delay = 1.0;
    m.equations = {{{parse_term("x1_tau"), -1.0, 0.0}}};
    return m;
}

Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x[0] = v;
    return x;
}

} // namespace

TEST(DdeOracle, SelfCheck) {
    // exact piecewise polynomial of the method of steps
    EXPECT_DOUBLE_EQ(testsupport::decay_dde_exact(0.5), 0.5);
    EXPECT_NEAR(testsupport::decay_dde_exact(1.0), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(testsupport::decay_dde_exact(1.5), -0.375);
    EXPECT_DOUBLE_EQ(testsupport::decay_dde_exact(2.0), -0.5);
}

TEST(Simulate, MatchesPiecewiseAnalyticSolution) {
    const auto traj = simulate(decay_model(), vec1(1.0), 5.0, 0.01);
    EXPECT_NEAR(traj.states(50, 0), 0.5, 1e-6);
    EXPECT_NEAR(traj.states(150, 0), -0.375, 1e-6);
    double max_err = 0.0;
    for (Eigen::Index i = 0; i < traj.n(); ++i)
        max_err = std::max(max_err, std::abs(traj.states(i, 0) - testsupport::decay_dde_exact(traj.time(i))));
    EXPECT_LE(max_err, 1e-6);
}

TEST(Simulate, FourthOrderConvergence) {
    auto max_err = [](double dt) {
        const auto traj = simulate(decay_model(), vec1(1.0), 5.0, dt);
        double err = 0.0;
        for (Eigen::Index i = 0; i < traj.n(); ++i)
            err = std::max(err, std::abs(traj.states(i, 0) - testsupport::decay_dde_exact(traj.time(i))));
        return err;
    };
    const double e_coarse = max_err(0.02);
    const double e_fine = max_err(0.01);
    EXPECT_GE(e_coarse / e_fine, 12.0);  // ~16 for a 4th-order method
}

TEST(Simulate, ZeroDynamicsStaysConstant) {
    SparseDelayModel m;
    m.m = 1;
    m.delay = 0.0;
    m.equations = {{}};
    const auto traj = simulate(m, vec1(3.0), 2.0, 0.1);
    for (Eigen::Index i = 0; i < traj.n(); ++i) EXPECT_DOUBLE_EQ(traj.states(i, 0), 3.0);
}

TEST(Simulate, GridAlignedDelayedValueIsExact) {
    // with delay = 100 dt, the node-stage lookup must be the stored row verbatim:
    // deriv(i) = -x(i - 100) exactly
    const auto traj = simulate(decay_model(), vec1(1.0), 3.0, 0.01);
    ASSERT_TRUE(traj.derivatives.has_value());
    for (Eigen::Index i = 100; i < traj.n(); ++i)
        EXPECT_EQ((*traj.derivatives)(i, 0), -traj.states(i - 100, 0));
}

TEST(Simulate, Deterministic) {
    const auto a = simulate(decay_model(), vec1(1.0), 4.0, 0.01);
    const auto b = simulate(decay_model(), vec1(1.0), 4.0, 0.01);
    EXPECT_TRUE(a.states == b.states);
    EXPECT_TRUE(*a.derivatives == *b.derivatives);
}

TEST(Simulate, DivergenceIsReportedCleanly) {
    // xdot = x * x_tau with zero delay is xdot = x^2: finite-time blow-up from x0 = 2
    SparseDelayModel m;
    m.m = 1;
    m.delay = 0.0;
    m.equations = {{{parse_term("x1*x1_tau"), 1.0, 0.0}}};
    try {
        simulate(m, vec1(2.0), 2.0, 0.001);
        FAIL() << "expected Diverged";
    } catch (const Diverged &e) {
        EXPECT_GT(e.time_of_divergence, 0.0);
        EXPECT_LT(e.time_of_divergence, 1.0);
    }
}

TEST(Simulate, RejectsSubStepDelay) {
    auto m = decay_model();
    m.delay = 0.005;
    EXPECT_THROW(simulate(m, vec1(1.0), 1.0, 0.01), Error);
}

TEST(Simulate, OffGridDelayRuns) {
    auto m = decay_model();
    m.delay = 0.995;  // 99.5 steps
    const auto traj = simulate(m, vec1(1.0), 3.0, 0.01);
    // close to the delay-1 solution but not equal
    EXPECT_NEAR(traj.states(50, 0), 0.5, 1e-2);
}

TEST(Rhs, PaperExamples) {
    // exponential system: 10 e^{-x_tau} - x at x = x_tau = 1
    SparseDelayModel expm;
    expm.m = 1;
    expm.delay = 1.0;
    expm.equations = {{{parse_term("exp(-x1_tau)"), 10.0, 0.0}, {parse_term("x1"), -1.0, 0.0}}};
    EXPECT_NEAR(rhs(expm, vec1(1.0), vec1(1.0))[0], 10.0 * std::exp(-1.0) - 1.0, 1e-12);
    EXPECT_NEAR(rhs(expm, vec1(1.0), vec1(1.0))[0], 2.6787944117144233, 1e-12);

    SparseDelayModel sprott;
    sprott.m = 1;
    sprott.delay = 3.0;
    sprott.equations = {{{parse_term("sin(x1_tau)"), 1.0, 0.0}}};
    EXPECT_DOUBLE_EQ(rhs(sprott, vec1(5.0), vec1(0.0))[0], 0.0);

    SparseDelayModel mg;
    mg.m = 1;
    mg.delay = 40.0;
    mg.equations = {{{parse_term("x1"), -0.1, 0.0}, {parse_term("hill(x1_tau,10)"), 0.2, 0.0}}};
    EXPECT_NEAR(rhs(mg, vec1(1.0), vec1(1.0))[0], 0.0, 1e-15);
}

TEST(Rhs, LinearInCoefficients) {
    Rng rng(7);
    const std::vector<std::string> names = {"x1", "x1_tau", "sin(x1)", "exp(-x1_tau)", "x1^2"};
    for (int trial = 0; trial < 20; ++trial) {
        const double a = rng.normal();
        const double b = rng.normal();
        SparseDelayModel m1, m2, mc;
        for (auto *m : {&m1, &m2, &mc}) {
            m->m = 1;
            m->delay = 1.0;
            m->equations.resize(1);
        }
        for (const auto &n : names) {
            const double t1 = rng.normal();
            const double t2 = rng.normal();
            m1.equations[0].push_back({parse_term(n), t1, 0.0});
            m2.equations[0].push_back({parse_term(n), t2, 0.0});
            mc.equations[0].push_back({parse_term(n), a * t1 + b * t2, 0.0});
        }
        const Eigen::VectorXd x = vec1(rng.normal());
        const Eigen::VectorXd xt = vec1(rng.normal());
        const double lhs = rhs(mc, x, xt)[0];
        const double rhs_v = a * rhs(m1, x, xt)[0] + b * rhs(m2, x, xt)[0];
        EXPECT_NEAR(lhs, rhs_v, 1e-10 * (1.0 + std::abs(lhs)));
    }
}

TEST(Render, ReadableEquation) {
    SparseDelayModel m;
    m.m = 1;
    m.delay = 0.99;
    m.equations = {{{parse_term("exp(-x1_tau)"), 9.78, 0.26}, {parse_term("x1"), -0.99, 0.13}}};
    const std::string txt = render_equations(m);
    EXPECT_NE(txt.find("dx1/dt = 9.78*exp(-x1_tau) - 0.99*x1"), std::string::npos);
    EXPECT_NE(txt.find("tau = 0.99"), std::string::npos);
}

TEST(ModelJson, RoundTrip) {
    SparseDelayModel m;
    m.m = 2;
    m.delay = 1.25;
    m.equations = {{{parse_term("x1_tau"), -1.0, 0.1}},
                   {{parse_term("x1"), 1.0, 0.2}, {parse_term("x2_tau"), -1.0, 0.0}}};
    const auto j = model_to_json(m);
    const auto back = model_from_json(j);
    EXPECT_EQ(back.m, 2);
    EXPECT_DOUBLE_EQ(back.delay, 1.25);
    ASSERT_EQ(back.equations[1].size(), 2u);
    EXPECT_EQ(term_name(back.equations[1][1].term), "x2_tau");
    EXPECT_DOUBLE_EQ(back.equations[0][0].coefficient, -1.0);
    EXPECT_DOUBLE_EQ(back.equations[0][0].coefficient_sd, 0.1);
}

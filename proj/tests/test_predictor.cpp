#include <gtest/gtest.h>

#include <cmath>

#include "sparsedde/predictor.hpp"

using namespace sparsedde;

namespace {

SparseDelayModel decay_model() {
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

ChainRecord constant_chain(int n_mc, double dt, Eigen::Index tau, const std::vector<double> &theta,
                           const std::vector<std::uint8_t> &z) {
    ChainRecord c;
    c.dt = dt;
    c.n_mc = n_mc;
    c.burn_in_end = n_mc / 4;
    c.tau_freeze_iteration = n_mc / 2;
    c.frozen_tau = tau;
    c.catalog_names = {"x1_tau", "x1"};
    for (int t = 0; t < n_mc; ++t) {
        IterationRecord it;
        it.tau = tau;
        it.z = z;
        it.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
        it.sigma2 = 0.01;
        it.nu = 0.5;
        it.p0 = 0.5;
        it.window_lo = tau;
        it.window_hi = tau;
        c.iterations.push_back(it);
    }
    return c;
}

} // namespace

TEST(Predict, SameCodePathAsSimulate) {
    const auto a = predict(decay_model(), vec1(1.0), 5.0, 0.01);
    const auto b = simulate(decay_model(), vec1(1.0), 5.0, 0.01);
    EXPECT_TRUE(a.states == b.states);
}

TEST(PredictWithUncertainty, DegenerateChainGivesZeroWidthBand) {
    // every iterate identical -> band width zero and equal to the trajectory
    const auto chain = constant_chain(200, 0.05, 20, {-1.0, 0.0}, {1, 0});
    const auto cat = CandidateCatalog::from_strings(chain.catalog_names);
    const auto band = predict_with_uncertainty({chain}, cat, vec1(1.0), 3.0, 0.05, 50, 9);
    EXPECT_EQ(band.n_used, 50);
    EXPECT_EQ(band.n_diverged, 0);
    for (Eigen::Index i = 0; i < band.t.size(); ++i) {
        EXPECT_DOUBLE_EQ(band.lo95(i, 0), band.hi95(i, 0));
        EXPECT_NEAR(band.lo95(i, 0), band.mean(i, 0), 1e-12);  // mean averages identical draws
    }
    // matches the plain simulation of the same model
    SparseDelayModel m;
    m.m = 1;
    m.delay = 1.0;  // 20 * 0.05
    m.equations = {{{parse_term("x1_tau"), -1.0, 0.0}}};
    const auto traj = simulate(m, vec1(1.0), 3.0, 0.05);
    for (Eigen::Index i = 0; i < band.t.size(); ++i)
        EXPECT_DOUBLE_EQ(band.lo95(i, 0), traj.states(i, 0));
}

TEST(PredictWithUncertainty, SingleDrawDegeneratesToTrajectory) {
    const auto chain = constant_chain(100, 0.05, 20, {-1.0, 0.0}, {1, 0});
    const auto cat = CandidateCatalog::from_strings(chain.catalog_names);
    const auto band = predict_with_uncertainty({chain}, cat, vec1(1.0), 2.0, 0.05, 1, 4);
    EXPECT_EQ(band.n_used, 1);
    for (Eigen::Index i = 0; i < band.t.size(); ++i) {
        EXPECT_DOUBLE_EQ(band.lo95(i, 0), band.hi95(i, 0));
        EXPECT_NEAR(band.mean(i, 0), band.lo95(i, 0), 1e-12);
    }
}

TEST(PredictWithUncertainty, BandContainsMeanAndStartsNarrow) {
    // mix of two coefficient values: band must bracket the mean pointwise
    auto chain = constant_chain(400, 0.05, 20, {-1.0, 0.0}, {1, 0});
    for (int t = 200; t < 400; t += 2)
        chain.iterations[static_cast<std::size_t>(t)].theta[0] = -1.1;
    const auto cat = CandidateCatalog::from_strings(chain.catalog_names);
    const auto band = predict_with_uncertainty({chain}, cat, vec1(1.0), 3.0, 0.05, 80, 12);
    for (Eigen::Index i = 0; i < band.t.size(); ++i) {
        EXPECT_LE(band.lo95(i, 0), band.mean(i, 0) + 1e-12);
        EXPECT_GE(band.hi95(i, 0), band.mean(i, 0) - 1e-12);
    }
    // all trajectories share the constant history: zero width at t = 0
    EXPECT_DOUBLE_EQ(band.lo95(0, 0), band.hi95(0, 0));
    // later the two coefficient populations separate
    EXPECT_GT(band.hi95(band.t.size() - 1, 0) - band.lo95(band.t.size() - 1, 0), 0.0);
}

TEST(PredictWithUncertainty, DivergedDrawsExcludedAndCounted) {
    auto chain = constant_chain(400, 0.05, 20, {-1.0, 0.0}, {1, 0});
    // poison half the final-half iterates with an explosive model: xdot = +40 x
    for (int t = 200; t < 400; t += 2) {
        chain.iterations[static_cast<std::size_t>(t)].z = {0, 1};
        chain.iterations[static_cast<std::size_t>(t)].theta = Eigen::Vector2d(0.0, 40.0);
    }
    const auto cat = CandidateCatalog::from_strings(chain.catalog_names);
    const auto band = predict_with_uncertainty({chain}, cat, vec1(1.0), 3.0, 0.05, 60, 21);
    EXPECT_GT(band.n_diverged, 0);
    EXPECT_EQ(band.n_used + band.n_diverged, 60);

    // all draws explosive -> AllDrawsDiverged
    for (auto &it : chain.iterations) {
        it.z = {0, 1};
        it.theta = Eigen::Vector2d(0.0, 40.0);
    }
    EXPECT_THROW(predict_with_uncertainty({chain}, cat, vec1(1.0), 3.0, 0.05, 10, 2), AllDrawsDiverged);
}

TEST(PhasePortrait, ConstantTrajectoryDegeneratesToOnePoint) {
    TrajectoryData t;
    t.dt = 0.1;
    t.states = Eigen::MatrixXd::Constant(50, 1, 2.0);
    const auto pts = phase_portrait(t, 1.0);
    ASSERT_FALSE(pts.empty());
    for (const auto &[x, xd] : pts) {
        EXPECT_DOUBLE_EQ(x, 2.0);
        EXPECT_DOUBLE_EQ(xd, 2.0);
    }
}

TEST(PhasePortrait, GridLookupIsExact) {
    const auto traj = simulate(decay_model(), vec1(1.0), 5.0, 0.01);
    const auto pts = phase_portrait(traj, 1.0);
    ASSERT_EQ(static_cast<Eigen::Index>(pts.size()), traj.n() - 100);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Eigen::Index row = static_cast<Eigen::Index>(i) + 100;
        EXPECT_EQ(pts[i].first, traj.states(row, 0));
        EXPECT_EQ(pts[i].second, traj.states(row - 100, 0));
    }
}

TEST(PhasePortrait, DecayingOscillationSpiralsInward) {
    // xdot = -x_tau decays with oscillation period ~ 4.7; the phase radius
    // envelope must shrink window over window
    const auto traj = simulate(decay_model(), vec1(1.0), 40.0, 0.01);
    const auto pts = phase_portrait(traj, 1.0);
    const std::size_t per_window = 800;  // ~two revolutions at dt = 0.01
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t start = 0; start + per_window <= pts.size(); start += per_window) {
        double rmax = 0.0;
        for (std::size_t i = start; i < start + per_window; ++i)
            rmax = std::max(rmax, std::hypot(pts[i].first, pts[i].second));
        EXPECT_LT(rmax, prev);
        prev = rmax;
    }
}

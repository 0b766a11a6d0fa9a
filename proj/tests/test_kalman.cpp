#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qotsync/kalman.hpp"

using namespace qotsync;

TEST(MeasureFo, Examples) {
    EXPECT_EQ(measure_fo({0, 0.0, 0.0}, {1, 1.0, 1.0}), 0.0);
    EXPECT_NEAR(measure_fo({0, 0.0, 0.0}, {1, 1.0, 1.0001}), -9.999e-5, 1e-12);
    EXPECT_EQ(measure_fo({0, 0.0, 0.0}, {1, 2.0, 1.0}), 1.0);
}

TEST(MeasureFo, Errors) {
    EXPECT_THROW(measure_fo({1, 0.0, 0.0}, {1, 1.0, 1.0}), OutOfOrderError);
    EXPECT_THROW(measure_fo({0, 0.0, 1.0}, {1, 1.0, 1.0}), DegenerateIntervalError);
}

TEST(KalmanPredict, Examples) {
    KalmanState s{0.5, 1.0, 0.0, 1.0, {}};
    auto [x, p] = kalman_predict(s);
    EXPECT_EQ(x, 0.5);
    EXPECT_EQ(p, 1.0);
    const auto grown = kalman_predict({0.0, 1.0, 0.5, 1.0, {}});
    EXPECT_EQ(grown.x_prior, 0.0);
    EXPECT_EQ(grown.p_prior, 1.5);
}

TEST(KalmanPredict, AccumulatesQ) {
    KalmanState s{0.0, 0.25, 0.125, 1.0, {}};
    for (int i = 1; i <= 20; ++i) {
        s.p = kalman_predict(s).p_prior;
        EXPECT_EQ(s.p, 0.25 + 0.125 * i);
    }
}

TEST(KalmanGain, Examples) {
    EXPECT_EQ(kalman_gain(0.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(kalman_gain(1.5, 2.0), 3.0 / 7.0);
    EXPECT_GT(kalman_gain(1e12, 1.0), 0.999999);
    EXPECT_THROW(kalman_gain(1.0, 0.0), ConfigError);
}

TEST(KalmanUpdate, ExactRationals) {
    const auto s = kalman_update({0.0, 1.0, 0.5, 2.0, {}}, 1.0);
    EXPECT_DOUBLE_EQ(s.x_hat, 3.0 / 7.0);
    EXPECT_DOUBLE_EQ(s.p, 6.0 / 7.0);
    oracle::MatrixKalman m(0.5, 2.0, 0.0, 1.0);
    m.step(1.0);
    EXPECT_DOUBLE_EQ(m.x(0, 0), s.x_hat);
    EXPECT_DOUBLE_EQ(m.P(0, 0), s.p);
}

TEST(KalmanUpdate, AgreeingMeasurementLeavesEstimate) {
    const KalmanState in{0.2, 1.0, 0.5, 2.0, {}};
    const auto s = kalman_update(in, 0.2);
    EXPECT_EQ(s.x_hat, 0.2);
    EXPECT_DOUBLE_EQ(s.p, (1.0 - kalman_gain(1.5, 2.0)) * 1.5);
}

TEST(KalmanUpdate, MatchesMatrixOracleOverRandomSteps) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> z(-1e-5, 1e-5);
    const double q = 3e-14, r = 7e-12;
    KalmanState s{0.0, r, q, r, {}};
    oracle::MatrixKalman m(q, r, 0.0, r);
    for (int i = 0; i < 1000; ++i) {
        const double zi = z(rng);
        const auto prior = kalman_predict(s);
        s = kalman_update(s, zi);
        m.step(zi);
        ASSERT_NEAR(s.x_hat, m.x(0, 0), 1e-12) << i;
        ASSERT_NEAR(s.p, m.P(0, 0), 1e-12) << i;
        ASSERT_GT(s.p, 0.0);
        ASSERT_LE(s.p, prior.p_prior);
    }
}

TEST(KalmanUpdate, RiccatiConvergesAbsolutely) {
    for (auto [q, r] : {std::pair{1e-18, 1e-15}, std::pair{1e-16, 1e-16}, std::pair{0.5, 2.0}}) {
        KalmanState s{0.0, r, q, r, {}};
        const double target = steady_state_covariance(q, r);
        for (int n = 1; n <= 400; ++n) {
            s = kalman_update(s, 0.0);
            if (n >= 200) {
                ASSERT_LT(std::abs(s.p - target), 1e-9) << q << " " << r << " " << n;
            }
        }
    }
}

TEST(SteadyState, IsFixedPoint) {
    for (auto [q, r] : {std::pair{1e-18, 1e-15}, std::pair{0.5, 2.0}, std::pair{3.0, 0.1}}) {
        const double p = steady_state_covariance(q, r);
        EXPECT_GT(p, 0.0);
        EXPECT_NEAR(p, (p + q) * r / (p + q + r), 1e-12 * p);
    }
}

TEST(ProjectGlobal, Examples) {
    KalmanState s{0.0, 1.0, 0.0, 1.0, {0, 1000.0, 1000.0}};
    EXPECT_EQ(project_global(s, 1500.0), 1500.0);
    s.x_hat = 0.001;
    EXPECT_DOUBLE_EQ(project_global(s, 1500.0), 1500.5);
    for (double x : {-0.3, 0.0, 1e-6, 2.0}) {
        s.x_hat = x;
        EXPECT_EQ(project_global(s, 1000.0), 1000.0);
    }
    EXPECT_THROW(project_global(s, 999.0), OutOfOrderError);
}

TEST(ProjectGlobal, LinearInNodeTime) {
    KalmanState s{-1.57e-6, 1.0, 0.0, 1.0, {4, 120.0, 120.0002}};
    const double a = project_global(s, 130.0), b = project_global(s, 140.0), c = project_global(s, 150.0);
    EXPECT_NEAR(b - a, c - b, 1e-12);
}

TEST(SyncError, SignConvention) {
    EXPECT_EQ(sync_error(100.0, 100.0), 0.0);
    EXPECT_EQ(sync_error(100.0, 99.5), 0.5);
    EXPECT_EQ(sync_error(100.0, 100.5), -0.5);
    static_assert(sync_error<long long>(5, 7) == -2);
}

TEST(LwKalman, LifecycleAndInitialization) {
    LwKalman f(1e-18, 1e-15);
    EXPECT_THROW(f.project(1.0), NotInitializedError);
    f.ingest({0, 0.0, 0.0});
    EXPECT_FALSE(f.synchronized());
    EXPECT_EQ(f.project(5.0), 5.0);
    f.ingest({1, 30.0, 30.0 * (1 + 2e-6)});
    EXPECT_TRUE(f.synchronized());
    EXPECT_NEAR(f.state().x_hat, -2e-6 / (1 + 2e-6), 1e-15);
    EXPECT_EQ(f.state().p, 1e-15);
    EXPECT_FALSE(f.last_innovation());
    f.ingest({2, 60.0, 60.0 * (1 + 2e-6)});
    EXPECT_TRUE(f.last_innovation());
    EXPECT_NEAR(f.last_innovation()->variance, 1e-15 + 1e-18 + 1e-15, 1e-27);
    EXPECT_EQ(f.pairs_seen(), 3u);
}

TEST(LwKalman, MeasurementModelMeansAreRemoved) {
    const MeasurementModel model{1e-7, 1e-15, 0.0, 1e-18};
    LwKalman f(model);
    f.ingest({0, 0.0, 0.0});
    f.ingest({1, 30.0, 30.0});
    EXPECT_NEAR(f.state().x_hat, -1e-7, 1e-18);
    EXPECT_THROW(LwKalman(MeasurementModel{0.0, 0.0, 0.0, 0.0}), ConfigError);
}

TEST(LwKalman, RejectsOutOfOrderPairs) {
    LwKalman f(1e-18, 1e-15);
    f.ingest({3, 90.0, 90.0});
    EXPECT_THROW(f.ingest({2, 60.0, 60.0}), OutOfOrderError);
}

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "qotsync/training.hpp"

using namespace qotsync;

namespace {

std::size_t index_of(const std::vector<double>& grid, double v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (std::abs(std::log(grid[i] / v)) < std::abs(std::log(grid[best] / v))) best = i;
    return best;
}

}  // namespace

TEST(LogSpace, EndpointsAndRatio) {
    const auto g = log_space(1e-20, 1e-11, 10);
    ASSERT_EQ(g.size(), 10u);
    EXPECT_EQ(g.front(), 1e-20);
    EXPECT_EQ(g.back(), 1e-11);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], 10.0, 1e-9);
    EXPECT_THROW(log_space(0.0, 1.0, 3), ConfigError);
}

TEST(Train, SingleCandidateIsReturned) {
    const auto traces = fixture::planted_traces(1e-16, 1e-14, 2, 20, 30.0, 1);
    const std::vector<CovarianceCandidate> grid{{2e-17, 3e-15}};
    const auto best = train_covariances(traces, grid);
    EXPECT_EQ(best.q, 2e-17);
    EXPECT_EQ(best.r, 3e-15);
}

TEST(Train, NoiselessTracesTieToGridMinimum) {
    std::vector<std::vector<TimestampPair>> traces(3);
    for (auto& t : traces)
        for (std::uint64_t k = 0; k < 30; ++k) t.push_back({k, 30.0 * k, 30.0 * k * (1 + 2e-6)});
    const auto qs = log_space(1e-18, 1e-12, 4);
    const auto rs = log_space(1e-18, 1e-12, 4);
    const auto grid = candidate_grid(qs, rs);
    const auto best = train_covariances(traces, grid);
    EXPECT_EQ(best.q, qs.front());
    EXPECT_EQ(best.r, rs.front());
    EXPECT_LT(best.mean_abs_error, 1e-12);
}

TEST(Train, PlantedCovariancesWithinOneCell) {
    const auto qs = log_space(1e-20, 1e-11, 10);
    const auto rs = log_space(1e-20, 1e-11, 10);
    const auto grid = candidate_grid(qs, rs);
    for (auto [w2, s2] : {std::pair{1e-16, 1e-14}, std::pair{1e-17, 1e-15}}) {
        const auto traces = fixture::planted_traces(w2, s2, 20, 200, 30.0, 5);
        const auto best = train_covariances(traces, grid);
        const auto qi = static_cast<long>(index_of(qs, best.q)), ri = static_cast<long>(index_of(rs, best.r));
        EXPECT_LE(std::labs(qi - static_cast<long>(index_of(qs, w2))), 1) << best.q;
        EXPECT_LE(std::labs(ri - static_cast<long>(index_of(rs, s2))), 1) << best.r;
    }
}

TEST(Train, ScoreCountsHeldOutPairs) {
    const auto traces = fixture::planted_traces(1e-16, 1e-14, 3, 10, 30.0, 2);
    const auto score = score_candidate(traces, 1e-16, 1e-14);
    EXPECT_EQ(score.points, 3u * 8u);
    EXPECT_GT(score.mean_abs_error, 0.0);
}

TEST(Train, Errors) {
    const auto traces = fixture::planted_traces(1e-16, 1e-14, 1, 10, 30.0, 2);
    EXPECT_THROW(train_covariances(traces, std::vector<CovarianceCandidate>{}), ConfigError);
    EXPECT_THROW(train_covariances(std::vector<std::vector<TimestampPair>>{}, std::vector<CovarianceCandidate>{{1, 1}}),
                 ConfigError);
    EXPECT_THROW(train_covariances(traces, std::vector<CovarianceCandidate>{{1e-16, 0.0}}), ConfigError);
    const auto short_traces = fixture::planted_traces(1e-16, 1e-14, 1, 2, 30.0, 2);
    EXPECT_THROW(train_covariances(short_traces, std::vector<CovarianceCandidate>{{1, 1}}), ConfigError);
}

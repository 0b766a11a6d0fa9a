#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "qotsync/clock_model.hpp"
#include "qotsync/error.hpp"
#include "qotsync/kalman.hpp"

namespace qotsync {

struct CovarianceCandidate {
    double q = 0.0;
    double r = 0.0;
};

/// How one (q, r) candidate performed on the training traces.
struct CandidateScore {
    double q = 0.0;
    double r = 0.0;
    double mean_abs_error = 0.0;     ///< seconds, over held-out sync instants
    double neg_log_likelihood = 0.0; ///< of the filter innovations
    std::size_t points = 0;
};

/// `n` logarithmically spaced values from lo to hi inclusive.
inline std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw ConfigError("log_space needs 0 < lo <= hi, n > 0");
    std::vector<double> values(n);
    if (n == 1) {
        values[0] = lo;
        return values;
    }
    const double step = std::log10(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) values[i] = lo * std::pow(10.0, step * static_cast<double>(i));
    values.back() = hi;
    return values;
}

inline std::vector<CovarianceCandidate> candidate_grid(std::span<const double> qs, std::span<const double> rs) {
    std::vector<CovarianceCandidate> grid;
    grid.reserve(qs.size() * rs.size());
    for (double q : qs)
        for (double r : rs) grid.push_back({q, r});
    return grid;
}

/// Replay every trace through a filter with the given covariances.
///
/// Each sync pair is held out once: before the filter ingests it the node
/// projects the pair's node time, and the projection is scored against the
/// pair's root time. That is the longest horizon a query within the period
/// can see.
inline CandidateScore score_candidate(std::span<const std::vector<TimestampPair>> traces, double q, double r) {
    CandidateScore score{q, r, 0.0, 0.0, 0};
    double abs_sum = 0.0;
    for (const auto& trace : traces) {
        LwKalman filter(q, r);
        for (const auto& pair : trace) {
            if (filter.synchronized()) {
                abs_sum += std::abs(sync_error(pair.root_time, filter.project(pair.node_time)));
                ++score.points;
            }
            filter.ingest(pair);
            if (const auto& innovation = filter.last_innovation()) {
                score.neg_log_likelihood +=
                    0.5 * (std::log(2.0 * std::numbers::pi * innovation->variance) +
                           innovation->residual * innovation->residual / innovation->variance);
            }
        }
    }
    score.mean_abs_error = score.points > 0 ? abs_sum / static_cast<double>(score.points) : 0.0;
    return score;
}

namespace detail {

/// Scores closer than a picosecond, or than 1e-9 relative, count as equal.
inline bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= 1e-12 + 1e-9 * std::max(std::abs(a), std::abs(b));
}

/// Ranking: sync error first. The error depends on q and r only through
/// their ratio, so candidates on one q/r diagonal tie exactly and the
/// innovation likelihood settles the absolute scale. Remaining ties go to
/// the smaller q, then the smaller r.
inline bool better(const CandidateScore& a, const CandidateScore& b) {
    if (!nearly_equal(a.mean_abs_error, b.mean_abs_error)) return a.mean_abs_error < b.mean_abs_error;
    if (!nearly_equal(a.neg_log_likelihood, b.neg_log_likelihood))
        return a.neg_log_likelihood < b.neg_log_likelihood;
    if (a.q != b.q) return a.q < b.q;
    return a.r < b.r;
}

}  // namespace detail

/// Offline covariance training: exhaustive search over `grid`.
inline CandidateScore train_covariances(std::span<const std::vector<TimestampPair>> traces,
                                        std::span<const CovarianceCandidate> grid) {
    if (grid.empty()) throw ConfigError("covariance candidate grid is empty");
    if (traces.empty()) throw ConfigError("no training traces");
    for (const auto& c : grid) {
        if (!(c.q >= 0.0) || !(c.r > 0.0)) throw ConfigError("candidates need q >= 0 and r > 0");
    }
    std::optional<CandidateScore> best;
    for (const auto& candidate : grid) {
        const auto score = score_candidate(traces, candidate.q, candidate.r);
        if (!best || detail::better(score, *best)) best = score;
    }
    if (best->points == 0) throw ConfigError("training traces too short to score (need >= 3 pairs)");
    return *best;
}

}  // namespace qotsync

#pragma once

#include <cstddef>
#include <deque>

#include "qotsync/clock_model.hpp"
#include "qotsync/error.hpp"

namespace qotsync {

inline constexpr std::size_t kDefaultFtspWindow = 8;

/// FTSP-style regression table: a bounded window of sync pairs and the
/// least-squares line of (root - node) against node time.
///
/// Global time is `node + offset + skew * node`. The fit is kept in centred
/// form around the window means so that projection does not lose precision
/// to the large intercept at node time zero.
class RegressionTable {
public:
    explicit RegressionTable(std::size_t capacity = kDefaultFtspWindow) : capacity_(capacity) {
        if (capacity_ == 0) throw ConfigError("regression window must hold at least one pair");
    }

    void insert(const TimestampPair& pair) {
        if (!window_.empty() && pair.k <= window_.back().k)
            throw OutOfOrderError("regression table entries must have increasing k");
        if (window_.size() == capacity_) window_.pop_front();
        window_.push_back(pair);
        refit();
    }

    double project(double node_now) const {
        if (window_.empty()) throw NotInitializedError("regression table is empty");
        return node_now + mean_offset_ + skew_ * (node_now - mean_node_);
    }

    /// Relative skew of root against node time (root/node rate minus one).
    double fitted_skew() const noexcept { return skew_; }
    /// Intercept of (root - node) at node time zero.
    double fitted_offset() const noexcept { return mean_offset_ - skew_ * mean_node_; }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return window_.size(); }
    bool empty() const noexcept { return window_.empty(); }
    const std::deque<TimestampPair>& window() const noexcept { return window_; }

private:
    void refit() {
        const auto n = static_cast<double>(window_.size());
        double node_sum = 0.0;
        double offset_sum = 0.0;
        for (const auto& p : window_) {
            node_sum += p.node_time;
            offset_sum += p.root_time - p.node_time;
        }
        mean_node_ = node_sum / n;
        mean_offset_ = offset_sum / n;
        double sxy = 0.0;
        double sxx = 0.0;
        for (const auto& p : window_) {
            const double dx = p.node_time - mean_node_;
            sxy += dx * ((p.root_time - p.node_time) - mean_offset_);
            sxx += dx * dx;
        }
        skew_ = sxx > 0.0 ? sxy / sxx : 0.0;
    }

    std::size_t capacity_;
    std::deque<TimestampPair> window_;
    double mean_node_ = 0.0;
    double mean_offset_ = 0.0;
    double skew_ = 0.0;
};

inline RegressionTable ftsp_update(RegressionTable table, const TimestampPair& pair) {
    table.insert(pair);
    return table;
}

inline double ftsp_project(const RegressionTable& table, double node_now) {
    return table.project(node_now);
}

}  // namespace qotsync

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "qotsync/error.hpp"
#include "qotsync/estimation.hpp"

namespace qotsync {

/// Range, moments and fixed-width bins of an empirical distribution.
struct HistogramSummary {
    std::size_t n = 0;
    double min = 0.0;
    double max = 0.0;
    double range = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double bin_lo = 0.0;
    double bin_width = 0.0;
    std::vector<std::size_t> counts;
};

inline HistogramSummary summarize(std::span<const double> values, std::size_t bins) {
    if (values.size() < 2) throw ConfigError("histogram needs at least two samples");
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    HistogramSummary h;
    h.n = values.size();
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    h.min = *lo;
    h.max = *hi;
    h.range = h.max - h.min;
    const auto stats = slope_stats(values);
    h.mean = stats.m_s;
    h.variance = stats.var_s;
    h.bin_lo = h.min;
    h.counts.assign(bins, 0);
    if (h.range == 0.0) {
        h.bin_width = 0.0;
        h.counts[0] = h.n;
        return h;
    }
    h.bin_width = h.range / static_cast<double>(bins);
    for (double v : values) {
        auto idx = static_cast<std::size_t>((v - h.min) / h.bin_width);
        if (idx >= bins) idx = bins - 1;
        ++h.counts[idx];
    }
    return h;
}

}  // namespace qotsync

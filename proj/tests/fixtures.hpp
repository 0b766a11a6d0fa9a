#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qotsync/clock_model.hpp"

namespace fixture {

/// Sync traces whose measured frequency offsets are z(k) = x(k) + v(k), with
/// x a random walk of step variance w2 and v white noise of variance s2.
/// Node intervals are built as T / (1 + z) so the measurement recovers z.
inline std::vector<std::vector<qotsync::TimestampPair>> planted_traces(double w2, double s2, std::size_t traces,
                                                                       std::size_t length, double period,
                                                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> walk(0.0, std::sqrt(w2));
    std::normal_distribution<double> meas(0.0, std::sqrt(s2));
    std::vector<std::vector<qotsync::TimestampPair>> out(traces);
    for (auto& trace : out) {
        double x = 1.57e-6;
        double node = 0.0;
        trace.push_back({0, 0.0, 0.0});
        for (std::uint64_t k = 1; k < length; ++k) {
            x += walk(rng);
            const double z = x + meas(rng);
            node += period / (1.0 + z);
            trace.push_back({k, period * static_cast<double>(k), node});
        }
    }
    return out;
}

}  // namespace fixture

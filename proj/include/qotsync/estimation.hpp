#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qotsync/clock_model.hpp"
#include "qotsync/error.hpp"

namespace qotsync {

/// Sample statistics of a slope series (unbiased, n-1 denominator).
struct SlopeStats {
    double m_s = 0.0;
    double std_s = 0.0;
    double var_s = 0.0;
    std::size_t n = 0;
};

/// s(k) = (N(k) - N(k-1)) / (R(k) - R(k-1)) for every consecutive pair.
inline std::vector<double> slope_series(std::span<const TimestampPair> pairs) {
    if (pairs.size() < 2) throw DegenerateIntervalError("slope series needs at least two pairs");
    std::vector<double> slopes;
    slopes.reserve(pairs.size() - 1);
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        const double d_root = pairs[i].root_time - pairs[i - 1].root_time;
        if (d_root == 0.0) throw DegenerateIntervalError("duplicate root_time in slope series");
        slopes.push_back((pairs[i].node_time - pairs[i - 1].node_time) / d_root);
    }
    return slopes;
}

/// Two-pass mean and variance; the series sits near 1 with ~1e-8 spread, so
/// a one-pass sum of squares would cancel catastrophically.
inline SlopeStats slope_stats(std::span<const double> values) {
    if (values.empty()) throw DegenerateIntervalError("statistics of an empty series");
    if (values.size() < 2) throw DegenerateIntervalError("variance undefined for a single sample");
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double correction = 0.0;
    double squares = 0.0;
    for (double v : values) {
        const double d = v - mean;
        correction += d;
        squares += d * d;
    }
    const double var = (squares - correction * correction / n) / (n - 1.0);
    SlopeStats stats;
    stats.m_s = mean + correction / n;
    stats.var_s = var < 0.0 ? 0.0 : var;
    stats.std_s = std::sqrt(stats.var_s);
    stats.n = values.size();
    return stats;
}

/// Relative crystal drift in ppm from the transceiver's frequency error register.
inline double fec_to_ppm(std::int8_t fec, double f_rf_mhz) {
    if (!(f_rf_mhz > 0.0)) throw std::domain_error("f_rf_mhz must be > 0");
    return static_cast<double>(fec) * (5e5 / 128.0) / f_rf_mhz;
}

/// Same conversion for an averaged (non-integer) register value.
inline double mean_fec_to_ppm(double mean_fec, double f_rf_mhz) {
    if (!(f_rf_mhz > 0.0)) throw std::domain_error("f_rf_mhz must be > 0");
    return mean_fec * (5e5 / 128.0) / f_rf_mhz;
}

inline double ppm_to_slope_mean(double f_crystal_ppm) { return 1.0 + f_crystal_ppm / 1e6; }

constexpr std::int8_t decode_twos_complement(std::uint8_t raw) {
    return static_cast<std::int8_t>(raw >= 128 ? static_cast<int>(raw) - 256 : static_cast<int>(raw));
}

}  // namespace qotsync

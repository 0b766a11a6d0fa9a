#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "qotsync/error.hpp"

namespace qotsync {

using Rng = std::mt19937_64;

enum class NoiseKind { none, constant, uniform, triangular, gaussian };

inline std::string_view to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::constant: return "constant";
        case NoiseKind::uniform: return "uniform";
        case NoiseKind::triangular: return "triangular";
        case NoiseKind::gaussian: return "gaussian";
    }
    return "none";
}

inline std::optional<NoiseKind> parse_noise_kind(std::string_view text) {
    for (auto kind : {NoiseKind::none, NoiseKind::constant, NoiseKind::uniform,
                      NoiseKind::triangular, NoiseKind::gaussian}) {
        if (text == to_string(kind)) return kind;
    }
    return std::nullopt;
}

/// One additive timing-noise source, in seconds.
///
/// Parameter meaning depends on `kind`:
///   - constant:   param_a is the value.
///   - uniform:    support [param_a, param_b].
///   - triangular: symmetric on [param_a, param_b], mode at the midpoint.
///   - gaussian:   param_a is the standard deviation, centred on mean_shift.
///
/// `mean_shift` is the known bias of the source. For every kind except gaussian
/// it is fixed by the distribution, so the factories fill it in and validate()
/// rejects a spec whose declared bias disagrees with its support.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    double param_a = 0.0;
    double param_b = 0.0;
    double mean_shift = 0.0;

    static NoiseSpec none() { return {}; }
    static NoiseSpec constant(double value) { return {NoiseKind::constant, value, 0.0, value}; }
    static NoiseSpec uniform(double lo, double hi) {
        return {NoiseKind::uniform, lo, hi, 0.5 * (lo + hi)};
    }
    static NoiseSpec triangular(double lo, double hi) {
        return {NoiseKind::triangular, lo, hi, 0.5 * (lo + hi)};
    }
    static NoiseSpec gaussian(double sigma, double mean = 0.0) {
        return {NoiseKind::gaussian, sigma, 0.0, mean};
    }

    /// Mean implied by the distribution parameters.
    double analytic_mean() const {
        switch (kind) {
            case NoiseKind::none: return 0.0;
            case NoiseKind::constant: return param_a;
            case NoiseKind::uniform:
            case NoiseKind::triangular: return 0.5 * (param_a + param_b);
            case NoiseKind::gaussian: return mean_shift;
        }
        return 0.0;
    }

    double variance() const {
        const double width = param_b - param_a;
        switch (kind) {
            case NoiseKind::none:
            case NoiseKind::constant: return 0.0;
            case NoiseKind::uniform: return width * width / 12.0;
            case NoiseKind::triangular: return width * width / 24.0;
            case NoiseKind::gaussian: return param_a * param_a;
        }
        return 0.0;
    }

    bool enabled() const { return kind != NoiseKind::none; }

    void validate() const {
        const auto fail = [&](const std::string& why) {
            throw ConfigError(std::string(to_string(kind)) + " noise: " + why);
        };
        if (!std::isfinite(param_a) || !std::isfinite(param_b) || !std::isfinite(mean_shift))
            fail("parameters must be finite");
        switch (kind) {
            case NoiseKind::none:
                if (mean_shift != 0.0) fail("mean_shift must be 0");
                return;
            case NoiseKind::gaussian:
                if (param_a < 0.0) fail("standard deviation must be >= 0");
                return;
            case NoiseKind::uniform:
            case NoiseKind::triangular:
                if (!(param_a < param_b)) fail("requires param_a < param_b");
                break;
            case NoiseKind::constant:
                break;
        }
        const double expected = analytic_mean();
        const double scale = std::max({std::abs(param_a), std::abs(param_b), 1e-300});
        if (std::abs(expected - mean_shift) > 1e-9 * scale)
            fail("mean_shift disagrees with the distribution mean");
    }

    bool operator==(const NoiseSpec&) const = default;
};

/// One draw from `spec`. Deterministic given the engine state.
inline double sample_noise(const NoiseSpec& spec, Rng& rng) {
    switch (spec.kind) {
        case NoiseKind::none: return 0.0;
        case NoiseKind::constant: return spec.param_a;
        case NoiseKind::uniform: {
            if (!(spec.param_a < spec.param_b)) spec.validate();
            std::uniform_real_distribution<double> dist(spec.param_a, spec.param_b);
            return dist(rng);
        }
        case NoiseKind::triangular: {
            if (!(spec.param_a < spec.param_b)) spec.validate();
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const double u = unit(rng);
            const double v = unit(rng);
            return spec.param_a + (spec.param_b - spec.param_a) * 0.5 * (u + v);
        }
        case NoiseKind::gaussian: {
            if (spec.param_a < 0.0) spec.validate();
            if (spec.param_a == 0.0) return spec.mean_shift;
            std::normal_distribution<double> dist(spec.mean_shift, spec.param_a);
            return dist(rng);
        }
    }
    return 0.0;
}

/// Independent random streams. Each (seed, node, source) triple gets its own
/// engine, so switching one source off leaves every other source's draws intact.
enum class StreamId : std::uint32_t {
    drift = 1,
    propagation,
    generation,
    capture,
    read_jitter,
    freq_walk,
    capture_phase,
    phase_walk,
    external_walk,
    training,
};

inline Rng make_stream(std::uint64_t seed, std::uint32_t node, StreamId id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), node,
                      static_cast<std::uint32_t>(id)};
    return Rng(seq);
}

}  // namespace qotsync

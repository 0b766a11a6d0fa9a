#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string_view>

#include "qotsync/error.hpp"
#include "qotsync/noise.hpp"

namespace qotsync {

enum class CaptureMode { synchronous, asynchronous_shared_type, asynchronous_external };

inline std::string_view to_string(CaptureMode mode) {
    switch (mode) {
        case CaptureMode::synchronous: return "synchronous";
        case CaptureMode::asynchronous_shared_type: return "asynchronous_shared_type";
        case CaptureMode::asynchronous_external: return "asynchronous_external";
    }
    return "synchronous";
}

inline std::optional<CaptureMode> parse_capture_mode(std::string_view text) {
    for (auto mode : {CaptureMode::synchronous, CaptureMode::asynchronous_shared_type,
                      CaptureMode::asynchronous_external}) {
        if (text == to_string(mode)) return mode;
    }
    return std::nullopt;
}

/// Interrupt generation and timer-capture hardware of one node.
///
/// The transceiver raises its interrupt on the next edge of its own
/// `gen_freq_hz` clock; the timer latches it on the next edge of the capture
/// clock. In synchronous mode both clocks come from one crystal with a fixed
/// phase. The asynchronous modes add a random-walk phase between the two
/// clocks (`phase_walk_sigma`, seconds per sqrt(second)); the external mode
/// also gives the capture clock its own rate error and a second, independent
/// phase walk.
struct CaptureConfig {
    double capture_freq_hz = 2e6;
    double gen_freq_hz = 16e6;
    CaptureMode mode = CaptureMode::synchronous;
    bool double_sampling = false;
    double phase_offset = 0.0;
    bool enabled = true;
    double phase_walk_sigma = 1e-7;
    double external_drift = 7.5e-6;

    double tick() const { return 1.0 / capture_freq_hz; }

    void validate() const {
        if (!(capture_freq_hz > 0.0) || !std::isfinite(capture_freq_hz))
            throw ConfigError("capture_freq_hz must be > 0");
        if (!(gen_freq_hz > 0.0) || !std::isfinite(gen_freq_hz))
            throw ConfigError("gen_freq_hz must be > 0");
        if (!(phase_offset >= 0.0) || !(phase_offset < tick()))
            throw ConfigError("phase_offset must lie in [0, 1/capture_freq_hz)");
        if (!(phase_walk_sigma >= 0.0) || !std::isfinite(phase_walk_sigma))
            throw ConfigError("phase_walk_sigma must be >= 0");
        if (!std::isfinite(external_drift) || std::abs(external_drift) >= 1e-3)
            throw ConfigError("external_drift must be finite with magnitude < 1e-3");
    }

    bool operator==(const CaptureConfig&) const = default;
};

struct CaptureResult {
    std::int64_t tick = 0;
    double captured_time = 0.0;
    double error = 0.0;  ///< captured_time - event_time
};

namespace detail {

/// ceil(x), treating values within rounding distance of an integer as that
/// integer so that events placed on an edge are latched by that edge.
inline double snapped_ceil(double x) {
    const double nearest = std::nearbyint(x);
    const double tolerance = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
    if (std::abs(x - nearest) <= tolerance) return nearest;
    return std::ceil(x);
}

}  // namespace detail

/// First capture-clock edge at or after `event_time`.
inline CaptureResult quantize_capture(double event_time, const CaptureConfig& config) {
    const double ticks = detail::snapped_ceil((event_time - config.phase_offset) * config.capture_freq_hz);
    const double captured = config.phase_offset + ticks / config.capture_freq_hz;
    return {static_cast<std::int64_t>(ticks), captured, captured - event_time};
}

/// Latch on both clock edges and average the two captures.
///
/// The falling-edge grid sits half a tick after the rising one, so the plain
/// average of the two latched values always lies a quarter tick past the
/// best single estimate; that constant is removed. The result is equivalent
/// to next-edge capture at twice the clock rate.
inline double double_sample(double event_time, const CaptureConfig& config) {
    if (!config.double_sampling)
        throw ConfigError("double_sample requires double_sampling to be enabled");
    const double tick = config.tick();
    CaptureConfig falling = config;
    falling.phase_offset = config.phase_offset + 0.5 * tick;
    const double rising_time = quantize_capture(event_time, config).captured_time;
    const double falling_time = quantize_capture(event_time, falling).captured_time;
    return 0.5 * (rising_time + falling_time) - 0.25 * tick;
}

/// Generation-clock edge on which the transceiver raises its interrupt.
inline double generation_edge(double event_time, double gen_freq_hz) {
    return detail::snapped_ceil(event_time * gen_freq_hz) / gen_freq_hz;
}

/// Stateful capture path of one node: interrupt generation, relative phase
/// between generation and capture clocks, and the latch itself.
///
/// Captured values are expressed in the capture clock's time base, which is
/// what the node's software sees.
class CapturePipeline {
public:
    CapturePipeline(CaptureConfig config, std::uint64_t seed, std::uint32_t node)
        : config_(config),
          shared_walk_(make_stream(seed, node, StreamId::phase_walk)),
          external_walk_(make_stream(seed, node, StreamId::external_walk)) {
        config_.validate();
    }

    const CaptureConfig& config() const noexcept { return config_; }

    /// Timestamp of an event whose ideal node-local time is `node_time`,
    /// occurring at root time `root_time` (root times must not decrease).
    double capture(double node_time, double root_time) {
        if (!config_.enabled) return node_time;
        const double interrupt = generation_edge(node_time, config_.gen_freq_hz);
        const double capture_clock = interrupt - relative_phase(root_time);
        return config_.double_sampling ? double_sample(capture_clock, config_)
                                       : quantize_capture(capture_clock, config_).captured_time;
    }

    /// Offset of the capture clock behind the generation clock at root time t.
    double relative_phase(double root_time) {
        if (config_.mode == CaptureMode::synchronous) return 0.0;
        if (root_time < last_time_)
            throw OutOfOrderError("capture pipeline driven backwards in time");
        const double dt = root_time - last_time_;
        last_time_ = root_time;
        if (config_.phase_walk_sigma > 0.0 && dt > 0.0) {
            std::normal_distribution<double> step(0.0, config_.phase_walk_sigma * std::sqrt(dt));
            shared_phase_ += step(shared_walk_);
            if (config_.mode == CaptureMode::asynchronous_external)
                external_phase_ += step(external_walk_);
        }
        if (config_.mode == CaptureMode::asynchronous_external)
            return shared_phase_ + external_phase_ - config_.external_drift * root_time;
        return shared_phase_;
    }

private:
    CaptureConfig config_;
    Rng shared_walk_;
    Rng external_walk_;
    double last_time_ = 0.0;
    double shared_phase_ = 0.0;
    double external_phase_ = 0.0;
};

/// 32-bit timestamp built from a 16-bit hardware timer and a 16-bit software
/// overflow count.
struct ExtendedCounter {
    std::uint16_t hw_bits = 0;
    std::uint16_t sw_overflows = 0;
    bool overflow_pending = false;
    std::uint32_t last_value = 0;

    /// Hardware wrapped; the overflow handler has not run yet.
    void hardware_overflow() noexcept { overflow_pending = true; }

    /// Overflow handler: account for the wrap and clear the pending flag.
    void service_overflow() noexcept {
        if (!overflow_pending) return;
        ++sw_overflows;
        overflow_pending = false;
    }
};

inline constexpr std::uint32_t kCounterHalfRange = 0x8000;

/// Compose a 32-bit timestamp from a latched 16-bit capture.
///
/// If a hardware overflow is pending but not yet counted in software and the
/// latched value is in the lower half of the range, the capture happened
/// after the wrap and needs the extra 2^16. A large latched value with a
/// pending flag was taken just before the wrap.
inline std::uint32_t read_extended(ExtendedCounter& counter, std::uint16_t raw_hw, bool overflow_flag) {
    std::uint32_t high = counter.sw_overflows;
    if (overflow_flag && raw_hw < kCounterHalfRange) ++high;
    std::uint32_t value = (high << 16) | raw_hw;
    if (value < counter.last_value) value = counter.last_value;
    counter.hw_bits = raw_hw;
    counter.last_value = value;
    return value;
}

}  // namespace qotsync

#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "qotsync/error.hpp"
#include "qotsync/noise.hpp"

namespace qotsync {

/// Relative clock parameters of one node against the root.
///
/// The node timestamp of a common event at root time R is
///
///     N = R + phi*R + wander(R) + n_r + offset_nr + prop_delay_mean
///           + d_prop + d_gen + d_cap
///
/// where each lower-case term is drawn fresh from its NoiseSpec.
/// `wander` integrates a random walk of the relative frequency
/// (one `freq_walk` draw per second of root time) which accumulates phase
/// between events; it is zero when freq_walk is none.
///
/// `read_jitter` is not part of the event timestamp. Hardware capture
/// latches the counter directly; OS read latency only affects software reads
/// and is studied separately.
struct ClockParams {
    double phi = 1.57e-6;
    double offset_nr = 0.0;
    double prop_delay_mean = 0.0;
    NoiseSpec drift_noise = NoiseSpec::gaussian(2e-9);
    NoiseSpec prop_noise = NoiseSpec::gaussian(1e-9);
    NoiseSpec gen_noise = NoiseSpec::uniform(0.0, 1.031e-6);
    NoiseSpec cap_noise = NoiseSpec::none();
    NoiseSpec read_jitter = NoiseSpec::none();
    NoiseSpec freq_walk = NoiseSpec::gaussian(1e-9);

    /// Parameters with every stochastic term switched off.
    static ClockParams noiseless(double phi, double offset_nr = 0.0, double prop_delay = 0.0) {
        ClockParams p;
        p.phi = phi;
        p.offset_nr = offset_nr;
        p.prop_delay_mean = prop_delay;
        p.drift_noise = p.prop_noise = p.gen_noise = p.cap_noise = p.read_jitter =
            p.freq_walk = NoiseSpec::none();
        return p;
    }

    void validate() const {
        if (!std::isfinite(phi) || std::abs(phi) >= 1e-3)
            throw ConfigError("phi must be finite with |phi| < 1e-3");
        if (!std::isfinite(offset_nr)) throw ConfigError("offset_nr must be finite");
        if (!std::isfinite(prop_delay_mean) || prop_delay_mean < 0.0)
            throw ConfigError("prop_delay_mean must be >= 0");
        for (const auto* spec :
             {&drift_noise, &prop_noise, &gen_noise, &cap_noise, &read_jitter, &freq_walk})
            spec->validate();
    }

    /// Constant part of the timestamp that a node can remove before filtering:
    /// the estimated propagation delay plus the declared bias of every event
    /// noise source.
    double known_bias() const {
        return prop_delay_mean + drift_noise.mean_shift + prop_noise.mean_shift +
               gen_noise.mean_shift + cap_noise.mean_shift;
    }

    bool operator==(const ClockParams&) const = default;
};

/// One synchronization event as seen by root and node.
struct TimestampPair {
    std::uint64_t k = 0;
    double root_time = 0.0;
    double node_time = 0.0;

    bool operator==(const TimestampPair&) const = default;
};

/// Per-event noise streams of one node.
struct EventStreams {
    Rng drift;
    Rng propagation;
    Rng generation;
    Rng capture;

    EventStreams(std::uint64_t seed, std::uint32_t node)
        : drift(make_stream(seed, node, StreamId::drift)),
          propagation(make_stream(seed, node, StreamId::propagation)),
          generation(make_stream(seed, node, StreamId::generation)),
          capture(make_stream(seed, node, StreamId::capture)) {}
};

namespace detail {

inline double event_noise(const ClockParams& p, EventStreams& streams) {
    return sample_noise(p.drift_noise, streams.drift) + p.offset_nr + p.prop_delay_mean +
           sample_noise(p.prop_noise, streams.propagation) +
           sample_noise(p.gen_noise, streams.generation) +
           sample_noise(p.cap_noise, streams.capture);
}

}  // namespace detail

/// Root time of event k; the root is the noiseless reference.
constexpr double root_timestamp(std::uint64_t k, double event_spacing) {
    return static_cast<double>(k) * event_spacing;
}

/// Node time of event k for a node without frequency wander.
inline double node_timestamp(std::uint64_t k, double event_spacing, const ClockParams& params,
                             EventStreams& streams) {
    const double root = root_timestamp(k, event_spacing);
    return root + params.phi * root + detail::event_noise(params, streams);
}

/// A node's free-running clock, including the random-walk frequency wander.
///
/// The wander process is drawn on a one-second grid from its own stream and
/// cached, so the node clock can be read at any root time in any order.
class NodeClock {
public:
    NodeClock(ClockParams params, std::uint64_t seed, std::uint32_t node)
        : params_(std::move(params)),
          events_(seed, node),
          walk_rng_(make_stream(seed, node, StreamId::freq_walk)) {
        params_.validate();
    }

    const ClockParams& params() const noexcept { return params_; }

    /// Accumulated wander phase (seconds) at root time t.
    double wander(double t) {
        if (!params_.freq_walk.enabled() || t <= 0.0) return 0.0;
        const auto step = static_cast<std::size_t>(std::floor(t));
        extend(step);
        return phase_[step] + freq_[step] * (t - static_cast<double>(step));
    }

    /// Relative frequency error of the node over the second containing t.
    double frequency_offset(double t) {
        if (!params_.freq_walk.enabled() || t < 0.0) return params_.phi;
        const auto step = static_cast<std::size_t>(std::floor(t));
        extend(step);
        return params_.phi + freq_[step];
    }

    /// Noise-free reading of the node clock at root time t.
    double local_time(double t) { return t + params_.phi * t + wander(t) + params_.offset_nr; }

    /// Node timestamp of a common event occurring at root time t.
    double event_timestamp(double t) {
        return t + params_.phi * t + wander(t) + detail::event_noise(params_, events_);
    }

private:
    void extend(std::size_t step) {
        if (freq_.empty()) {
            freq_.push_back(0.0);
            phase_.push_back(0.0);
        }
        while (freq_.size() <= step) {
            phase_.push_back(phase_.back() + freq_.back());
            freq_.push_back(freq_.back() + sample_noise(params_.freq_walk, walk_rng_));
        }
    }

    ClockParams params_;
    EventStreams events_;
    Rng walk_rng_;
    std::vector<double> freq_;
    std::vector<double> phase_;
};

}  // namespace qotsync

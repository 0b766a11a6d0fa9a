#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qotsync/capture.hpp"
#include "qotsync/clock_model.hpp"
#include "qotsync/error.hpp"
#include "qotsync/estimation.hpp"
#include "qotsync/ftsp.hpp"
#include "qotsync/histogram.hpp"
#include "qotsync/kalman.hpp"
#include "qotsync/noise.hpp"
#include "qotsync/training.hpp"

namespace qotsync {

enum class Topology { tx_rx_pair, one_tx_two_rx };
enum class EngineSelection { lw_kalman, ftsp, both };
enum class Engine { lw_kalman, ftsp };

inline std::string_view to_string(Topology t) {
    return t == Topology::tx_rx_pair ? "tx_rx_pair" : "one_tx_two_rx";
}
inline std::string_view to_string(EngineSelection e) {
    switch (e) {
        case EngineSelection::lw_kalman: return "lw_kalman";
        case EngineSelection::ftsp: return "ftsp";
        case EngineSelection::both: return "both";
    }
    return "both";
}
inline std::string_view to_string(Engine e) { return e == Engine::lw_kalman ? "lw_kalman" : "ftsp"; }

inline std::optional<Topology> parse_topology(std::string_view s) {
    if (s == "tx_rx_pair") return Topology::tx_rx_pair;
    if (s == "one_tx_two_rx") return Topology::one_tx_two_rx;
    return std::nullopt;
}
inline std::optional<EngineSelection> parse_engine_selection(std::string_view s) {
    if (s == "lw_kalman") return EngineSelection::lw_kalman;
    if (s == "ftsp") return EngineSelection::ftsp;
    if (s == "both") return EngineSelection::both;
    return std::nullopt;
}
inline std::optional<Engine> parse_engine(std::string_view s) {
    if (s == "lw_kalman") return Engine::lw_kalman;
    if (s == "ftsp") return Engine::ftsp;
    return std::nullopt;
}

inline std::size_t node_count(Topology t) { return t == Topology::tx_rx_pair ? 1 : 2; }

struct NodeSetup {
    ClockParams clock;
    CaptureConfig capture;

    bool operator==(const NodeSetup&) const = default;
};

/// Parameters of the uncertainty studies and of offline training.
struct StudySettings {
    std::vector<double> capture_freqs{2e6, 4e6, 16e6};
    std::size_t rxrx_samples = 100000;
    double os_window = 1.0;
    double os_rate = 1e5;
    std::size_t histogram_bins = 50;
    std::vector<double> train_q_grid = log_space(1e-20, 1e-11, 10);
    std::vector<double> train_r_grid = log_space(1e-20, 1e-11, 10);

    bool operator==(const StudySettings&) const = default;
};

struct ExperimentConfig {
    double sync_period = 30.0;
    double query_period = 18.0;
    double duration = 3600.0;
    Topology topology = Topology::tx_rx_pair;
    std::vector<NodeSetup> nodes{NodeSetup{}};
    EngineSelection engine = EngineSelection::both;
    std::optional<double> kalman_q;
    std::optional<double> kalman_r;
    std::size_t ftsp_window = kDefaultFtspWindow;
    std::uint64_t seed = 1;
    std::vector<double> sweep_periods;
    StudySettings study;

    /// Sync periods to run: the sweep if one is configured, else sync_period.
    std::vector<double> periods() const {
        return sweep_periods.empty() ? std::vector<double>{sync_period} : sweep_periods;
    }

    ExperimentConfig with_period(double period) const {
        ExperimentConfig c = *this;
        c.sync_period = period;
        c.sweep_periods.clear();
        return c;
    }

    /// Checks every field and reports all offending keys at once.
    void validate() const {
        std::vector<std::string> bad;
        std::string detail;
        const auto flag = [&](const std::string& key, const std::string& why) {
            bad.push_back(key);
            detail += (detail.empty() ? "" : "; ") + key + ": " + why;
        };
        if (!std::isfinite(duration) || !(duration > 0.0)) flag("duration", "must be > 0");
        if (!std::isfinite(sync_period) || !(sync_period > 0.0) || sync_period > duration)
            flag("sync_period", "must satisfy 0 < sync_period <= duration");
        if (!std::isfinite(query_period) || !(query_period > 0.0)) flag("query_period", "must be > 0");
        for (std::size_t i = 0; i < sweep_periods.size(); ++i) {
            const double p = sweep_periods[i];
            if (!std::isfinite(p) || !(p > 0.0) || p > duration) {
                flag("sweep.sync_periods", "every period must satisfy 0 < p <= duration");
                break;
            }
        }
        if (nodes.size() != node_count(topology))
            flag("topology", std::string(to_string(topology)) + " needs " +
                                 std::to_string(node_count(topology)) + " node(s)");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const std::string prefix = "node" + std::to_string(i);
            try {
                nodes[i].clock.validate();
            } catch (const ConfigError& e) {
                flag(prefix + ".clock", e.what());
            }
            try {
                nodes[i].capture.validate();
            } catch (const ConfigError& e) {
                flag(prefix + ".capture", e.what());
            }
        }
        if (kalman_q && !(*kalman_q >= 0.0)) flag("kalman.q", "must be >= 0");
        if (kalman_r && !(*kalman_r > 0.0)) flag("kalman.r", "must be > 0");
        if (ftsp_window == 0) flag("ftsp.window", "must be >= 1");
        for (double f : study.capture_freqs)
            if (!(f > 0.0)) {
                flag("study.capture_freqs", "frequencies must be > 0");
                break;
            }
        if (study.histogram_bins == 0) flag("study.histogram_bins", "must be >= 1");
        if (study.rxrx_samples < 2) flag("study.rxrx_samples", "must be >= 2");
        if (!(study.os_window > 0.0)) flag("study.os_window", "must be > 0");
        if (!(study.os_rate > 0.0)) flag("study.os_rate", "must be > 0");
        for (double q : study.train_q_grid)
            if (!(q >= 0.0)) {
                flag("train.q_grid", "values must be >= 0");
                break;
            }
        for (double r : study.train_r_grid)
            if (!(r > 0.0)) {
                flag("train.r_grid", "values must be > 0");
                break;
            }
        if (!bad.empty()) throw ValidationError(std::move(bad), detail);
    }

    bool operator==(const ExperimentConfig&) const = default;
};

/// One query-message evaluation.
struct SyncErrorRecord {
    double query_time = 0.0;
    Engine engine = Engine::lw_kalman;
    double error = 0.0;
    std::uint64_t run_seed = 0;

    bool operator==(const SyncErrorRecord&) const = default;
};

/// Variance of one node timestamp implied by the configured noise sources.
inline double timestamp_noise_variance(const NodeSetup& node) {
    const auto& c = node.clock;
    double var = c.drift_noise.variance() + c.prop_noise.variance() + c.gen_noise.variance() +
                 c.cap_noise.variance();
    if (node.capture.enabled) {
        const double tick = node.capture.tick() * (node.capture.double_sampling ? 0.5 : 1.0);
        const double gen_tick = 1.0 / node.capture.gen_freq_hz;
        var += (tick * tick + gen_tick * gen_tick) / 12.0;
    }
    return var;
}

/// Filter covariances implied by the noise model when none are configured:
/// the measurement is a difference of two noisy timestamps over one period,
/// and the frequency walk accumulates one step variance per second.
inline CovarianceCandidate model_covariances(const ExperimentConfig& config) {
    const auto& node = config.nodes.at(0);
    const double t = config.sync_period;
    const double r = std::max(2.0 * timestamp_noise_variance(node) / (t * t), 1e-30);
    const double q = node.clock.freq_walk.variance() * t;
    return {config.kalman_q.value_or(q), config.kalman_r.value_or(r)};
}

/// Everything one run produced, including the pair stream both engines saw.
struct ExperimentRun {
    std::vector<SyncErrorRecord> records;
    std::vector<TimestampPair> sync_pairs;
    CovarianceCandidate covariances;
    std::uint64_t kalman_stream_hash = 0;
    std::uint64_t ftsp_stream_hash = 0;
};

namespace detail {

inline std::uint64_t fnv_mix(std::uint64_t hash, std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
        hash ^= (word >> (8 * i)) & 0xffu;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

inline std::uint64_t hash_pair(std::uint64_t hash, const TimestampPair& p) {
    hash = fnv_mix(hash, p.k);
    hash = fnv_mix(hash, std::bit_cast<std::uint64_t>(p.root_time));
    return fnv_mix(hash, std::bit_cast<std::uint64_t>(p.node_time));
}

inline constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ull;

inline std::int64_t to_ns(double seconds) { return std::llround(seconds * 1e9); }

enum class EventKind { query = 0, sync = 1 };

struct Event {
    std::int64_t time_ns;
    EventKind kind;
    std::uint64_t index;

    // Min-heap on time; a query that coincides with a sync is answered first,
    // from the state the preceding sync left behind.
    bool operator>(const Event& o) const {
        if (time_ns != o.time_ns) return time_ns > o.time_ns;
        return static_cast<int>(kind) > static_cast<int>(o.kind);
    }
};

/// A node's timestamping path: free-running clock, then capture hardware,
/// then removal of the known constant bias.
class TimestampSource {
public:
    TimestampSource(const NodeSetup& setup, std::uint64_t seed, std::uint32_t node)
        : clock_(setup.clock, seed, node), capture_(setup.capture, seed, node) {}

    double stamp(double root_time) {
        const double raw = clock_.event_timestamp(root_time);
        return capture_.capture(raw, root_time) - clock_.params().known_bias();
    }

private:
    NodeClock clock_;
    CapturePipeline capture_;
};

}  // namespace detail

/// Discrete-event run of one root and one node.
///
/// Sync messages go out at every multiple of sync_period and query messages
/// at every multiple of query_period, both on the root clock. The node
/// reports its global-time estimate at the simulator's nanosecond
/// resolution; a query is recorded once the engine has seen two sync pairs.
inline ExperimentRun run_experiment_detailed(const ExperimentConfig& config) {
    config.validate();
    if (config.topology != Topology::tx_rx_pair)
        throw ValidationError({"topology"}, "run_experiment simulates a tx_rx_pair topology");

    ExperimentRun run;
    run.covariances = model_covariances(config);
    const bool use_kalman = config.engine != EngineSelection::ftsp;
    const bool use_ftsp = config.engine != EngineSelection::lw_kalman;

    std::optional<LwKalman> kalman;
    std::optional<RegressionTable> ftsp;
    if (use_kalman) kalman.emplace(run.covariances.q, run.covariances.r);
    if (use_ftsp) ftsp.emplace(config.ftsp_window);
    run.kalman_stream_hash = run.ftsp_stream_hash = detail::kFnvBasis;

    detail::TimestampSource node(config.nodes[0], config.seed, 0);

    const std::int64_t sync_ns = detail::to_ns(config.sync_period);
    const std::int64_t query_ns = detail::to_ns(config.query_period);
    const std::int64_t end_ns = detail::to_ns(config.duration);

    std::priority_queue<detail::Event, std::vector<detail::Event>, std::greater<>> queue;
    queue.push({0, detail::EventKind::sync, 0});
    queue.push({0, detail::EventKind::query, 0});

    std::int64_t now_ns = 0;
    while (!queue.empty()) {
        const auto event = queue.top();
        queue.pop();
        if (event.time_ns < now_ns) throw InvariantViolation("event scheduled in the past");
        now_ns = event.time_ns;
        const double root_time = static_cast<double>(now_ns) * 1e-9;
        const double node_time = node.stamp(root_time);

        if (event.kind == detail::EventKind::sync) {
            const TimestampPair pair{event.index, root_time, node_time};
            run.sync_pairs.push_back(pair);
            if (kalman) {
                kalman->ingest(pair);
                run.kalman_stream_hash = detail::hash_pair(run.kalman_stream_hash, pair);
            }
            if (ftsp) {
                ftsp->insert(pair);
                run.ftsp_stream_hash = detail::hash_pair(run.ftsp_stream_hash, pair);
            }
            const auto next = now_ns + sync_ns;
            if (next <= end_ns) queue.push({next, detail::EventKind::sync, event.index + 1});
        } else {
            const auto record = [&](Engine engine, double estimate) {
                const auto error_ns = sync_error(now_ns, detail::to_ns(estimate));
                run.records.push_back({root_time, engine, static_cast<double>(error_ns) * 1e-9, config.seed});
            };
            if (kalman && kalman->synchronized()) record(Engine::lw_kalman, kalman->project(node_time));
            if (ftsp && ftsp->size() >= 2) record(Engine::ftsp, ftsp->project(node_time));
            const auto next = now_ns + query_ns;
            if (next <= end_ns) queue.push({next, detail::EventKind::query, event.index + 1});
        }
    }
    if (use_kalman && use_ftsp && run.kalman_stream_hash != run.ftsp_stream_hash)
        throw InvariantViolation("engines ingested different timestamp streams");
    return run;
}

inline std::vector<SyncErrorRecord> run_experiment(const ExperimentConfig& config) {
    return run_experiment_detailed(config).records;
}

/// RX1 - RX2 timestamp differences of one broadcast seen by two receivers.
///
/// The broadcast reaches both receivers at the same instant, so clock terms
/// cancel and the difference is the two receivers' interrupt-generation
/// noise alone.
inline HistogramSummary run_rx_rx_study(const ExperimentConfig& config, std::size_t samples) {
    config.validate();
    if (config.topology != Topology::one_tx_two_rx)
        throw ValidationError({"topology"}, "RX-RX study needs topology one_tx_two_rx");
    EventStreams rx1(config.seed, 1);
    EventStreams rx2(config.seed, 2);
    const auto& g1 = config.nodes[0].clock.gen_noise;
    const auto& g2 = config.nodes[1].clock.gen_noise;
    std::vector<double> diffs(samples);
    for (auto& d : diffs) d = sample_noise(g1, rx1.generation) - sample_noise(g2, rx2.generation);
    return summarize(diffs, config.study.histogram_bins);
}

struct CaptureStudyRow {
    double freq_hz = 0.0;
    SlopeStats stats;
};

/// Timestamp pairs of one node at a fixed sync period, through its capture path.
inline std::vector<TimestampPair> capture_trace(const ExperimentConfig& config, const NodeSetup& node) {
    detail::TimestampSource source(node, config.seed, 0);
    const auto events = static_cast<std::uint64_t>(std::floor(config.duration / config.sync_period + 1e-9));
    std::vector<TimestampPair> pairs;
    pairs.reserve(events + 1);
    for (std::uint64_t k = 0; k <= events; ++k) {
        const double t = root_timestamp(k, config.sync_period);
        pairs.push_back({k, t, source.stamp(t)});
    }
    return pairs;
}

/// Slope statistics per capture frequency, all on the same noise realization.
inline std::vector<CaptureStudyRow> run_capture_freq_study(const ExperimentConfig& base,
                                                           std::vector<double> freqs) {
    base.validate();
    if (freqs.empty()) throw ConfigError("capture study needs at least one frequency");
    for (double f : freqs)
        if (!(f > 0.0) || !std::isfinite(f)) throw ConfigError("capture frequencies must be > 0");
    std::sort(freqs.begin(), freqs.end());
    std::vector<CaptureStudyRow> rows;
    for (double f : freqs) {
        NodeSetup node = base.nodes[0];
        node.capture.capture_freq_hz = f;
        node.capture.phase_offset = std::fmod(node.capture.phase_offset, 1.0 / f);
        const auto pairs = capture_trace(base, node);
        const auto slopes = slope_series(pairs);
        rows.push_back({f, slope_stats(slopes)});
    }
    return rows;
}

/// Differences of consecutive software clock reads taken at `rate` per second
/// for `window` seconds, each read perturbed by `read_jitter`.
inline HistogramSummary run_os_jitter_probe(const NoiseSpec& read_jitter, double window, double rate,
                                            std::uint64_t seed = 1, std::size_t bins = 50) {
    read_jitter.validate();
    if (!(rate > 0.0)) throw ConfigError("read rate must be > 0");
    if (!(window > 0.0)) throw ConfigError("probe window must be > 0");
    const auto count = static_cast<std::size_t>(std::llround(window * rate));
    if (count < 2) throw ConfigError("probe window holds fewer than two read intervals");
    Rng rng = make_stream(seed, 0, StreamId::read_jitter);
    const double interval = 1.0 / rate;
    std::vector<double> diffs(count);
    double prev_read = sample_noise(read_jitter, rng);
    for (std::size_t i = 1; i <= count; ++i) {
        const double read = static_cast<double>(i) * interval + sample_noise(read_jitter, rng);
        diffs[i - 1] = read - prev_read;
        prev_read = read;
    }
    return summarize(diffs, bins);
}

/// Sync-pair traces for offline training, one per seed.
inline std::vector<std::vector<TimestampPair>> training_traces(const ExperimentConfig& config,
                                                               std::span<const std::uint64_t> seeds) {
    std::vector<std::vector<TimestampPair>> traces;
    traces.reserve(seeds.size());
    for (auto seed : seeds) {
        auto c = config;
        c.seed = seed;
        c.engine = EngineSelection::lw_kalman;
        traces.push_back(run_experiment_detailed(c).sync_pairs);
    }
    return traces;
}

inline CandidateScore train_for_config(const ExperimentConfig& config, std::span<const std::uint64_t> seeds) {
    const auto traces = training_traces(config, seeds);
    const auto grid = candidate_grid(config.study.train_q_grid, config.study.train_r_grid);
    return train_covariances(traces, grid);
}

}  // namespace qotsync

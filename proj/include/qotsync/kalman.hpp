#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

#include "qotsync/clock_model.hpp"
#include "qotsync/error.hpp"

namespace qotsync {

/// Scalar Kalman filter on the relative frequency offset.
///
/// State transition and measurement scalars are both 1 and there is no
/// control input, so the filter is fully described by these five values.
struct KalmanState {
    double x_hat = 0.0;  ///< estimated frequency offset
    double p = 0.0;      ///< error covariance
    double q = 0.0;      ///< model noise variance
    double r = 1.0;      ///< measurement noise variance
    TimestampPair last_pair{};
};

/// Mean and spread of the timestamp and drift processes, in frequency-offset
/// units. `e_q_var` becomes the measurement variance and `e_rd_var` the model
/// variance; the two means are removed from measurement and prediction.
struct MeasurementModel {
    double mu_q = 0.0;
    double e_q_var = 0.0;
    double mu_rd = 0.0;
    double e_rd_var = 0.0;

    void validate() const {
        if (!(e_q_var > 0.0)) throw ConfigError("measurement variance e_q_var must be > 0");
        if (!(e_rd_var >= 0.0)) throw ConfigError("drift variance e_rd_var must be >= 0");
        if (!std::isfinite(mu_q) || !std::isfinite(mu_rd))
            throw ConfigError("measurement model means must be finite");
    }
};

/// Measured frequency offset between two sync events, (dR - dN) / dN.
/// Approximately -phi for a node that runs fast by phi.
inline double measure_fo(const TimestampPair& prev, const TimestampPair& cur) {
    if (cur.k <= prev.k) throw OutOfOrderError("measure_fo needs cur.k > prev.k");
    const double d_node = cur.node_time - prev.node_time;
    if (d_node == 0.0) throw DegenerateIntervalError("zero node-time interval");
    const double d_root = cur.root_time - prev.root_time;
    return (d_root - d_node) / d_node;
}

struct KalmanPrior {
    double x_prior = 0.0;
    double p_prior = 0.0;
};

inline KalmanPrior kalman_predict(const KalmanState& state) {
    return {state.x_hat, state.p + state.q};
}

inline double kalman_gain(double p_prior, double r) {
    if (!(r > 0.0)) throw ConfigError("measurement noise variance r must be > 0");
    return p_prior / (p_prior + r);
}

inline KalmanState kalman_update(KalmanState state, double z) {
    const auto [x_prior, p_prior] = kalman_predict(state);
    const double gain = kalman_gain(p_prior, state.r);
    state.x_hat = x_prior + gain * (z - x_prior);
    state.p = (1.0 - gain) * p_prior;
    return state;
}

/// Root-time estimate at node time `node_now`, projected from the anchor pair.
inline double project_global(const KalmanState& state, double node_now) {
    if (node_now < state.last_pair.node_time)
        throw OutOfOrderError("projection requested before the anchor pair");
    return state.last_pair.root_time + (node_now - state.last_pair.node_time) * (state.x_hat + 1.0);
}

template <typename T>
constexpr T sync_error(T true_root, T estimated) {
    return true_root - estimated;
}

/// Positive fixed point of p = (p + q) r / (p + q + r).
inline double steady_state_covariance(double q, double r) {
    return 0.5 * (-q + std::sqrt(q * q + 4.0 * q * r));
}

/// The synchronizing node's filter: anchors on the latest sync pair, starts
/// from the first measured offset with p = r, and filters afterwards.
class LwKalman {
public:
    struct Innovation {
        double z = 0.0;
        double residual = 0.0;  ///< z - x_prior
        double variance = 0.0;  ///< p_prior + r
    };

    LwKalman(double q, double r) : LwKalman(MeasurementModel{0.0, r, 0.0, q}) {}

    explicit LwKalman(MeasurementModel model) : model_(model) {
        model_.validate();
        state_.q = model_.e_rd_var;
        state_.r = model_.e_q_var;
    }

    void ingest(const TimestampPair& pair) {
        last_innovation_.reset();
        if (pairs_seen_ == 0) {
            state_.last_pair = pair;
            pairs_seen_ = 1;
            return;
        }
        const double z = measure_fo(state_.last_pair, pair) - model_.mu_q;
        if (pairs_seen_ == 1) {
            state_.x_hat = z;
            state_.p = state_.r;
        } else {
            state_.x_hat += model_.mu_rd;
            const auto prior = kalman_predict(state_);
            last_innovation_ = Innovation{z, z - prior.x_prior, prior.p_prior + state_.r};
            state_ = kalman_update(state_, z);
        }
        state_.last_pair = pair;
        ++pairs_seen_;
    }

    /// Global time at `node_now`. Before a frequency offset is known the node
    /// passes its own rate through.
    double project(double node_now) const {
        if (pairs_seen_ == 0) throw NotInitializedError("no sync pair ingested");
        return project_global(state_, node_now);
    }

    bool synchronized() const noexcept { return pairs_seen_ >= 2; }
    std::size_t pairs_seen() const noexcept { return pairs_seen_; }
    const KalmanState& state() const noexcept { return state_; }
    const std::optional<Innovation>& last_innovation() const noexcept { return last_innovation_; }

private:
    MeasurementModel model_;
    KalmanState state_{};
    std::size_t pairs_seen_ = 0;
    std::optional<Innovation> last_innovation_;
};

}  // namespace qotsync

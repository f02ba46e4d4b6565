#pragma once

// Trust scoring: weighted metric blend, inactivity decay, bounded recovery and
// rehabilitation capping. Everything here is a pure function over values.

#include <optional>

#include "tfl/types.hpp"

namespace tfl {

/// Weights on accuracy, consistency, data quality and frequency. Must be
/// non-negative and sum to one.
struct TrustWeights {
    double alpha = 0.4;
    double beta = 0.3;
    double gamma = 0.2;
    double delta = 0.1;

    /// Throws ConfigError when a weight is negative/non-finite or the sum is
    /// off by more than 1e-12.
    void validate() const;

    friend bool operator==(const TrustWeights&, const TrustWeights&) = default;
};

/// Per-round metrics, each normalized to [0, 1].
struct MetricVector {
    double accuracy = 0.0;
    double consistency = 0.0;
    double data_quality = 0.0;
    double frequency = 0.0;

    void validate() const;

    friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

struct TrustParams {
    double lambda = 0.05;  ///< decay rate per inactive round
    double eta = 0.2;      ///< recovery rate
    double t_max = 1.0;
    double sigma = 0.5;    ///< weight of the fresh blend against the carried score
    double rho = 0.3;      ///< consistency smoothing
    int freq_window = 10;
    double initial_trust = 0.40;
    double initial_consistency = 0.5;
    double initial_frequency = 1.0;

    void validate() const;

    friend bool operator==(const TrustParams&, const TrustParams&) = default;
};

struct TrustState {
    NodeId node_id;
    double trust = 0.40;
    Round last_active_round = 0;
    /// Round up to which inactivity decay has already been applied. Decay is
    /// always measured from max(last_active_round, decayed_through).
    Round decayed_through = 0;
    std::optional<Round> cap_until;
    double cap_value = 1.0;

    bool cap_in_force(Round round) const noexcept { return cap_until && *cap_until >= round; }

    friend bool operator==(const TrustState&, const TrustState&) = default;
};

/// alpha*A + beta*C + gamma*D + delta*U.
double blend_score(const TrustWeights& weights, const MetricVector& metrics);

/// Exponential inactivity decay from the last activity (or the last decay
/// application, whichever is later) up to current_round.
TrustState apply_decay(const TrustState& state, Round current_round, double lambda);

/// Bounded growth towards t_max scaled by the improvement signal in [0, 1].
TrustState apply_recovery(const TrustState& state, double improvement, double eta, double t_max);

/// One round of trust evolution. `metrics` absent means the node did not
/// submit this round and only decay applies. `improvement` is the recovery
/// signal for active nodes and is ignored otherwise.
TrustState update_trust(const TrustState& state, const std::optional<MetricVector>& metrics,
                        double improvement, const TrustWeights& weights, const TrustParams& params,
                        Round current_round);

}  // namespace tfl

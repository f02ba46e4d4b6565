#include "tfl/trust.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tfl {
namespace {

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ConfigError(what);
    }
}

}  // namespace

void TrustWeights::validate() const {
    for (double w : {alpha, beta, gamma, delta}) {
        require(std::isfinite(w) && w >= 0.0, "trust weights must be non-negative");
    }
    require(std::abs(alpha + beta + gamma + delta - 1.0) <= 1e-12, "trust weights must sum to 1");
}

void MetricVector::validate() const {
    if (!in_unit(accuracy) || !in_unit(consistency) || !in_unit(data_quality) || !in_unit(frequency)) {
        throw std::invalid_argument("metric outside [0, 1]");
    }
}

void TrustParams::validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, "trust.lambda must be >= 0");
    require(in_unit(eta), "trust.eta must be in [0, 1]");
    require(std::isfinite(t_max) && t_max > 0.0 && t_max <= 1.0, "trust.t_max must be in (0, 1]");
    require(in_unit(sigma), "trust.sigma must be in [0, 1]");
    require(in_unit(rho), "trust.rho must be in [0, 1]");
    require(freq_window >= 1, "trust.freq_window must be >= 1");
    require(in_unit(initial_trust) && initial_trust <= t_max, "trust.initial_trust must be in [0, t_max]");
    require(in_unit(initial_consistency), "trust.initial_consistency must be in [0, 1]");
    require(in_unit(initial_frequency), "trust.initial_frequency must be in [0, 1]");
}

double blend_score(const TrustWeights& weights, const MetricVector& metrics) {
    weights.validate();
    metrics.validate();
    const double t = weights.alpha * metrics.accuracy + weights.beta * metrics.consistency +
                     weights.gamma * metrics.data_quality + weights.delta * metrics.frequency;
    // Convex combination; clamp only absorbs last-bit rounding.
    return std::clamp(t, 0.0, 1.0);
}

TrustState apply_decay(const TrustState& state, Round current_round, double lambda) {
    if (current_round < state.last_active_round) {
        throw std::invalid_argument("apply_decay: current round precedes last activity");
    }
    TrustState out = state;
    const Round from = std::max(state.last_active_round, state.decayed_through);
    if (current_round > from) {
        const double elapsed = static_cast<double>(current_round - from);
        out.trust = state.trust * std::exp(-lambda * elapsed);
        out.decayed_through = current_round;
    }
    return out;
}

TrustState apply_recovery(const TrustState& state, double improvement, double eta, double t_max) {
    if (!in_unit(improvement)) {
        throw std::invalid_argument("apply_recovery: improvement outside [0, 1]");
    }
    TrustState out = state;
    if (state.trust < t_max) {
        out.trust = std::min(t_max, state.trust + eta * (t_max - state.trust) * improvement);
    }
    return out;
}

TrustState update_trust(const TrustState& state, const std::optional<MetricVector>& metrics,
                        double improvement, const TrustWeights& weights, const TrustParams& params,
                        Round current_round) {
    TrustState out;
    if (!metrics) {
        out = apply_decay(state, current_round, params.lambda);
    } else {
        out = state;
        const double blended = blend_score(weights, *metrics);
        out.trust = (1.0 - params.sigma) * state.trust + params.sigma * blended;
        if (improvement > 0.0) {
            out = apply_recovery(out, improvement, params.eta, params.t_max);
        }
        out.last_active_round = current_round;
        out.decayed_through = current_round;
    }
    if (out.cap_in_force(current_round)) {
        out.trust = std::min(out.trust, out.cap_value);
    }
    out.trust = std::clamp(out.trust, 0.0, params.t_max);
    return out;
}

}  // namespace tfl

#pragma once

// Per-round raw metrics computed by the coordinator from submitted deltas and
// its held-out validation set.

#include <map>
#include <span>
#include <vector>

#include "tfl/model.hpp"
#include "tfl/types.hpp"

namespace tfl {

inline constexpr double kEpsilon = 1e-12;

/// Mean squared error of a linear model on the validation set.
double validation_loss(const ModelVector& model, const ValidationSet& valset);

/// L(global) - L(global + update). Positive means the update helps.
double raw_gain(const ModelVector& global, const ModelVector& update, const ValidationSet& valset);

/// Positive-part gains scaled by the round's best positive gain.
std::map<NodeId, double> normalize_accuracy(const std::map<NodeId, double>& gains);

/// Coordinate-wise unweighted median; even counts take the midpoint.
ModelVector reference_direction(std::span<const ModelVector> updates, OpCounter* counter = nullptr);

/// max(0, cosine(update, reference)); 0 when either norm is below kEpsilon.
double data_quality(const ModelVector& update, const ModelVector& reference);

double update_consistency(double prev_consistency, bool accepted, double rho);

struct ParticipationRecord {
    Round round = 0;
    bool eligible = false;  ///< admitted this round
    bool submitted = false;

    friend bool operator==(const ParticipationRecord&, const ParticipationRecord&) = default;
};

/// Submitted / eligible over the trailing `window` records (most recent
/// last). Falls back to `previous` when no record in the window is eligible.
double update_frequency(std::span<const ParticipationRecord> history, int window, double previous);

/// Improvement of `current` over the mean of the last (up to) three prior
/// utilities, clamped to [0, 1]. Zero without history.
double recovery_signal(std::span<const double> prior_utilities, double current);

}  // namespace tfl

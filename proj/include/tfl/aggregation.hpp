#pragma once

// Trust-weighted robust aggregation of accepted deltas.

#include <span>
#include <vector>

#include "tfl/model.hpp"
#include "tfl/policy.hpp"
#include "tfl/types.hpp"

namespace tfl {

struct WeightedUpdate {
    NodeId node_id;
    ModelVector update;
    double weight = 0.0;
};

/// Lower weighted median per coordinate: values sorted ascending (ties by
/// node id), first value whose cumulative weight reaches half the total.
ModelVector weighted_coordinate_median(std::span<const WeightedUpdate> items, OpCounter* counter = nullptr);

/// Per coordinate, removes `trim` of the total weight from each tail (the
/// boundary item is dropped partially) and averages the remaining weight.
ModelVector weighted_trimmed_mean(std::span<const WeightedUpdate> items, double trim, OpCounter* counter = nullptr);

/// global + robust delta of the accepted set; unchanged for an empty set.
ModelVector aggregate_round(const ModelVector& global, std::span<const WeightedUpdate> accepted,
                            const PolicyConfig& config, OpCounter* counter = nullptr);

}  // namespace tfl

#pragma once

// Synthetic least-squares task and simulated worker behaviours.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <variant>
#include <vector>

#include "tfl/model.hpp"
#include "tfl/types.hpp"

namespace tfl {

struct SyntheticTask {
    ModelVector true_weights;
    std::vector<ValidationSet> local;  ///< one dataset per node, roster order
    ValidationSet validation;
    double noise_std = 0.0;
};

/// Deterministic in `seed`. Each node's data and the validation set come from
/// independent keyed streams, so the validation set never shares samples with
/// a local set and adding a node leaves the others' data untouched.
SyntheticTask generate_task(std::uint64_t seed, std::size_t dim, std::size_t nodes, std::size_t samples_per_node,
                            double noise_std);

/// Number of validation rows generated for a task of dimension `dim`.
std::size_t validation_rows(std::size_t dim);

/// Stable keyed seed derivation: first 8 bytes of SHA-256 over the inputs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::string_view key, std::uint64_t index);

/// RNG stream for one node in one round.
std::mt19937_64 node_round_rng(std::uint64_t seed, const NodeId& node, Round round);

struct NodeBehavior;
using BehaviorPtr = std::shared_ptr<const NodeBehavior>;

namespace behavior {

struct Honest {
    double lr = 0.1;
};
struct SignFlip {
    double lr = 0.1;
    double scale = 1.0;
};
struct NoiseAttacker {
    double std = 1.0;
};
struct FreeRider {};
struct Intermittent {
    double p_submit = 0.5;
    BehaviorPtr inner;
};
struct Recovering {
    Round switch_round = 1;
    BehaviorPtr before;
    BehaviorPtr after;
};

}  // namespace behavior

struct NodeBehavior {
    std::variant<behavior::Honest, behavior::SignFlip, behavior::NoiseAttacker, behavior::FreeRider,
                 behavior::Intermittent, behavior::Recovering>
        kind;

    /// Throws ConfigError on out-of-range parameters (recursively).
    void validate() const;
};

template <typename T>
BehaviorPtr make_behavior(T kind) {
    return std::make_shared<const NodeBehavior>(NodeBehavior{std::move(kind)});
}

/// Mean squared error gradient of a linear model on `data`.
ModelVector mse_gradient(const ModelVector& model, const ValidationSet& data);

struct LocalUpdate {
    ModelVector delta;
    double quality_hint = 0.0;  ///< self-reported, never used for scoring
};

/// One round of local work; nullopt means the node does not submit.
std::optional<LocalUpdate> local_update(const NodeBehavior& behavior, const ModelVector& global,
                                        const ValidationSet& local_data, Round round, std::mt19937_64& rng);

}  // namespace tfl

#include "tfl/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tfl {
namespace {

/// Validates the set and returns it ordered by node id, so that every sum
/// below runs in an order independent of the caller's list order.
std::vector<const WeightedUpdate*> canonical(std::span<const WeightedUpdate> items) {
    if (items.empty()) {
        throw std::invalid_argument("aggregation: empty update set");
    }
    const std::size_t dim = items.front().update.dim();
    double total = 0.0;
    std::vector<const WeightedUpdate*> out;
    out.reserve(items.size());
    for (const auto& it : items) {
        if (it.update.dim() != dim) {
            throw std::invalid_argument("aggregation: dimension mismatch");
        }
        if (!std::isfinite(it.weight) || it.weight < 0.0) {
            throw std::invalid_argument("aggregation: weights must be finite and non-negative");
        }
        total += it.weight;
        out.push_back(&it);
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("aggregation: all weights are zero");
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const WeightedUpdate* a, const WeightedUpdate* b) { return a->node_id < b->node_id; });
    return out;
}

double total_weight(const std::vector<const WeightedUpdate*>& items) {
    double total = 0.0;
    for (const auto* it : items) {
        total += it->weight;
    }
    return total;
}

/// Indices of `items` sorted by coordinate c ascending; equal values keep
/// node-id order because the input is already id-sorted.
std::vector<std::size_t> order_by_coordinate(const std::vector<const WeightedUpdate*>& items, std::size_t c,
                                             OpCounter* counter) {
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (counter) {
            ++counter->comparisons;
        }
        return items[a]->update[c] < items[b]->update[c];
    });
    return order;
}

}  // namespace

ModelVector weighted_coordinate_median(std::span<const WeightedUpdate> items, OpCounter* counter) {
    const auto sorted = canonical(items);
    // Relative slack so that a cumulative sum landing on the midpoint counts
    // as reaching it regardless of summation rounding or weight scale.
    const double half = 0.5 * total_weight(sorted) * (1.0 - 1e-12);
    const std::size_t dim = sorted.front()->update.dim();
    ModelVector out(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        const auto order = order_by_coordinate(sorted, c, counter);
        double cumulative = 0.0;
        out[c] = sorted[order.back()]->update[c];
        for (std::size_t idx : order) {
            cumulative += sorted[idx]->weight;
            if (cumulative >= half) {
                out[c] = sorted[idx]->update[c];
                break;
            }
        }
    }
    return out;
}

ModelVector weighted_trimmed_mean(std::span<const WeightedUpdate> items, double trim, OpCounter* counter) {
    if (!(trim >= 0.0 && trim < 0.5)) {
        throw std::invalid_argument("weighted_trimmed_mean: trim must be in [0, 0.5)");
    }
    const auto sorted = canonical(items);
    const double cut = trim * total_weight(sorted);
    const std::size_t dim = sorted.front()->update.dim();
    ModelVector out(dim);
    std::vector<double> kept(sorted.size());
    for (std::size_t c = 0; c < dim; ++c) {
        const auto order = order_by_coordinate(sorted, c, counter);
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            kept[i] = sorted[i]->weight;
        }
        auto trim_tail = [&](auto first, auto last) {
            double left = cut;
            for (auto it = first; it != last && left > 0.0; ++it) {
                const double take = std::min(kept[*it], left);
                kept[*it] -= take;
                left -= take;
            }
        };
        trim_tail(order.begin(), order.end());
        trim_tail(order.rbegin(), order.rend());

        double mass = 0.0;
        double sum = 0.0;
        double lo = INFINITY;
        double hi = -INFINITY;
        for (std::size_t idx : order) {
            if (kept[idx] > 0.0) {
                const double v = sorted[idx]->update[c];
                mass += kept[idx];
                sum += kept[idx] * v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (mass > 0.0) {
            out[c] = std::clamp(sum / mass, lo, hi);
        } else {
            // Only reachable through rounding at trim close to 0.5.
            out[c] = sorted[order[order.size() / 2]]->update[c];
        }
    }
    return out;
}

ModelVector aggregate_round(const ModelVector& global, std::span<const WeightedUpdate> accepted,
                            const PolicyConfig& config, OpCounter* counter) {
    if (accepted.empty()) {
        return global;
    }
    const ModelVector delta = config.agg_method == AggMethod::kMedian
                                  ? weighted_coordinate_median(accepted, counter)
                                  : weighted_trimmed_mean(accepted, config.trim, counter);
    return global + delta;
}

}  // namespace tfl

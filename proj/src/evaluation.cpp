#include "tfl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tfl {

double validation_loss(const ModelVector& model, const ValidationSet& valset) {
    valset.validate();
    if (model.dim() != valset.cols) {
        throw std::invalid_argument("validation_loss: model dimension mismatch");
    }
    const auto w = model.values();
    double total = 0.0;
    for (std::size_t r = 0; r < valset.rows; ++r) {
        const auto x = valset.row(r);
        double pred = 0.0;
        for (std::size_t c = 0; c < valset.cols; ++c) {
            pred += x[c] * w[c];
        }
        const double err = pred - valset.targets[r];
        total += err * err;
    }
    return total / static_cast<double>(valset.rows);
}

double raw_gain(const ModelVector& global, const ModelVector& update, const ValidationSet& valset) {
    if (global.dim() != update.dim()) {
        throw std::invalid_argument("raw_gain: update dimension mismatch");
    }
    return validation_loss(global, valset) - validation_loss(global + update, valset);
}

std::map<NodeId, double> normalize_accuracy(const std::map<NodeId, double>& gains) {
    if (gains.empty()) {
        throw std::invalid_argument("normalize_accuracy: no gains");
    }
    double best = 0.0;
    for (const auto& [_, g] : gains) {
        best = std::max(best, std::max(0.0, g));
    }
    std::map<NodeId, double> out;
    for (const auto& [id, g] : gains) {
        const double pos = std::max(0.0, g);
        out.emplace(id, std::clamp(pos / (best + kEpsilon), 0.0, 1.0));
    }
    return out;
}

ModelVector reference_direction(std::span<const ModelVector> updates, OpCounter* counter) {
    if (updates.empty()) {
        throw std::invalid_argument("reference_direction: no updates");
    }
    const std::size_t dim = updates.front().dim();
    for (const auto& u : updates) {
        if (u.dim() != dim) {
            throw std::invalid_argument("reference_direction: dimension mismatch");
        }
    }
    ModelVector out(dim);
    std::vector<double> column(updates.size());
    for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t i = 0; i < updates.size(); ++i) {
            column[i] = updates[i][c];
        }
        std::sort(column.begin(), column.end(), [counter](double a, double b) {
            if (counter) {
                ++counter->comparisons;
            }
            return a < b;
        });
        const std::size_t n = column.size();
        out[c] = n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }
    return out;
}

double data_quality(const ModelVector& update, const ModelVector& reference) {
    if (update.dim() != reference.dim()) {
        throw std::invalid_argument("data_quality: dimension mismatch");
    }
    const double nu = update.norm();
    const double nr = reference.norm();
    if (nu < kEpsilon || nr < kEpsilon) {
        return 0.0;
    }
    return std::clamp(update.dot(reference) / (nu * nr), 0.0, 1.0);
}

double update_consistency(double prev_consistency, bool accepted, double rho) {
    return std::clamp((1.0 - rho) * prev_consistency + rho * (accepted ? 1.0 : 0.0), 0.0, 1.0);
}

double update_frequency(std::span<const ParticipationRecord> history, int window, double previous) {
    if (window < 1) {
        throw std::invalid_argument("update_frequency: window must be >= 1");
    }
    const std::size_t take = std::min(history.size(), static_cast<std::size_t>(window));
    int eligible = 0;
    int submitted = 0;
    for (const auto& rec : history.last(take)) {
        if (rec.eligible) {
            ++eligible;
            if (rec.submitted) {
                ++submitted;
            }
        }
    }
    if (eligible == 0) {
        return previous;
    }
    return static_cast<double>(submitted) / static_cast<double>(eligible);
}

double recovery_signal(std::span<const double> prior_utilities, double current) {
    if (prior_utilities.empty()) {
        return 0.0;
    }
    const auto recent = prior_utilities.last(std::min<std::size_t>(3, prior_utilities.size()));
    double mean = 0.0;
    for (double u : recent) {
        mean += u;
    }
    mean /= static_cast<double>(recent.size());
    return std::clamp(current - mean, 0.0, 1.0);
}

}  // namespace tfl

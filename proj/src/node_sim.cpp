#include "tfl/node_sim.hpp"

#include <cmath>
#include <stdexcept>

#include "tfl/evaluation.hpp"
#include "tfl/hashing.hpp"

namespace tfl {
namespace {

ValidationSet sample_rows(std::mt19937_64& rng, const ModelVector& w, std::size_t rows, double noise_std) {
    std::normal_distribution<double> unit(0.0, 1.0);
    ValidationSet data;
    data.rows = rows;
    data.cols = w.dim();
    data.inputs.resize(rows * w.dim());
    data.targets.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double y = 0.0;
        for (std::size_t c = 0; c < w.dim(); ++c) {
            const double x = unit(rng);
            data.inputs[r * w.dim() + c] = x;
            y += x * w[c];
        }
        data.targets[r] = noise_std > 0.0 ? y + noise_std * unit(rng) : y;
    }
    return data;
}

void require(bool ok, const char* what) {
    if (!ok) {
        throw ConfigError(what);
    }
}

}  // namespace

std::size_t validation_rows(std::size_t dim) { return std::max<std::size_t>(64, 8 * dim); }

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::string_view key, std::uint64_t index) {
    Bytes buf;
    auto put_u64 = [&](std::uint64_t v) {
        for (int i = 7; i >= 0; --i) {
            buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    };
    auto put_str = [&](std::string_view s) {
        put_u64(s.size());
        buf.insert(buf.end(), s.begin(), s.end());
    };
    put_u64(seed);
    put_str(stream);
    put_str(key);
    put_u64(index);
    const Digest d = sha256(buf);
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) {
        out = out << 8 | d[static_cast<std::size_t>(i)];
    }
    return out;
}

std::mt19937_64 node_round_rng(std::uint64_t seed, const NodeId& node, Round round) {
    return std::mt19937_64(derive_seed(seed, "node-round", node.str(), round));
}

SyntheticTask generate_task(std::uint64_t seed, std::size_t dim, std::size_t nodes, std::size_t samples_per_node,
                            double noise_std) {
    if (dim < 1 || nodes < 1 || samples_per_node < dim) {
        throw ConfigError("generate_task: need dim >= 1, nodes >= 1, samples_per_node >= dim");
    }
    if (!std::isfinite(noise_std) || noise_std < 0.0) {
        throw ConfigError("generate_task: noise_std must be >= 0");
    }
    SyntheticTask task;
    task.noise_std = noise_std;

    std::mt19937_64 truth_rng(derive_seed(seed, "truth", "", 0));
    std::normal_distribution<double> unit(0.0, 1.0);
    task.true_weights = ModelVector(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        task.true_weights[c] = unit(truth_rng);
    }

    task.local.reserve(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        std::mt19937_64 rng(derive_seed(seed, "local", "", i));
        task.local.push_back(sample_rows(rng, task.true_weights, samples_per_node, noise_std));
    }
    std::mt19937_64 val_rng(derive_seed(seed, "validation", "", 0));
    task.validation = sample_rows(val_rng, task.true_weights, validation_rows(dim), noise_std);
    return task;
}

void NodeBehavior::validate() const {
    std::visit(
        [](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, behavior::Honest>) {
                require(std::isfinite(b.lr) && b.lr > 0.0, "behavior.lr must be > 0");
            } else if constexpr (std::is_same_v<T, behavior::SignFlip>) {
                require(std::isfinite(b.lr) && b.lr > 0.0, "behavior.lr must be > 0");
                require(std::isfinite(b.scale) && b.scale > 0.0, "behavior.scale must be > 0");
            } else if constexpr (std::is_same_v<T, behavior::NoiseAttacker>) {
                require(std::isfinite(b.std) && b.std >= 0.0, "behavior.std must be >= 0");
            } else if constexpr (std::is_same_v<T, behavior::Intermittent>) {
                require(b.p_submit >= 0.0 && b.p_submit <= 1.0, "behavior.p_submit must be in [0, 1]");
                require(b.inner != nullptr, "behavior.inner is required");
                b.inner->validate();
            } else if constexpr (std::is_same_v<T, behavior::Recovering>) {
                require(b.switch_round >= 1, "behavior.switch_round must be >= 1");
                require(b.before != nullptr && b.after != nullptr, "behavior.before/after are required");
                b.before->validate();
                b.after->validate();
            }
        },
        kind);
}

ModelVector mse_gradient(const ModelVector& model, const ValidationSet& data) {
    if (model.dim() != data.cols) {
        throw std::invalid_argument("mse_gradient: dimension mismatch");
    }
    ModelVector grad(data.cols);
    for (std::size_t r = 0; r < data.rows; ++r) {
        const auto x = data.row(r);
        double residual = -data.targets[r];
        for (std::size_t c = 0; c < data.cols; ++c) {
            residual += x[c] * model[c];
        }
        for (std::size_t c = 0; c < data.cols; ++c) {
            grad[c] += x[c] * residual;
        }
    }
    return (2.0 / static_cast<double>(data.rows)) * std::move(grad);
}

std::optional<LocalUpdate> local_update(const NodeBehavior& behavior, const ModelVector& global,
                                        const ValidationSet& local_data, Round round, std::mt19937_64& rng) {
    return std::visit(
        [&](const auto& b) -> std::optional<LocalUpdate> {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, behavior::Honest>) {
                ModelVector delta = -b.lr * mse_gradient(global, local_data);
                const double hint = validation_loss(global, local_data) - validation_loss(global + delta, local_data);
                return LocalUpdate{std::move(delta), hint};
            } else if constexpr (std::is_same_v<T, behavior::SignFlip>) {
                return LocalUpdate{b.scale * b.lr * mse_gradient(global, local_data), 1.0};
            } else if constexpr (std::is_same_v<T, behavior::NoiseAttacker>) {
                std::normal_distribution<double> noise(0.0, b.std);
                ModelVector delta(global.dim());
                for (std::size_t c = 0; c < delta.dim(); ++c) {
                    delta[c] = noise(rng);
                }
                return LocalUpdate{std::move(delta), 1.0};
            } else if constexpr (std::is_same_v<T, behavior::FreeRider>) {
                return LocalUpdate{ModelVector(global.dim()), 1.0};
            } else if constexpr (std::is_same_v<T, behavior::Intermittent>) {
                std::bernoulli_distribution coin(b.p_submit);
                if (!coin(rng)) {
                    return std::nullopt;
                }
                return local_update(*b.inner, global, local_data, round, rng);
            } else {
                const auto& active = round < b.switch_round ? *b.before : *b.after;
                return local_update(active, global, local_data, round, rng);
            }
        },
        behavior.kind);
}

}  // namespace tfl

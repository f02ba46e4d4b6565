#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tfl {

/// Dense parameter vector: the global model or a per-node delta.
class ModelVector {
public:
    ModelVector() = default;
    explicit ModelVector(std::size_t dim) : values_(dim, 0.0) {}
    explicit ModelVector(std::vector<double> values) : values_(std::move(values)) {}
    ModelVector(std::initializer_list<double> values) : values_(values) {}

    std::size_t dim() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool all_finite() const noexcept;
    double dot(const ModelVector& other) const;
    double norm() const;

    ModelVector& operator+=(const ModelVector& other);
    friend ModelVector operator+(ModelVector a, const ModelVector& b) { return a += b; }
    friend ModelVector operator*(double s, ModelVector v);

    friend bool operator==(const ModelVector&, const ModelVector&) = default;

private:
    std::vector<double> values_;
};

/// Held-out least-squares data owned by the coordinator. Inputs are stored
/// row-major, one row per sample.
struct ValidationSet {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> inputs;
    std::vector<double> targets;

    std::span<const double> row(std::size_t r) const { return {inputs.data() + r * cols, cols}; }
    void validate() const;

    friend bool operator==(const ValidationSet&, const ValidationSet&) = default;
};

/// Binary artifact encoding of a model: "TFLM", u32 dimension (LE), then the
/// IEEE-754 bit patterns of every entry as u64 LE. Exact and platform-stable.
std::vector<std::uint8_t> encode_model(const ModelVector& model);
ModelVector decode_model(std::span<const std::uint8_t> bytes);

}  // namespace tfl

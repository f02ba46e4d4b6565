#include "tfl/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace tfl {
namespace {

void check_same_dim(const ModelVector& a, const ModelVector& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("model dimension mismatch");
    }
}

constexpr std::uint8_t kMagic[4] = {'T', 'F', 'L', 'M'};

}  // namespace

bool ModelVector::all_finite() const noexcept {
    for (double v : values_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

double ModelVector::dot(const ModelVector& other) const {
    check_same_dim(*this, other);
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        s += values_[i] * other.values_[i];
    }
    return s;
}

double ModelVector::norm() const { return std::sqrt(dot(*this)); }

ModelVector& ModelVector::operator+=(const ModelVector& other) {
    check_same_dim(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] += other.values_[i];
    }
    return *this;
}

ModelVector operator*(double s, ModelVector v) {
    for (double& x : v.values_) {
        x *= s;
    }
    return v;
}

void ValidationSet::validate() const {
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("validation set must have at least one row and column");
    }
    if (inputs.size() != rows * cols || targets.size() != rows) {
        throw std::invalid_argument("validation set shape mismatch");
    }
    for (double v : inputs) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("validation inputs must be finite");
        }
    }
    for (double v : targets) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("validation targets must be finite");
        }
    }
}

std::vector<std::uint8_t> encode_model(const ModelVector& model) {
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    const auto dim = static_cast<std::uint32_t>(model.dim());
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(dim >> (8 * i)));
    }
    for (double v : model.values()) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }
    return out;
}

ModelVector decode_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
        throw std::invalid_argument("decode_model: bad header");
    }
    std::uint32_t dim = 0;
    for (int i = 0; i < 4; ++i) {
        dim |= static_cast<std::uint32_t>(bytes[4 + i]) << (8 * i);
    }
    if (bytes.size() != 8 + 8 * static_cast<std::size_t>(dim)) {
        throw std::invalid_argument("decode_model: length does not match dimension");
    }
    std::vector<double> values(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(bytes[8 + 8 * k + i]) << (8 * i);
        }
        values[k] = std::bit_cast<double>(bits);
    }
    return ModelVector(std::move(values));
}

}  // namespace tfl

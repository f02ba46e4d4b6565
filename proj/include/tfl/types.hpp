#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tfl {

/// Opaque participant identity. Ordering is plain byte-wise string order and
/// serves as the final tie-break everywhere a total order is needed.
class NodeId {
public:
    NodeId() = default;
    explicit NodeId(std::string value) : value_(std::move(value)) {}

    const std::string& str() const noexcept { return value_; }

    friend bool operator==(const NodeId&, const NodeId&) = default;
    friend std::strong_ordering operator<=>(const NodeId& a, const NodeId& b) {
        return a.value_.compare(b.value_) <=> 0;
    }
    friend std::ostream& operator<<(std::ostream& os, const NodeId& id) {
        return os << id.value_;
    }

private:
    std::string value_;
};

using Round = std::uint64_t;

/// Token amounts on the contract are integers in units of 1e-6 token.
using MicroTokens = std::int64_t;
inline constexpr std::int64_t kMicro = 1'000'000;

/// Rounds x to the nearest integer, ties to even. Throws on non-finite input
/// or values outside the int64 range.
std::int64_t round_half_even(double x);

/// Real value expressed in integer micro-units (x * 1e6), ties to even.
inline std::int64_t to_micro(double x) { return round_half_even(x * static_cast<double>(kMicro)); }
inline double from_micro(std::int64_t m) { return static_cast<double>(m) / static_cast<double>(kMicro); }

/// Instrumentation for comparison-based work (sorting, screening tests).
struct OpCounter {
    std::uint64_t comparisons = 0;
};

/// Raised when a configuration value violates its documented range.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace tfl

template <>
struct std::hash<tfl::NodeId> {
    std::size_t operator()(const tfl::NodeId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};

#include "tfl/types.hpp"

#include <cmath>
#include <limits>

namespace tfl {

std::int64_t round_half_even(double x) {
    if (!std::isfinite(x)) {
        throw std::domain_error("round_half_even: non-finite value");
    }
    // 2^63 is exactly representable; anything at or beyond it overflows.
    constexpr double kLimit = 9223372036854775808.0;
    const double r = std::nearbyint(x);  // default FE_TONEAREST is ties-to-even
    if (r >= kLimit || r < -kLimit) {
        throw std::out_of_range("round_half_even: value exceeds int64 range");
    }
    return static_cast<std::int64_t>(r);
}

}  // namespace tfl

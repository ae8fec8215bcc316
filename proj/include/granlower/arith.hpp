#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace granlower {

using Label = std::int64_t;
using Instant = std::int64_t;

/// Raised when period arithmetic leaves the 64-bit range.
class OverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// Floor division; the divisor must be positive.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

/// Result is always in [0, b) for b > 0.
constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t b)
{
    return a - floor_div(a, b) * b;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b)
{
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        throw OverflowError("integer overflow in " + std::to_string(a) + " * " + std::to_string(b));
    return r;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b)
{
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r))
        throw OverflowError("integer overflow in " + std::to_string(a) + " + " + std::to_string(b));
    return r;
}

inline std::int64_t checked_lcm(std::int64_t a, std::int64_t b)
{
    if (a == 0 || b == 0)
        return 0;
    const std::int64_t g = std::gcd(a, b);
    return checked_mul(a / g < 0 ? -(a / g) : a / g, b < 0 ? -b : b);
}

} // namespace granlower

#pragma once

#include <cstdint>
#include <vector>

#include "granlower/granularity.hpp"

namespace granlower {

/// True when (P/alpha, N/alpha) is also a valid period for rep, i.e. shifting
/// the pattern by N/alpha labels and P/alpha instants maps it onto itself.
/// alpha must divide gcd(P, N, R); otherwise the answer is false.
bool is_valid_reduction(const PeriodicRep& rep, std::int64_t alpha);

/// Applies a reduction already known to be valid.
PeriodicRep reduce(const PeriodicRep& rep, std::int64_t alpha);

/// Inverse of reduce: the same granularity described with (alpha P, alpha N).
PeriodicRep inflate(const PeriodicRep& rep, std::int64_t alpha);

/// Smallest-period representation; idempotent. Bounds are preserved.
PeriodicRep minimize(const PeriodicRep& rep);
Granularity minimize(const Granularity& g);

std::vector<std::int64_t> prime_factors(std::int64_t n);

} // namespace granlower

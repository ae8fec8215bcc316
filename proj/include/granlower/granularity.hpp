#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "granlower/arith.hpp"

namespace granlower {

/// Bottom-granule indices forming one granule. Strictly ascending, not
/// necessarily contiguous.
using GranuleSet = std::vector<Instant>;

struct Granule {
    Label label = 0;
    GranuleSet instants;

    bool operator==(const Granule&) const = default;
};

/// Labels of the first and last non-empty granule. An absent side is infinite.
struct Bounds {
    std::optional<Label> first;
    std::optional<Label> last;

    bool operator==(const Bounds&) const = default;
};

class GranularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A granularity described periodically in terms of the bottom granularity.
///
/// The explicit granules are the ones labeled l .. l+N-1, where l (the anchor)
/// labels the granule covering the smallest positive bottom instant that the
/// granularity covers. Every other granule is an explicit one translated by a
/// whole number of periods: G(j + N) = G(j) + P.
///
/// Values are immutable once built.
class PeriodicRep {
public:
    /// Builds a rep from already aligned explicit granules; throws
    /// GranularityError if any structural invariant is violated.
    static PeriodicRep make(std::int64_t period, std::int64_t label_distance,
                            std::vector<Granule> granules, std::optional<Bounds> bounds = std::nullopt);

    /// P=1, N=1, one granule {1} labeled 1.
    static PeriodicRep bottom();

    std::int64_t period() const { return period_; }
    std::int64_t label_distance() const { return label_distance_; }
    /// R: number of explicit granules.
    std::int64_t granule_count() const { return static_cast<std::int64_t>(granules_.size()); }
    Label anchor() const { return granules_.front().label; }
    std::span<const Granule> explicit_granules() const { return granules_; }
    const std::optional<Bounds>& bounds() const { return bounds_; }

    /// Every integer is a label with a non-empty granule.
    bool full_integer() const { return granule_count() == label_distance_ && !bounds_; }

    bool has_label(Label j) const;
    GranuleSet expand(Label j) const;
    std::optional<Label> up(Instant t) const;

    std::optional<Label> next_label(Label j) const;
    std::optional<Label> prev_label(Label j) const;

    /// Position of label j counted in granules from the anchor (anchor = 0).
    /// Ignores bounds; j must be congruent to an explicit label.
    std::int64_t ordinal(Label j) const;
    Label label_at_ordinal(std::int64_t n) const;

    /// Labels whose granules cover at least one instant in [1, horizon].
    std::vector<Label> lhat(std::int64_t horizon) const;
    std::vector<Granule> lhat_granules(std::int64_t horizon) const;

    /// Labels (within bounds) whose granules intersect [lo, hi], ascending.
    std::vector<Label> labels_intersecting(Instant lo, Instant hi) const;

    PeriodicRep with_bounds(std::optional<Bounds> bounds) const;

    bool operator==(const PeriodicRep& other) const
    {
        return period_ == other.period_ && label_distance_ == other.label_distance_ &&
               granules_ == other.granules_ && bounds_ == other.bounds_;
    }

private:
    PeriodicRep() = default;

    bool in_bounds(Label j) const;
    const Granule* find_explicit(Label k) const;

    std::int64_t period_ = 1;
    std::int64_t label_distance_ = 1;
    std::vector<Granule> granules_;
    std::vector<std::int64_t> offsets_;  // label - anchor, ascending
    std::vector<Granule> cover_;         // granules meeting [1, P]
    std::optional<Bounds> bounds_;
};

/// A granularity without any non-empty granule.
struct EmptyRep {
    bool operator==(const EmptyRep&) const = default;
};

using Granularity = std::variant<EmptyRep, PeriodicRep>;

inline bool is_empty(const Granularity& g) { return std::holds_alternative<EmptyRep>(g); }

/// Expansion of label j given explicit granules whose labels lie in some
/// window b .. b+N-1 (b = smallest label). Works for unaligned windows.
GranuleSet expand_periodic(std::span<const Granule> window, std::int64_t period,
                           std::int64_t label_distance, Label j);

/// Re-anchors one period's worth of granules (labels within a window of N)
/// so the explicit set starts at the granule covering the smallest positive
/// covered instant.
PeriodicRep normalize_alignment(std::vector<Granule> granules, std::int64_t period,
                                std::int64_t label_distance, std::optional<Bounds> bounds = std::nullopt);

std::optional<Label> up_from_instant(const PeriodicRep& rep, Instant t);

/// Label of the granule of h containing g(z), if a single one does.
std::optional<Label> up_label(const PeriodicRep& g, const PeriodicRep& h, Label z);

/// Labels of g whose union is h(z). Throws if g does not group into h there.
std::vector<Label> down_label(const PeriodicRep& g, const PeriodicRep& h, Label z);

std::vector<Label> lhat(const PeriodicRep& rep, std::int64_t horizon);

/// Minimum distance, in granules of g2, between consecutive granules of g1.
/// g2 must partition g1.
std::int64_t mindist(const PeriodicRep& g1, const PeriodicRep& g2);

/// First and last label of g2 covering the given granule of g1; throws unless
/// the granule is exactly the union of that label run.
std::pair<Label, Label> covering_run(const PeriodicRep& g2, const GranuleSet& granule);

} // namespace granlower

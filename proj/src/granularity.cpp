#include "granlower/granularity.hpp"

#include <algorithm>
#include <sstream>

namespace granlower {

namespace {

[[noreturn]] void fail(const std::string& msg)
{
    throw GranularityError(msg);
}

GranuleSet shifted(const GranuleSet& s, std::int64_t delta)
{
    GranuleSet out;
    out.reserve(s.size());
    for (Instant x : s)
        out.push_back(checked_add(x, delta));
    return out;
}

bool intersects(const GranuleSet& s, Instant lo, Instant hi)
{
    if (s.empty() || s.back() < lo || s.front() > hi)
        return false;
    auto it = std::lower_bound(s.begin(), s.end(), lo);
    return it != s.end() && *it <= hi;
}

} // namespace

PeriodicRep PeriodicRep::make(std::int64_t period, std::int64_t label_distance,
                              std::vector<Granule> granules, std::optional<Bounds> bounds)
{
    if (period <= 0 || label_distance <= 0)
        fail("period length and label distance must be positive");
    if (granules.empty())
        fail("a periodic representation needs at least one explicit granule");
    if (static_cast<std::int64_t>(granules.size()) > label_distance)
        fail("more explicit granules than the label distance allows");

    for (std::size_t i = 0; i < granules.size(); ++i) {
        const auto& g = granules[i];
        if (g.instants.empty())
            fail("explicit granule " + std::to_string(g.label) + " is empty");
        if (!std::is_sorted(g.instants.begin(), g.instants.end()) ||
            std::adjacent_find(g.instants.begin(), g.instants.end()) != g.instants.end())
            fail("granule " + std::to_string(g.label) + " is not strictly ascending");
        if (i > 0) {
            const auto& prev = granules[i - 1];
            if (prev.label >= g.label)
                fail("explicit labels must be strictly ascending");
            if (prev.instants.back() >= g.instants.front())
                fail("granules " + std::to_string(prev.label) + " and " + std::to_string(g.label) +
                     " violate monotonicity");
        }
    }
    const Label l = granules.front().label;
    if (granules.back().label - l >= label_distance)
        fail("explicit labels do not fit in one period label window");
    // Wrap-around monotonicity: last granule precedes the anchor's next copy.
    if (granules.back().instants.back() >= checked_add(granules.front().instants.front(), period))
        fail("explicit granules overlap their own periodic translation");
    if (granules.front().instants.back() < 1 || granules.back().instants.back() > period)
        fail("explicit granules are not aligned to bottom instant 1");

    PeriodicRep rep;
    rep.period_ = period;
    rep.label_distance_ = label_distance;
    rep.granules_ = std::move(granules);
    for (const auto& g : rep.granules_)
        rep.offsets_.push_back(g.label - l);

    rep.cover_ = rep.granules_;
    if (rep.granules_.front().instants.front() <= 0)
        rep.cover_.push_back({checked_add(l, label_distance), shifted(rep.granules_.front().instants, period)});

    if (bounds) {
        if (bounds->first && !rep.has_label(*bounds->first))
            fail("first bound is not a label");
        if (bounds->last && !rep.has_label(*bounds->last))
            fail("last bound is not a label");
        if (bounds->first && bounds->last && *bounds->first > *bounds->last)
            fail("bounds are inverted");
        if (!bounds->first && !bounds->last)
            bounds.reset();
    }
    rep.bounds_ = bounds;
    return rep;
}

PeriodicRep PeriodicRep::bottom()
{
    return make(1, 1, {{1, {1}}});
}

bool PeriodicRep::in_bounds(Label j) const
{
    if (!bounds_)
        return true;
    if (bounds_->first && j < *bounds_->first)
        return false;
    if (bounds_->last && j > *bounds_->last)
        return false;
    return true;
}

const Granule* PeriodicRep::find_explicit(Label k) const
{
    auto it = std::lower_bound(granules_.begin(), granules_.end(), k,
                               [](const Granule& g, Label v) { return g.label < v; });
    if (it == granules_.end() || it->label != k)
        return nullptr;
    return &*it;
}

bool PeriodicRep::has_label(Label j) const
{
    const std::int64_t r = floor_mod(j - anchor(), label_distance_);
    return std::binary_search(offsets_.begin(), offsets_.end(), r) && in_bounds(j);
}

GranuleSet PeriodicRep::expand(Label j) const
{
    if (!in_bounds(j))
        return {};
    return expand_periodic(granules_, period_, label_distance_, j);
}

std::optional<Label> PeriodicRep::up(Instant t) const
{
    const Instant reduced = floor_mod(t - 1, period_) + 1;
    const std::int64_t periods = floor_div(t - 1, period_);
    auto it = std::upper_bound(cover_.begin(), cover_.end(), reduced,
                               [](Instant v, const Granule& g) { return v < g.instants.front(); });
    if (it == cover_.begin())
        return std::nullopt;
    --it;
    if (!std::binary_search(it->instants.begin(), it->instants.end(), reduced))
        return std::nullopt;
    const Label label = checked_add(it->label, checked_mul(periods, label_distance_));
    if (!in_bounds(label))
        return std::nullopt;
    return label;
}

std::int64_t PeriodicRep::ordinal(Label j) const
{
    const std::int64_t q = floor_div(j - anchor(), label_distance_);
    const std::int64_t r = j - anchor() - q * label_distance_;
    auto it = std::lower_bound(offsets_.begin(), offsets_.end(), r);
    if (it == offsets_.end() || *it != r)
        fail("label " + std::to_string(j) + " is not a label of the granularity");
    return checked_add(checked_mul(q, granule_count()), it - offsets_.begin());
}

Label PeriodicRep::label_at_ordinal(std::int64_t n) const
{
    const std::int64_t q = floor_div(n, granule_count());
    const std::int64_t pos = n - q * granule_count();
    return checked_add(anchor(), checked_add(checked_mul(q, label_distance_), offsets_[pos]));
}

std::optional<Label> PeriodicRep::next_label(Label j) const
{
    const std::int64_t q = floor_div(j - anchor(), label_distance_);
    const std::int64_t r = j - anchor() - q * label_distance_;
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), r);
    Label next = it == offsets_.end() ? anchor() + (q + 1) * label_distance_ + offsets_.front()
                                      : anchor() + q * label_distance_ + *it;
    if (bounds_ && bounds_->first && next < *bounds_->first)
        next = *bounds_->first;
    if (!in_bounds(next))
        return std::nullopt;
    return next;
}

std::optional<Label> PeriodicRep::prev_label(Label j) const
{
    const std::int64_t q = floor_div(j - anchor(), label_distance_);
    const std::int64_t r = j - anchor() - q * label_distance_;
    auto it = std::lower_bound(offsets_.begin(), offsets_.end(), r);
    Label prev = it == offsets_.begin() ? anchor() + (q - 1) * label_distance_ + offsets_.back()
                                        : anchor() + q * label_distance_ + *std::prev(it);
    if (bounds_ && bounds_->last && prev > *bounds_->last)
        prev = *bounds_->last;
    if (!in_bounds(prev))
        return std::nullopt;
    return prev;
}

std::vector<Granule> PeriodicRep::lhat_granules(std::int64_t horizon) const
{
    if (horizon <= 0 || horizon % period_ != 0)
        fail("horizon " + std::to_string(horizon) + " is not a positive multiple of the period " +
             std::to_string(period_));
    const std::int64_t k = horizon / period_;
    std::vector<Granule> out;
    out.reserve(static_cast<std::size_t>(k) * granules_.size() + 1);
    for (std::int64_t c = 0; c < k; ++c)
        for (const auto& g : granules_)
            out.push_back({g.label + c * label_distance_, shifted(g.instants, c * period_)});
    if (granules_.front().instants.front() <= 0)
        out.push_back({checked_add(anchor(), checked_mul(k, label_distance_)),
                       shifted(granules_.front().instants, checked_mul(k, period_))});
    return out;
}

std::vector<Label> PeriodicRep::lhat(std::int64_t horizon) const
{
    if (horizon <= 0 || horizon % period_ != 0)
        fail("horizon " + std::to_string(horizon) + " is not a positive multiple of the period " +
             std::to_string(period_));
    const std::int64_t k = horizon / period_;
    std::vector<Label> out;
    for (std::int64_t c = 0; c < k; ++c)
        for (const auto& g : granules_)
            out.push_back(g.label + c * label_distance_);
    if (granules_.front().instants.front() <= 0)
        out.push_back(checked_add(anchor(), checked_mul(k, label_distance_)));
    return out;
}

std::vector<Label> PeriodicRep::labels_intersecting(Instant lo, Instant hi) const
{
    std::vector<Label> out;
    if (lo > hi)
        return out;
    // Each granule spans less than one period, so copies outside these
    // period indices cannot reach [lo, hi].
    const std::int64_t c_lo = floor_div(lo, period_) - 2;
    const std::int64_t c_hi = floor_div(hi, period_) + 2;
    for (std::int64_t c = c_lo; c <= c_hi; ++c) {
        const std::int64_t delta = checked_mul(c, period_);
        for (const auto& g : granules_) {
            if (g.instants.back() + delta < lo || g.instants.front() + delta > hi)
                continue;
            const Label label = g.label + c * label_distance_;
            if (in_bounds(label) && intersects(g.instants, lo - delta, hi - delta))
                out.push_back(label);
        }
    }
    return out;
}

PeriodicRep PeriodicRep::with_bounds(std::optional<Bounds> bounds) const
{
    return make(period_, label_distance_, granules_, std::move(bounds));
}

GranuleSet expand_periodic(std::span<const Granule> window, std::int64_t period,
                           std::int64_t label_distance, Label j)
{
    if (window.empty())
        return {};
    const std::int64_t n = label_distance;
    const Label b = window.front().label;
    const Label j_red = floor_mod(j - 1, n) + 1;
    Label k = floor_div(b - 1, n) * n + j_red;
    if (k < b)
        k = (floor_div(b - 1, n) + 1) * n + j_red;
    auto it = std::lower_bound(window.begin(), window.end(), k,
                               [](const Granule& g, Label v) { return g.label < v; });
    if (it == window.end() || it->label != k)
        return {};
    const std::int64_t periods = floor_div(j - 1, n) - floor_div(k - 1, n);
    return shifted(it->instants, checked_mul(period, periods));
}

PeriodicRep normalize_alignment(std::vector<Granule> granules, std::int64_t period,
                                std::int64_t label_distance, std::optional<Bounds> bounds)
{
    if (granules.empty())
        fail("cannot align an empty set of granules");
    if (period <= 0 || label_distance <= 0)
        fail("period length and label distance must be positive");
    std::sort(granules.begin(), granules.end(),
              [](const Granule& a, const Granule& b) { return a.label < b.label; });
    if (granules.back().label - granules.front().label >= label_distance)
        fail("granules do not describe a single period");

    // Find the granule (up to translation) covering the smallest positive
    // covered instant.
    Instant best = 0;
    Label anchor = 0;
    bool found = false;
    for (const auto& g : granules) {
        if (g.instants.empty())
            fail("granule " + std::to_string(g.label) + " is empty");
        for (Instant x : g.instants) {
            const Instant reduced = floor_mod(x - 1, period) + 1;
            if (!found || reduced < best) {
                best = reduced;
                anchor = checked_add(g.label, checked_mul((reduced - x) / period, label_distance));
                found = true;
            }
        }
    }

    std::vector<Granule> aligned;
    aligned.reserve(granules.size());
    for (auto& g : granules) {
        const Label target = anchor + floor_mod(g.label - anchor, label_distance);
        const std::int64_t periods = (target - g.label) / label_distance;
        aligned.push_back({target, periods == 0 ? std::move(g.instants)
                                                : shifted(g.instants, checked_mul(periods, period))});
    }
    std::sort(aligned.begin(), aligned.end(),
              [](const Granule& a, const Granule& b) { return a.label < b.label; });
    return PeriodicRep::make(period, label_distance, std::move(aligned), std::move(bounds));
}

std::optional<Label> up_from_instant(const PeriodicRep& rep, Instant t)
{
    return rep.up(t);
}

std::optional<Label> up_label(const PeriodicRep& g, const PeriodicRep& h, Label z)
{
    const GranuleSet source = g.expand(z);
    if (source.empty())
        return std::nullopt;
    const auto target = h.up(source.front());
    if (!target)
        return std::nullopt;
    const GranuleSet container = h.expand(*target);
    if (!std::includes(container.begin(), container.end(), source.begin(), source.end()))
        return std::nullopt;
    return target;
}

std::vector<Label> down_label(const PeriodicRep& g, const PeriodicRep& h, Label z)
{
    const GranuleSet target = h.expand(z);
    std::vector<Label> out;
    for (Instant t : target) {
        const auto label = g.up(t);
        if (!label) {
            std::ostringstream msg;
            msg << "bottom instant " << t << " of granule " << z << " is not covered";
            fail(msg.str());
        }
        if (out.empty() || out.back() != *label)
            out.push_back(*label);
    }
    for (Label j : out) {
        const GranuleSet part = g.expand(j);
        const auto from = std::lower_bound(target.begin(), target.end(), part.front());
        const auto to = std::upper_bound(from, target.end(), part.back());
        if (!std::includes(from, to, part.begin(), part.end()))
            fail("granule " + std::to_string(j) + " is not contained in granule " + std::to_string(z));
    }
    return out;
}

std::vector<Label> lhat(const PeriodicRep& rep, std::int64_t horizon)
{
    return rep.lhat(horizon);
}

std::pair<Label, Label> covering_run(const PeriodicRep& g2, const GranuleSet& granule)
{
    const auto first = g2.up(granule.front());
    const auto last = g2.up(granule.back());
    if (!first || !last)
        fail("granule is not covered by the partitioning granularity");
    std::size_t pos = 0;
    for (std::optional<Label> j = first; j && *j <= *last; j = g2.next_label(*j)) {
        const GranuleSet part = g2.expand(*j);
        for (Instant x : part) {
            if (pos >= granule.size() || granule[pos] != x)
                fail("granule is not a union of consecutive granules of the partitioning granularity");
            ++pos;
        }
    }
    if (pos != granule.size())
        fail("granule is not a union of consecutive granules of the partitioning granularity");
    return {*first, *last};
}

std::int64_t mindist(const PeriodicRep& g1, const PeriodicRep& g2)
{
    const std::int64_t horizon = checked_lcm(g1.period(), g2.period());
    std::vector<Label> labels = g1.lhat(horizon);
    const auto wrap = g1.next_label(labels.back());
    if (wrap)
        labels.push_back(*wrap);
    std::int64_t best = -1;
    Label prev_start = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto run = covering_run(g2, g1.expand(labels[i]));
        if (i > 0) {
            const std::int64_t d = run.first - prev_start;
            if (best < 0 || d < best)
                best = d;
        }
        prev_start = run.first;
    }
    if (best < 0)
        fail("mindist needs at least two granules");
    return best;
}

} // namespace granlower

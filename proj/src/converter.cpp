#include "granlower/converter.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <set>

#include "granlower/minimizer.hpp"

namespace granlower {

ConversionError::ConversionError(const std::string& message, std::string path)
    : std::runtime_error(path.empty() ? message : "at " + path + ": " + message),
      detail_(message), path_(std::move(path))
{
}

std::int64_t max_period_from_env()
{
    const char* raw = std::getenv("GRANLOWER_MAX_PERIOD");
    if (!raw || !*raw)
        return kDefaultMaxPeriod;
    char* end = nullptr;
    const long long v = std::strtoll(raw, &end, 10);
    if (*end != '\0' || v <= 0)
        throw ConversionError(std::string("GRANLOWER_MAX_PERIOD must be a positive integer, got '") + raw + "'");
    return v;
}

std::vector<Label> delta_select(const std::vector<Label>& s, std::int64_t k, std::int64_t l)
{
    std::vector<Label> out;
    if (k == 0 || l <= 0)
        return out;
    const auto size = static_cast<std::int64_t>(s.size());
    // 0-based index of the k-th element; negative k counts back from the end.
    const std::int64_t start = k > 0 ? k - 1 : size + k;
    for (std::int64_t p = start; p < start + l; ++p)
        if (p >= 0 && p < size)
            out.push_back(s[static_cast<std::size_t>(p)]);
    return out;
}

namespace {

void check_period(std::int64_t period, std::int64_t cap, const char* op)
{
    if (period <= 0)
        throw ConversionError(std::string(op) + ": computed period length " + std::to_string(period) +
                              " is not positive");
    if (period > cap)
        throw ConversionError(std::string(op) + ": period length " + std::to_string(period) +
                              " exceeds the cap of " + std::to_string(cap) + " (GRANLOWER_MAX_PERIOD)");
}

void require_full_integer(const PeriodicRep& g, const char* op, const char* role)
{
    if (!g.full_integer())
        throw ConversionError(std::string(op) + ": " + role + " operand must be full-integer labeled");
}

PeriodicRep build(std::vector<Granule> granules, std::int64_t period, std::int64_t n, const char* op)
{
    try {
        return normalize_alignment(std::move(granules), period, n);
    } catch (const GranularityError& e) {
        throw ConversionError(std::string(op) + ": result is not a valid granularity (" + e.what() + ")");
    }
}

bool subset_of(const GranuleSet& inner, const GranuleSet& outer)
{
    if (inner.empty())
        return false;
    // Only the stretch of outer between inner's ends matters; large
    // containers would otherwise make every test linear in their size.
    const auto from = std::lower_bound(outer.begin(), outer.end(), inner.front());
    const auto to = std::upper_bound(from, outer.end(), inner.back());
    return std::includes(from, to, inner.begin(), inner.end());
}

GranuleSet merge(const GranuleSet& a, const GranuleSet& b)
{
    GranuleSet out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

/// Distinct labels of g meeting the instants of s, ascending.
std::vector<Label> labels_meeting(const PeriodicRep& g, const GranuleSet& s)
{
    std::vector<Label> out;
    for (Instant t : s)
        if (auto j = g.up(t); j && (out.empty() || out.back() != *j))
            out.push_back(*j);
    return out;
}

/// Keeps the labels of lhat_labels (all covering [1, P']) within one label
/// distance of the smallest, then builds the rep from g's granules.
Granularity finish(std::vector<Label> lhat_labels, const PeriodicRep& source, std::int64_t period,
                   std::int64_t n, const char* op)
{
    if (lhat_labels.empty())
        return EmptyRep{};
    std::sort(lhat_labels.begin(), lhat_labels.end());
    lhat_labels.erase(std::unique(lhat_labels.begin(), lhat_labels.end()), lhat_labels.end());
    const Label lo = lhat_labels.front();
    std::vector<Granule> granules;
    for (Label i : lhat_labels)
        if (i < lo + n)
            granules.push_back({i, source.expand(i)});
    return build(std::move(granules), period, n, op);
}

std::set<Label> label_set(const std::vector<Label>& v)
{
    return {v.begin(), v.end()};
}

} // namespace

PeriodicRep convert_group(const PeriodicRep& g, std::int64_t m, std::int64_t max_period)
{
    if (m < 1)
        throw ConversionError("group: factor must be positive");
    require_full_integer(g, "group", "the");
    const std::int64_t d = std::gcd(m, g.label_distance());
    const std::int64_t period = checked_mul(g.period(), m / d);
    const std::int64_t n = g.label_distance() / d;
    check_period(period, max_period, "group");

    const Label first = floor_div(g.anchor() - 1, m) + 1;
    std::vector<Granule> granules;
    granules.reserve(static_cast<std::size_t>(n));
    for (Label i = first; i < first + n; ++i) {
        GranuleSet s;
        for (Label j = (i - 1) * m + 1; j <= i * m; ++j) {
            const GranuleSet part = g.expand(j);
            s.insert(s.end(), part.begin(), part.end());
        }
        granules.push_back({i, std::move(s)});
    }
    return build(std::move(granules), period, n, "group");
}

PeriodicRep convert_alter(const PeriodicRep& g2, const PeriodicRep& g1, std::int64_t l, std::int64_t k,
                          std::int64_t m, std::int64_t max_period)
{
    if (m < 1 || l < 1 || l > m)
        throw ConversionError("alter: parameters must satisfy 1 <= l <= m");
    require_full_integer(g1, "alter", "the altered");
    require_full_integer(g2, "alter", "the partitioning");

    // Partition check and mindist over one common period plus the wrap pair.
    const std::int64_t horizon = checked_lcm(g1.period(), g2.period());
    std::vector<Label> labels = g1.lhat(horizon);
    labels.push_back(labels.back() + 1);
    std::int64_t min_gap = -1;
    std::optional<std::pair<Label, Label>> prev;
    for (Label i : labels) {
        std::pair<Label, Label> run;
        try {
            run = covering_run(g2, g1.expand(i));
        } catch (const GranularityError& e) {
            throw ConversionError(std::string("alter: partitioning operand does not partition the altered one (") +
                                  e.what() + ")");
        }
        if (prev) {
            if (prev->second + 1 != run.first)
                throw ConversionError("alter: granules " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                      " are not separated by consecutive partitioning granules");
            const std::int64_t gap = run.first - prev->first;
            if (min_gap < 0 || gap < min_gap)
                min_gap = gap;
        }
        prev = run;
    }
    if (k != 0 && k <= -(min_gap - 1))
        throw ConversionError("alter: k = " + std::to_string(k) + " violates k > -(mindist - 1) with mindist = " +
                              std::to_string(min_gap));

    const std::int64_t n1 = g1.label_distance();
    const std::int64_t p1 = g1.period();
    const std::int64_t n2 = g2.label_distance();
    const std::int64_t p2 = g2.period();
    const std::int64_t abs_k = k < 0 ? -k : k;
    const std::int64_t c = checked_mul(p2, n1);
    std::int64_t n = std::lcm(n1, m);
    n = checked_lcm(n, c / std::gcd(c, p1));
    const std::int64_t e = checked_mul(n2, m);
    n = checked_lcm(n, abs_k == 0 ? 1 : e / std::gcd(e, abs_k));
    // P' = N'P1/N1 + (N'k/(m N2)) P2; both quotients are exact by choice of N'.
    const std::int64_t period =
        checked_add(checked_mul(n / n1, p1), checked_mul(checked_mul(n, k) / e, p2));
    check_period(period, max_period, "alter");

    auto altered = [&](Label i) {
        const auto [b, t] = covering_run(g2, g1.expand(i));
        const std::int64_t h = floor_div(i - l, m) + 1;
        const Label b2 = (i == (h - 1) * m + l) ? b + (h - 1) * k : b + h * k;
        const Label t2 = t + h * k;
        GranuleSet s;
        for (Label j = b2; j <= t2; ++j) {
            const GranuleSet part = g2.expand(j);
            s.insert(s.end(), part.begin(), part.end());
        }
        return s;
    };

    std::vector<Granule> granules;
    granules.reserve(static_cast<std::size_t>(n));
    for (Label i = 1; i <= n; ++i) {
        GranuleSet s = altered(i);
        if (s.empty())
            throw ConversionError("alter: granule " + std::to_string(i) + " became empty");
        granules.push_back({i, std::move(s)});
    }
    // Cheap self-check of the period formula on the next copy of granule 1.
    GranuleSet next = altered(n + 1);
    for (Instant& x : next)
        x -= period;
    if (next != granules.front().instants)
        throw ConversionError("alter: result does not repeat with the computed period " + std::to_string(period));
    return build(std::move(granules), period, n, "alter");
}

PeriodicRep convert_shift(const PeriodicRep& g, std::int64_t m)
{
    require_full_integer(g, "shift", "the");
    std::vector<Granule> granules(g.explicit_granules().begin(), g.explicit_granules().end());
    for (auto& gr : granules)
        gr.label = checked_add(gr.label, m);
    return PeriodicRep::make(g.period(), g.label_distance(), std::move(granules));
}

Granularity convert_combine(const PeriodicRep& g1, const PeriodicRep& g2, std::int64_t max_period)
{
    const std::int64_t period = checked_lcm(g1.period(), g2.period());
    check_period(period, max_period, "combine");
    const std::int64_t n = period / g1.period() * g1.label_distance();

    std::vector<Granule> kept;
    for (const auto& gr : g1.lhat_granules(period)) {
        GranuleSet s;
        for (Label j : labels_meeting(g2, gr.instants)) {
            const GranuleSet part = g2.expand(j);
            if (subset_of(part, gr.instants))
                s = merge(s, part);
        }
        if (!s.empty())
            kept.push_back({gr.label, std::move(s)});
    }
    if (kept.empty())
        return EmptyRep{};
    const Label lo = kept.front().label;
    std::erase_if(kept, [&](const Granule& gr) { return gr.label >= lo + n; });
    return build(std::move(kept), period, n, "combine");
}

PeriodicRep convert_anchored(const PeriodicRep& g1, const PeriodicRep& g2, std::int64_t max_period)
{
    require_full_integer(g1, "anchor", "the grouped");
    const std::int64_t period = checked_lcm(g1.period(), g2.period());
    check_period(period, max_period, "anchor");
    const std::int64_t n = period / g2.period() * g2.label_distance();

    std::vector<Label> labels = g2.lhat(period);
    for (Label j : labels)
        if (g1.expand(j) != g2.expand(j))
            throw ConversionError("anchor: anchors are not a label-aligned subgranularity (label " +
                                  std::to_string(j) + ")");
    if (auto before = g2.prev_label(labels.front()))
        labels.insert(labels.begin(), *before);

    std::vector<Granule> granules;
    for (Label i : labels) {
        const auto next = g2.next_label(i);
        if (!next)
            throw ConversionError("anchor: anchor " + std::to_string(i) + " has no successor");
        GranuleSet s;
        for (Label j = i; j < *next; ++j) {
            const GranuleSet part = g1.expand(j);
            s.insert(s.end(), part.begin(), part.end());
        }
        auto hit = std::lower_bound(s.begin(), s.end(), Instant{1});
        if (hit != s.end() && *hit <= period)
            granules.push_back({i, std::move(s)});
    }
    if (granules.empty())
        throw ConversionError("anchor: no anchored granule covers the first period");
    const Label lo = granules.front().label;
    std::erase_if(granules, [&](const Granule& gr) { return gr.label >= lo + n; });
    return build(std::move(granules), period, n, "anchor");
}

Granularity convert_subset(const PeriodicRep& g, std::optional<Label> from, std::optional<Label> to)
{
    if (from && to && *from > *to)
        throw ConversionError("subset: lower bound exceeds upper bound");
    if (g.bounds())
        throw ConversionError("subset: operand is already bounded");
    std::optional<Label> first;
    std::optional<Label> last;
    if (from)
        first = g.has_label(*from) ? from : g.next_label(*from);
    if (to)
        last = g.has_label(*to) ? to : g.prev_label(*to);
    if (first && last && *first > *last)
        return EmptyRep{};
    return g.with_bounds(Bounds{first, last});
}

Granularity convert_select_down(const PeriodicRep& g1, const PeriodicRep& g2, std::int64_t k, std::int64_t l,
                                std::int64_t max_period)
{
    if (k == 0 || l < 1)
        throw ConversionError("selectdown: requires k != 0 and l > 0");
    const std::int64_t period = checked_lcm(g1.period(), g2.period());
    check_period(period, max_period, "selectdown");
    const std::int64_t n = period / g1.period() * g1.label_distance();

    const std::set<Label> lhat1 = label_set(g1.lhat(period));
    std::vector<Label> selected;
    for (const auto& container : g2.lhat_granules(period)) {
        std::vector<Label> inside;
        for (Label j : labels_meeting(g1, container.instants))
            if (subset_of(g1.expand(j), container.instants))
                inside.push_back(j);
        for (Label a : delta_select(inside, k, l))
            if (lhat1.count(a))
                selected.push_back(a);
    }
    return finish(std::move(selected), g1, period, n, "selectdown");
}

Granularity convert_select_up(const PeriodicRep& g1, const PeriodicRep& g2, std::int64_t max_period)
{
    const std::int64_t period = checked_lcm(g1.period(), g2.period());
    check_period(period, max_period, "selectup");
    const std::int64_t n = period / g1.period() * g1.label_distance();

    std::vector<Label> selected;
    for (const auto& gr : g1.lhat_granules(period)) {
        for (Label j : labels_meeting(g2, gr.instants)) {
            if (subset_of(g2.expand(j), gr.instants)) {
                selected.push_back(gr.label);
                break;
            }
        }
    }
    return finish(std::move(selected), g1, period, n, "selectup");
}

Granularity convert_select_intersect(const PeriodicRep& g1, const PeriodicRep& g2, std::int64_t k,
                                     std::int64_t l, std::int64_t max_period)
{
    if (k == 0 || l < 1)
        throw ConversionError("selectintersect: requires k != 0 and l > 0");
    const std::int64_t period = checked_lcm(g1.period(), g2.period());
    check_period(period, max_period, "selectintersect");
    const std::int64_t n = period / g1.period() * g1.label_distance();

    const std::vector<Granule> horizon1 = g1.lhat_granules(period);
    const std::set<Label> lhat1 = label_set(g1.lhat(period));
    // Every g2 granule meeting a g1 granule of the horizon, not only those
    // covering [1, P']: a g2 granule lying before instant 1 may still pick
    // a g1 granule that reaches into the horizon.
    const std::vector<Label> containers =
        g2.labels_intersecting(horizon1.front().instants.front(), horizon1.back().instants.back());
    std::vector<Label> selected;
    for (Label i : containers) {
        const std::vector<Label> meeting = labels_meeting(g1, g2.expand(i));
        for (Label a : delta_select(meeting, k, l))
            if (lhat1.count(a))
                selected.push_back(a);
    }
    return finish(std::move(selected), g1, period, n, "selectintersect");
}

Granularity convert_set_op(const PeriodicRep& g1, const PeriodicRep& g2, ast::SetKind kind,
                           std::int64_t max_period)
{
    const char* op = kind == ast::SetKind::Union ? "union"
                     : kind == ast::SetKind::Intersection ? "intersect"
                                                          : "difference";
    if (checked_mul(g1.label_distance(), g2.period()) != checked_mul(g2.label_distance(), g1.period()))
        throw ConversionError(std::string(op) + ": operands have different label densities N/P (" +
                              std::to_string(g1.label_distance()) + "/" + std::to_string(g1.period()) + " vs " +
                              std::to_string(g2.label_distance()) + "/" + std::to_string(g2.period()) + ")");
    const std::int64_t period = checked_lcm(g1.period(), g2.period());
    check_period(period, max_period, op);
    const std::int64_t n = period / g1.period() * g1.label_distance();

    const std::vector<Label> lhat1 = g1.lhat(period);
    const std::vector<Label> lhat2 = g2.lhat(period);
    auto check_shared = [&](const std::vector<Label>& labels, const PeriodicRep& other) {
        for (Label j : labels)
            if (other.has_label(j) && g1.expand(j) != g2.expand(j))
                throw ConversionError(std::string(op) + ": operands disagree on shared label " + std::to_string(j));
    };
    check_shared(lhat1, g2);
    check_shared(lhat2, g1);

    std::vector<Label> labels;
    switch (kind) {
    case ast::SetKind::Union:
        labels = lhat1;
        labels.insert(labels.end(), lhat2.begin(), lhat2.end());
        break;
    case ast::SetKind::Intersection:
        for (Label j : lhat1)
            if (g2.has_label(j))
                labels.push_back(j);
        break;
    case ast::SetKind::Difference:
        for (Label j : lhat1)
            if (!g2.has_label(j))
                labels.push_back(j);
        break;
    }
    if (labels.empty())
        return EmptyRep{};
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const Label lo = labels.front();
    std::vector<Granule> granules;
    for (Label j : labels)
        if (j < lo + n)
            granules.push_back({j, g1.has_label(j) ? g1.expand(j) : g2.expand(j)});
    return build(std::move(granules), period, n, op);
}

PeriodicRep relabel(const PeriodicRep& g, Label i, Label j)
{
    const PeriodicRep core = g.with_bounds(std::nullopt);
    if (!g.has_label(i))
        throw ConversionError("relabel: " + std::to_string(i) + " is not a label with a non-empty granule");
    const Label anchor = checked_add(j, -core.ordinal(i));
    std::vector<Granule> granules(core.explicit_granules().begin(), core.explicit_granules().end());
    for (std::size_t r = 0; r < granules.size(); ++r)
        granules[r].label = anchor + static_cast<Label>(r);
    std::optional<Bounds> bounds;
    if (g.bounds()) {
        bounds = Bounds{};
        if (g.bounds()->first)
            bounds->first = anchor + core.ordinal(*g.bounds()->first);
        if (g.bounds()->last)
            bounds->last = anchor + core.ordinal(*g.bounds()->last);
    }
    return PeriodicRep::make(g.period(), g.granule_count(), std::move(granules), bounds);
}

PeriodicRep gstp_relabel(const PeriodicRep& g)
{
    const PeriodicRep core = g.with_bounds(std::nullopt);
    const Label l = core.anchor();
    const Label i = core.expand(l).front() > 0 ? l : *core.next_label(l);
    if (g.bounds() && !g.has_label(i)) {
        // The chosen granule lies outside the bounds; number from there anyway.
        return relabel(core, i, 1).with_bounds(std::nullopt);
    }
    return relabel(g, i, 1);
}

Granularity gstp_relabel(const Granularity& g)
{
    if (is_empty(g))
        throw ConversionError("relabel: the granularity has no granules");
    return gstp_relabel(std::get<PeriodicRep>(g));
}

const Granularity* ConversionCache::find(const std::string& key) const
{
    auto it = table_.find(key);
    if (it == table_.end())
        return nullptr;
    ++hits_;
    return &it->second;
}

void ConversionCache::store(const std::string& key, Granularity g)
{
    table_.insert_or_assign(key, std::move(g));
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const char* op_name(const Expr& e)
{
    return std::visit(overloaded{
                          [](const ast::BottomRef&) { return "bottom"; },
                          [](const ast::NameRef&) { return "name"; },
                          [](const ast::Group&) { return "group"; },
                          [](const ast::Alter&) { return "alter"; },
                          [](const ast::Shift&) { return "shift"; },
                          [](const ast::Combine&) { return "combine"; },
                          [](const ast::Anchored&) { return "anchor"; },
                          [](const ast::Subset&) { return "subset"; },
                          [](const ast::SelectDown&) { return "selectdown"; },
                          [](const ast::SelectUp&) { return "selectup"; },
                          [](const ast::SelectIntersect&) { return "selectintersect"; },
                          [](const ast::SetOp& s) {
                              return s.kind == ast::SetKind::Union          ? "union"
                                     : s.kind == ast::SetKind::Intersection ? "intersect"
                                                                            : "difference";
                          },
                      },
                      e.node);
}

class Lowering {
public:
    Lowering(ConversionCache* cache, const ConvertOptions& options, StepTrace* trace)
        : cache_(cache), options_(options), trace_(trace)
    {
    }

    Granularity run(const Expr& e, const std::string& path)
    {
        if (const auto* ref = std::get_if<ast::NameRef>(&e.node))
            throw ConversionError("unresolved name '" + ref->name + "'; rewrite the expression to the bottom first",
                                  path);
        const std::string key = (options_.minimize ? "m|" : "u|") + canonical_key(e);
        if (cache_) {
            if (const Granularity* hit = cache_->find(key)) {
                record(e, path, *hit, true);
                return *hit;
            }
        }

        // Children first; their paths carry the argument position.
        std::vector<Granularity> args;
        const std::vector<ExprPtr> kids = children(e);
        args.reserve(kids.size());
        std::size_t arg_pos = 0;
        for (const auto& kid : kids) {
            arg_pos = argument_position(e, arg_pos);
            args.push_back(run(*kid, path + op_name(e) + "." + std::to_string(arg_pos) + "/"));
        }

        Granularity result;
        try {
            result = apply(e, args);
            if (options_.minimize)
                result = minimize(result);
        } catch (const ConversionError& err) {
            throw ConversionError(err.detail(), where(e, path));
        } catch (const GranularityError& err) {
            throw ConversionError(std::string(op_name(e)) + ": " + err.what(), where(e, path));
        } catch (const OverflowError& err) {
            throw ConversionError(std::string(op_name(e)) + ": " + err.what(), where(e, path));
        }
        if (cache_)
            cache_->store(key, result);
        record(e, path, result, false);
        return result;
    }

private:
    static std::string where(const Expr& e, const std::string& path)
    {
        return path + op_name(e);
    }

    // 1-based position of the next expression argument in the surface syntax.
    static std::size_t argument_position(const Expr& e, std::size_t prev)
    {
        std::size_t leading = 0;
        if (std::holds_alternative<ast::Group>(e.node) || std::holds_alternative<ast::Shift>(e.node))
            leading = 1;
        else if (std::holds_alternative<ast::Alter>(e.node))
            leading = 3;
        else if (std::holds_alternative<ast::Subset>(e.node) || std::holds_alternative<ast::SelectDown>(e.node) ||
                 std::holds_alternative<ast::SelectIntersect>(e.node))
            leading = 2;
        return prev == 0 ? leading + 1 : prev + 1;
    }

    void record(const Expr& e, const std::string& path, const Granularity& g, bool cached)
    {
        if (!trace_)
            return;
        TraceEntry t;
        t.path = where(e, path);
        t.expr = print_expr(e, "bottom");
        t.cached = cached;
        if (const auto* rep = std::get_if<PeriodicRep>(&g)) {
            t.period = rep->period();
            t.label_distance = rep->label_distance();
            t.anchor = rep->anchor();
            t.granule_count = rep->granule_count();
        } else {
            t.empty = true;
        }
        trace_->push_back(std::move(t));
    }

    static const PeriodicRep& unbounded(const Granularity& g, const char* op)
    {
        const auto& rep = std::get<PeriodicRep>(g);
        if (rep.bounds())
            throw ConversionError(std::string(op) + ": bounded operands are only allowed as the final subset step");
        return rep;
    }

    Granularity apply(const Expr& e, const std::vector<Granularity>& a)
    {
        const std::int64_t cap = options_.max_period;
        const char* op = op_name(e);
        auto any_empty = [&] {
            return std::any_of(a.begin(), a.end(), [](const Granularity& g) { return is_empty(g); });
        };
        auto rep = [&](std::size_t i) -> const PeriodicRep& { return unbounded(a[i], op); };

        return std::visit(
            overloaded{
                [&](const ast::BottomRef&) -> Granularity { return PeriodicRep::bottom(); },
                [&](const ast::NameRef&) -> Granularity { throw ConversionError("unresolved name"); },
                [&](const ast::Group& n) -> Granularity {
                    if (any_empty())
                        return EmptyRep{};
                    return convert_group(rep(0), n.m, cap);
                },
                [&](const ast::Alter& n) -> Granularity {
                    if (is_empty(a[0]) && is_empty(a[1]))
                        return EmptyRep{};
                    if (any_empty())
                        throw ConversionError("alter: the partitioning operand cannot partition the altered one "
                                              "when exactly one of them is empty");
                    return convert_alter(rep(0), rep(1), n.l, n.k, n.m, cap);
                },
                [&](const ast::Shift& n) -> Granularity {
                    if (any_empty())
                        return EmptyRep{};
                    return convert_shift(rep(0), n.m);
                },
                [&](const ast::Combine&) -> Granularity {
                    if (any_empty())
                        return EmptyRep{};
                    return convert_combine(rep(0), rep(1), cap);
                },
                [&](const ast::Anchored&) -> Granularity {
                    if (is_empty(a[1]))
                        return EmptyRep{};
                    if (is_empty(a[0]))
                        throw ConversionError("anchor: anchors cannot be a subgranularity of an empty granularity");
                    return convert_anchored(rep(0), rep(1), cap);
                },
                [&](const ast::Subset& n) -> Granularity {
                    if (any_empty())
                        return EmptyRep{};
                    return convert_subset(rep(0), n.from, n.to);
                },
                [&](const ast::SelectDown& n) -> Granularity {
                    if (any_empty())
                        return EmptyRep{};
                    return convert_select_down(rep(0), rep(1), n.k, n.l, cap);
                },
                [&](const ast::SelectUp&) -> Granularity {
                    if (any_empty())
                        return EmptyRep{};
                    return convert_select_up(rep(0), rep(1), cap);
                },
                [&](const ast::SelectIntersect& n) -> Granularity {
                    if (any_empty())
                        return EmptyRep{};
                    return convert_select_intersect(rep(0), rep(1), n.k, n.l, cap);
                },
                [&](const ast::SetOp& n) -> Granularity {
                    const bool e1 = is_empty(a[0]);
                    const bool e2 = is_empty(a[1]);
                    if (n.kind == ast::SetKind::Union) {
                        if (e1)
                            return e2 ? Granularity{EmptyRep{}} : Granularity{rep(1)};
                        if (e2)
                            return rep(0);
                    } else if (n.kind == ast::SetKind::Difference) {
                        if (e1)
                            return EmptyRep{};
                        if (e2)
                            return rep(0);
                    } else if (e1 || e2) {
                        return EmptyRep{};
                    }
                    return convert_set_op(rep(0), rep(1), n.kind, cap);
                },
            },
            e.node);
    }

    ConversionCache* cache_;
    ConvertOptions options_;
    StepTrace* trace_;
};

} // namespace

Granularity convert_expression(const Expr& e, ConversionCache* cache, const ConvertOptions& options,
                               StepTrace* trace)
{
    return Lowering(cache, options, trace).run(e, "");
}

Granularity convert_definition(const CalendarDoc& doc, std::string_view name, ConversionCache* cache,
                               const ConvertOptions& options, StepTrace* trace)
{
    ExprPtr closed = rewrite_to_bottom(doc, name);
    return convert_expression(*closed, cache, options, trace);
}

} // namespace granlower

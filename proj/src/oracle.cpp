#include "granlower/oracle.hpp"

#include <algorithm>
#include <memory>
#include <sstream>

#include "granlower/arith.hpp"

namespace granlower {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using Map = std::map<Label, GranuleSet>;

struct Span {
    Instant lo;
    Instant hi;
};

std::optional<Span> interior_of(const WindowEval& w)
{
    if (!w.complete())
        return std::nullopt;
    if (w.known)
        return Span{w.known->first, w.known->second};
    auto first = w.granules.lower_bound(*w.first_label);
    auto last = w.granules.upper_bound(*w.last_label);
    if (first == last)
        return std::nullopt;
    --last;
    return Span{first->second.front(), last->second.back()};
}

/// Instants spanned by the granules of src labeled a..b. When src has none
/// there, its own known span still applies if a..b is all of src's range.
std::optional<Span> span_of_labels(const WindowEval& src, Label a, Label b)
{
    if (!src.complete())
        return std::nullopt;
    auto first = src.granules.lower_bound(a);
    auto last = src.granules.upper_bound(b);
    if (first != last) {
        --last;
        return Span{first->second.front(), last->second.back()};
    }
    if (a <= *src.first_label && b >= *src.last_label)
        return interior_of(src);
    return std::nullopt;
}

/// Records on a filtered result the span its source labels covered.
WindowEval keep_span(WindowEval w, const WindowEval& src)
{
    if (w.complete())
        if (auto s = span_of_labels(src, *w.first_label, *w.last_label))
            w.known = std::make_pair(s->lo, s->hi);
    return w;
}

bool within(const GranuleSet& s, const std::optional<Span>& c)
{
    return c && s.front() >= c->lo && s.back() <= c->hi;
}

bool meets(const GranuleSet& a, const GranuleSet& b)
{
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j)
            return true;
        if (*i < *j)
            ++i;
        else
            ++j;
    }
    return false;
}

bool contains(const GranuleSet& outer, const GranuleSet& inner)
{
    return !inner.empty() && std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

/// Stored granules in time order; maxima ascend with labels, so the first
/// granule that can meet a set is found by binary search.
class TimeIndex {
public:
    explicit TimeIndex(const WindowEval& w)
    {
        entries_.reserve(w.granules.size());
        for (const auto& [label, g] : w.granules)
            entries_.push_back({label, &g});
    }

    /// Labels whose granules meet s, ascending.
    std::vector<Label> meeting(const GranuleSet& s) const
    {
        std::vector<Label> out;
        auto it = std::partition_point(entries_.begin(), entries_.end(),
                                       [&](const Entry& e) { return e.granule->back() < s.front(); });
        for (; it != entries_.end() && it->granule->front() <= s.back(); ++it)
            if (meets(*it->granule, s))
                out.push_back(it->label);
        return out;
    }

private:
    struct Entry {
        Label label;
        const GranuleSet* granule;
    };
    std::vector<Entry> entries_;
};

const GranuleSet* lookup(const WindowEval& w, Label j)
{
    auto it = w.granules.find(j);
    return it == w.granules.end() ? nullptr : &it->second;
}

bool in_range(const WindowEval& w, Label j)
{
    return w.complete() && j >= *w.first_label && j <= *w.last_label;
}

std::vector<Label> delta(const std::vector<Label>& s, std::int64_t k, std::int64_t l)
{
    // Written independently of the converter's selection helper.
    std::vector<Label> out;
    const auto n = static_cast<std::int64_t>(s.size());
    std::int64_t pos = k > 0 ? k : n + k + 1;  // 1-based
    for (std::int64_t c = 0; c < l; ++c, ++pos)
        if (pos >= 1 && pos <= n)
            out.push_back(s[static_cast<std::size_t>(pos - 1)]);
    return out;
}

/// Scans labels a..b, keeping the longest run where decide(x) is true.
/// decide returns whether x is decidable and, if so, fills the granule
/// (empty set for "no granule").
template <class Decide>
WindowEval longest_run(Instant lo, Instant hi, Label a, Label b, Decide decide)
{
    WindowEval out;
    out.lo = lo;
    out.hi = hi;
    Map best;
    Map current;
    std::optional<Label> best_a;
    std::optional<Label> best_b;
    std::optional<Label> cur_a;
    std::int64_t best_len = 0;
    for (Label x = a; x <= b + 1; ++x) {
        GranuleSet g;
        const bool ok = x <= b && decide(x, g);
        if (ok) {
            if (!cur_a)
                cur_a = x;
            if (!g.empty())
                current.emplace(x, std::move(g));
            continue;
        }
        if (cur_a) {
            const std::int64_t len = x - *cur_a;
            if (len > best_len) {
                best_len = len;
                best_a = cur_a;
                best_b = x - 1;
                best = std::move(current);
            }
            current.clear();
            cur_a.reset();
        }
    }
    out.granules = std::move(best);
    out.first_label = best_a;
    out.last_label = best_b;
    return out;
}

class Evaluator {
public:
    Evaluator(Instant lo, Instant hi) : lo_(lo), hi_(hi) {}

    // Subexpressions occurring more than once (a rewritten definition repeats
    // whatever it referenced) are evaluated once.
    void count_repeats(const Expr& e)
    {
        if (++seen_[canonical_key(e)] == 1)
            for (const ExprPtr& c : children(e))
                count_repeats(*c);
    }

    std::shared_ptr<const WindowEval> eval(const Expr& e)
    {
        const std::string key = canonical_key(e);
        auto counted = seen_.find(key);
        if (counted == seen_.end() || counted->second < 2)
            return std::make_shared<const WindowEval>(eval_node(e));
        if (auto hit = memo_.find(key); hit != memo_.end())
            return hit->second;
        auto w = std::make_shared<const WindowEval>(eval_node(e));
        memo_.emplace(key, w);
        return w;
    }

private:
    WindowEval eval_node(const Expr& e)
    {
        return std::visit(overloaded{
                              [&](const ast::BottomRef&) { return bottom(); },
                              [&](const ast::NameRef& n) -> WindowEval {
                                  throw OracleError("oracle needs a closed expression; found name '" + n.name + "'");
                              },
                              [&](const ast::Group& n) { return group(*eval(*n.operand), n.m); },
                              [&](const ast::Alter& n) {
                                  return alter(*eval(*n.partitioner), *eval(*n.base), n.l, n.k, n.m);
                              },
                              [&](const ast::Shift& n) { return shift(*eval(*n.operand), n.m); },
                              [&](const ast::Combine& n) { return combine(*eval(*n.outer), *eval(*n.inner)); },
                              [&](const ast::Anchored& n) { return anchored(*eval(*n.base), *eval(*n.anchors)); },
                              [&](const ast::Subset& n) { return subset(*eval(*n.operand), n.from, n.to); },
                              [&](const ast::SelectDown& n) {
                                  return select_down(*eval(*n.selected), *eval(*n.container), n.k, n.l);
                              },
                              [&](const ast::SelectUp& n) { return select_up(*eval(*n.selected), *eval(*n.contained)); },
                              [&](const ast::SelectIntersect& n) {
                                  return select_intersect(*eval(*n.selected), *eval(*n.other), n.k, n.l);
                              },
                              [&](const ast::SetOp& n) { return set_op(*eval(*n.first), *eval(*n.second), n.kind); },
                          },
                          e.node);
    }

    WindowEval bottom() const
    {
        WindowEval w;
        w.lo = lo_;
        w.hi = hi_;
        for (Instant t = lo_; t <= hi_; ++t)
            w.granules.emplace(t, GranuleSet{t});
        w.first_label = lo_;
        w.last_label = hi_;
        return w;
    }

    WindowEval none() const
    {
        WindowEval w;
        w.lo = lo_;
        w.hi = hi_;
        return w;
    }

    WindowEval group(const WindowEval& g, std::int64_t m) const
    {
        if (!g.complete())
            return none();
        const Label a = floor_div(*g.first_label - 1 + m - 1, m) + 1;  // (a-1)m+1 >= first
        const Label b = floor_div(*g.last_label, m);
        return longest_run(lo_, hi_, a, b, [&](Label i, GranuleSet& out) {
            for (Label j = (i - 1) * m + 1; j <= i * m; ++j)
                if (const GranuleSet* s = lookup(g, j))
                    out.insert(out.end(), s->begin(), s->end());
            return true;
        });
    }

    WindowEval shift(const WindowEval& g, std::int64_t m) const
    {
        WindowEval w = none();
        for (const auto& [label, s] : g.granules)
            if (in_range(g, label))
                w.granules.emplace(label + m, s);
        if (g.complete()) {
            w.first_label = *g.first_label + m;
            w.last_label = *g.last_label + m;
            w.known = g.known;
        }
        return w;
    }

    WindowEval alter(const WindowEval& g2, const WindowEval& g1, std::int64_t l, std::int64_t k,
                     std::int64_t m) const
    {
        if (!g1.complete() || !g2.complete())
            return none();
        const auto c2 = interior_of(g2);
        const TimeIndex ix2(g2);
        return longest_run(lo_, hi_, *g1.first_label, *g1.last_label, [&](Label i, GranuleSet& out) {
            const GranuleSet* base = lookup(g1, i);
            if (!base)
                return true;
            if (!within(*base, c2))
                return false;
            const std::vector<Label> parts = ix2.meeting(*base);
            if (parts.empty())
                return false;
            const Label b = parts.front();
            const Label t = parts.back();
            const std::int64_t h = floor_div(i - l, m) + 1;
            const Label b2 = i == (h - 1) * m + l ? b + (h - 1) * k : b + h * k;
            const Label t2 = t + h * k;
            if (!in_range(g2, b2) || !in_range(g2, t2))
                return false;
            for (Label j = b2; j <= t2; ++j)
                if (const GranuleSet* s = lookup(g2, j))
                    out.insert(out.end(), s->begin(), s->end());
            return true;
        });
    }

    WindowEval combine(const WindowEval& g1, const WindowEval& g2) const
    {
        if (!g1.complete())
            return none();
        const auto c2 = interior_of(g2);
        const TimeIndex ix2(g2);
        return keep_span(longest_run(lo_, hi_, *g1.first_label, *g1.last_label, [&](Label i, GranuleSet& out) {
            const GranuleSet* outer = lookup(g1, i);
            if (!outer)
                return true;
            if (!within(*outer, c2))
                return false;
            for (Label j : ix2.meeting(*outer)) {
                const GranuleSet& s = g2.granules.at(j);
                if (contains(*outer, s)) {
                    GranuleSet merged;
                    std::set_union(out.begin(), out.end(), s.begin(), s.end(), std::back_inserter(merged));
                    out = std::move(merged);
                }
            }
            return true;
        }), g1);
    }

    WindowEval anchored(const WindowEval& g1, const WindowEval& g2) const
    {
        if (!g1.complete() || !g2.complete())
            return none();
        return keep_span(longest_run(lo_, hi_, *g2.first_label, *g2.last_label, [&](Label i, GranuleSet& out) {
            if (!lookup(g2, i))
                return true;
            auto next = g2.granules.upper_bound(i);
            if (next == g2.granules.end() || next->first > *g2.last_label)
                return false;
            if (!in_range(g1, i) || !in_range(g1, next->first - 1))
                return false;
            for (Label j = i; j < next->first; ++j)
                if (const GranuleSet* s = lookup(g1, j))
                    out.insert(out.end(), s->begin(), s->end());
            return true;
        }), g2);
    }

    WindowEval subset(const WindowEval& g, std::optional<Label> from, std::optional<Label> to) const
    {
        WindowEval w = g;
        std::erase_if(w.granules, [&](const auto& kv) {
            return (from && kv.first < *from) || (to && kv.first > *to);
        });
        return keep_span(std::move(w), g);
    }

    // Shared shape of the three selections: a label x of g1 is decided once
    // every container relevant to it is fully known.
    WindowEval select_down(const WindowEval& g1, const WindowEval& g2, std::int64_t k, std::int64_t l) const
    {
        if (!g1.complete())
            return none();
        const auto c1 = interior_of(g1);
        const TimeIndex ix1(g1);
        const auto c2 = interior_of(g2);
        const TimeIndex ix2(g2);
        return keep_span(longest_run(lo_, hi_, *g1.first_label, *g1.last_label, [&](Label x, GranuleSet& out) {
            const GranuleSet* gx = lookup(g1, x);
            if (!gx)
                return true;
            if (!within(*gx, c2))
                return false;
            for (Label i : ix2.meeting(*gx)) {
                const GranuleSet& container = g2.granules.at(i);
                if (!contains(container, *gx))
                    continue;
                if (!within(container, c1))
                    return false;
                std::vector<Label> inside;
                for (Label j : ix1.meeting(container))
                    if (contains(container, g1.granules.at(j)))
                        inside.push_back(j);
                const auto chosen = delta(inside, k, l);
                if (std::find(chosen.begin(), chosen.end(), x) != chosen.end())
                    out = *gx;
            }
            return true;
        }), g1);
    }

    WindowEval select_up(const WindowEval& g1, const WindowEval& g2) const
    {
        if (!g1.complete())
            return none();
        const auto c2 = interior_of(g2);
        const TimeIndex ix2(g2);
        return keep_span(longest_run(lo_, hi_, *g1.first_label, *g1.last_label, [&](Label x, GranuleSet& out) {
            const GranuleSet* gx = lookup(g1, x);
            if (!gx)
                return true;
            if (!within(*gx, c2))
                return false;
            for (Label j : ix2.meeting(*gx))
                if (contains(*gx, g2.granules.at(j))) {
                    out = *gx;
                    break;
                }
            return true;
        }), g1);
    }

    WindowEval select_intersect(const WindowEval& g1, const WindowEval& g2, std::int64_t k, std::int64_t l) const
    {
        if (!g1.complete())
            return none();
        const auto c1 = interior_of(g1);
        const TimeIndex ix1(g1);
        const auto c2 = interior_of(g2);
        const TimeIndex ix2(g2);
        return keep_span(longest_run(lo_, hi_, *g1.first_label, *g1.last_label, [&](Label x, GranuleSet& out) {
            const GranuleSet* gx = lookup(g1, x);
            if (!gx)
                return true;
            if (!within(*gx, c2))
                return false;
            bool picked = false;
            for (Label i : ix2.meeting(*gx)) {
                const GranuleSet& other = g2.granules.at(i);
                if (!within(other, c1))
                    return false;
                const auto chosen = delta(ix1.meeting(other), k, l);
                if (std::find(chosen.begin(), chosen.end(), x) != chosen.end())
                    picked = true;
            }
            if (picked)
                out = *gx;
            return true;
        }), g1);
    }

    WindowEval set_op(const WindowEval& g1, const WindowEval& g2, ast::SetKind kind) const
    {
        WindowEval w = none();
        if (!g1.complete() || !g2.complete())
            return w;
        const Label a = std::max(*g1.first_label, *g2.first_label);
        const Label b = std::min(*g1.last_label, *g2.last_label);
        if (a > b)
            return w;
        w.first_label = a;
        w.last_label = b;
        for (auto it = g1.granules.lower_bound(a); it != g1.granules.end() && it->first <= b; ++it) {
            const bool in2 = g2.granules.count(it->first) != 0;
            if (kind == ast::SetKind::Union || (kind == ast::SetKind::Intersection) == in2)
                w.granules.emplace(it->first, it->second);
        }
        if (kind == ast::SetKind::Union)
            for (auto it = g2.granules.lower_bound(a); it != g2.granules.end() && it->first <= b; ++it)
                w.granules.emplace(it->first, it->second);  // no-op where g1 already has the label
        // Both operands are label-aligned inside a common granularity, so
        // their granules interleave in label order.
        const auto s1 = span_of_labels(g1, a, b);
        const auto s2 = span_of_labels(g2, a, b);
        if (s1 && s2)
            w.known = std::make_pair(std::min(s1->lo, s2->lo), std::max(s1->hi, s2->hi));
        else if (s1 || s2)
            w.known = std::make_pair((s1 ? s1 : s2)->lo, (s1 ? s1 : s2)->hi);
        return w;
    }

    Instant lo_;
    Instant hi_;
    std::map<std::string, int> seen_;
    std::map<std::string, std::shared_ptr<const WindowEval>> memo_;
};

} // namespace

std::optional<std::pair<Instant, Instant>> WindowEval::interior() const
{
    const auto s = interior_of(*this);
    if (!s)
        return std::nullopt;
    return std::make_pair(s->lo, s->hi);
}

WindowEval eval_window(const Expr& e, Instant lo, Instant hi)
{
    if (lo > hi)
        throw OracleError("empty window");
    Evaluator evaluator(lo, hi);
    evaluator.count_repeats(e);
    WindowEval w = *evaluator.eval(e);
    if (!w.complete())
        throw OracleError("window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] is too small to decide any granule of the expression");
    return w;
}

std::string ComparisonReport::to_string() const
{
    auto list = [](const GranuleSet& s) {
        std::ostringstream os;
        os << '{';
        for (std::size_t i = 0; i < s.size(); ++i)
            os << (i ? " " : "") << s[i];
        os << '}';
        return os.str();
    };
    std::ostringstream os;
    os << labels_checked << " labels checked, " << mismatches.size() << " mismatches\n";
    for (const auto& m : mismatches)
        os << "  label " << m.label << ": oracle " << list(m.expected) << " vs periodic " << list(m.actual) << '\n';
    return os.str();
}

ComparisonReport compare_with_periodic(const WindowEval& w, const Granularity& g)
{
    ComparisonReport report;
    if (!w.complete())
        return report;
    const auto* rep = std::get_if<PeriodicRep>(&g);
    for (Label x = *w.first_label; x <= *w.last_label; ++x) {
        const GranuleSet* expected = lookup(w, x);
        GranuleSet actual = rep ? rep->expand(x) : GranuleSet{};
        ++report.labels_checked;
        const bool same = expected ? *expected == actual : actual.empty();
        if (!same)
            report.mismatches.push_back({x, expected ? *expected : GranuleSet{}, std::move(actual)});
    }
    // Labels the periodic side places inside the trusted instants but the
    // oracle's complete range does not cover.
    if (rep) {
        if (const auto span = w.interior()) {
            for (Label x : rep->labels_intersecting(span->first, span->second))
                if (x < *w.first_label || x > *w.last_label) {
                    ++report.labels_checked;
                    report.mismatches.push_back({x, {}, rep->expand(x)});
                }
        }
    }
    return report;
}

} // namespace granlower

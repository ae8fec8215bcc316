#include <doctest.h>

#include <cstdlib>

#include "fixtures.hpp"
#include "granlower/converter.hpp"
#include "granlower/oracle.hpp"

using namespace granlower;
using namespace fixtures;

namespace {

PeriodicRep shifted_day(std::int64_t m)
{
    return convert_shift(PeriodicRep::bottom(), m);
}

// The figures' operands, reconstructed from the labels and granules the
// worked examples mention.
PeriodicRep fig8_g1() { return rep(4, 2, {{-5, {0, 1}}, {-4, {2}}}); }
PeriodicRep fig8_g2() { return rep(6, 1, {{-3, range(-2, 3)}}); }

std::string error_path(const std::string& text)
{
    try {
        convert_expression(*expr(text), nullptr);
    } catch (const ConversionError& e) {
        return e.path();
    }
    return "<no error>";
}

} // namespace

TEST_CASE("group of a shifted bottom")
{
    const PeriodicRep g = shifted_day(-8);
    CHECK(g.anchor() == -7);
    const PeriodicRep r = convert_group(g, 3);
    CHECK(r.period() == 3);
    CHECK(r.label_distance() == 1);
    CHECK(r.anchor() == -2);
    CHECK(r.expand(-2) == GranuleSet{0, 1, 2});
}

TEST_CASE("alter with granules spanning zero")
{
    const PeriodicRep g2 = rep(4, 2, {{-10, {1}}, {-9, {3, 4}}});
    const PeriodicRep g1 = rep(4, 1, {{-5, {-1, 0, 1}}});
    const PeriodicRep r = convert_alter(g2, g1, 2, 1, 3);
    CHECK(r.label_distance() == 6);
    CHECK(r.period() == 28);
    CHECK(r.anchor() == -4);
    CHECK(labels_of(r) == std::vector<Label>{-4, -3, -2, -1, 0, 1});
    CHECK(r.expand(-4) == GranuleSet{-1, 0, 1, 3, 4});
    // The second of every three granules got one more g2 granule.
    CHECK(r.expand(-3) == GranuleSet{5, 7, 8});
}

TEST_CASE("combine")
{
    const PeriodicRep g1 = rep(6, 2, {{1, range(-2, 1)}});
    const PeriodicRep g2 = rep(4, 2, {{0, {0, 1}}, {1, {3}}});
    const PeriodicRep r = as_rep(convert_combine(g1, g2));
    CHECK(r.period() == 12);
    CHECK(r.label_distance() == 4);
    CHECK(r.lhat(r.period()) == std::vector<Label>{1, 3, 5});
    CHECK(labels_of(r) == std::vector<Label>{1, 3});
    CHECK(r.expand(1) == GranuleSet{-1, 0, 1});
    CHECK(r.expand(3) == GranuleSet{4, 5, 7});
}

TEST_CASE("anchored grouping builds the week starting on Sunday")
{
    const PeriodicRep day = shifted_day(10);
    CHECK(day.anchor() == 11);
    const PeriodicRep sunday = rep(7, 7, {{14, {4}}});
    const PeriodicRep r = convert_anchored(day, sunday);
    CHECK(r.period() == 7);
    CHECK(r.label_distance() == 7);
    CHECK(r.lhat(7) == std::vector<Label>{7, 14});
    CHECK(labels_of(r) == std::vector<Label>{7});
    CHECK(r.expand(7) == range(-3, 3));
    CHECK(r.expand(14) == range(4, 10));
}

TEST_CASE("select-down")
{
    const PeriodicRep r = as_rep(convert_select_down(fig8_g1(), fig8_g2(), 2, 1));
    CHECK(r.period() == 12);
    CHECK(r.label_distance() == 6);
    CHECK(r.lhat(12) == std::vector<Label>{-5, -2, 1});
    CHECK(labels_of(r) == std::vector<Label>{-5, -2});
    CHECK(r.expand(-5) == GranuleSet{0, 1});
    CHECK(r.expand(-2) == GranuleSet{6});
}

TEST_CASE("select-up")
{
    const PeriodicRep g1 = rep(6, 3, {{-3, {0, 1}}, {-2, {3}}, {-1, {4}}});
    const PeriodicRep g2 = rep(4, 2, {{-4, {4}}});
    const PeriodicRep r = as_rep(convert_select_up(g1, g2));
    CHECK(r.period() == 12);
    CHECK(r.label_distance() == 6);
    CHECK(r.lhat(12) == std::vector<Label>{-3, -1, 3});
    CHECK(labels_of(r) == std::vector<Label>{-3, -1});
    CHECK(r.expand(-3) == GranuleSet{0, 1});
    CHECK(r.expand(-1) == GranuleSet{4});
}

TEST_CASE("select-by-intersect")
{
    const PeriodicRep g2 = rep(6, 1, {{-3, range(-3, 2)}});
    const PeriodicRep r = as_rep(convert_select_intersect(fig8_g1(), g2, 2, 1));
    CHECK(r.period() == 12);
    CHECK(r.label_distance() == 6);
    CHECK(labels_of(r) == std::vector<Label>{-2, 0});
    CHECK(r.expand(-2) == GranuleSet{6});
    CHECK(r.expand(0) == GranuleSet{10});
    CHECK(r.expand(-6) == GranuleSet{-2});
}

TEST_CASE("select-by-intersect keeps labels picked by containers before instant 1")
{
    // A g1 granule straddling 0 and 1 picked only by a container lying
    // entirely at or before 0.
    const PeriodicRep g1 = rep(4, 1, {{1, {0, 1}}});
    const PeriodicRep g2 = rep(4, 2, {{1, {2}}, {2, {4}}});
    // g2(0) = {0}: the only container meeting g1(1).
    const PeriodicRep r = as_rep(convert_select_intersect(g1, g2, 1, 1));
    CHECK(r.expand(1) == GranuleSet{0, 1});
    CHECK(r.lhat(r.period()).front() == 1);
}

TEST_CASE("set operations")
{
    const PeriodicRep g1 = rep(6, 6, {{1, {1}}, {2, {2}}});
    const PeriodicRep g2 = rep(6, 6, {{2, {2}}, {3, {3}}});
    const PeriodicRep u = as_rep(convert_set_op(g1, g2, ast::SetKind::Union));
    CHECK(u.lhat(6) == std::vector<Label>{1, 2, 3});
    CHECK(u.period() == 6);
    CHECK(u.label_distance() == 6);
    CHECK(u.expand(3) == GranuleSet{3});
    const PeriodicRep i = as_rep(convert_set_op(g1, g2, ast::SetKind::Intersection));
    CHECK(i.lhat(6) == std::vector<Label>{2});
    const PeriodicRep d = as_rep(convert_set_op(g1, g2, ast::SetKind::Difference));
    CHECK(d.lhat(6) == std::vector<Label>{1});
    CHECK(is_empty(convert_set_op(g1, g1, ast::SetKind::Difference)));
}

TEST_CASE("set operations on operands with different periods")
{
    const PeriodicRep a = as_rep(convert_expression(*expr("selectdown(1, 1, day, group(2, day))"), nullptr));
    const PeriodicRep b = as_rep(convert_expression(*expr("selectdown(1, 1, day, group(3, day))"), nullptr));
    const PeriodicRep u = as_rep(convert_set_op(a, b, ast::SetKind::Union));
    CHECK(u.period() == 6);
    CHECK(u.label_distance() == 6);
    CHECK(u.lhat(6) == std::vector<Label>{1, 3, 4, 5});
}

TEST_CASE("relabel")
{
    const PeriodicRep g = rep(4, 5, {{6, {1, 2}}, {8, {3}}});
    CHECK(g.ordinal(33) == 11);
    const PeriodicRep r = relabel(g, 33, 4);
    CHECK(r.anchor() == -7);
    CHECK(r.label_distance() == 2);
    CHECK(r.period() == 4);
    CHECK(r.expand(-7) == GranuleSet{1, 2});
    CHECK(r.expand(-6) == GranuleSet{3});
    CHECK(r.expand(4) == g.expand(33));
}

TEST_CASE("gstp labeling")
{
    const PeriodicRep g = convert_group(shifted_day(-8), 3);
    const PeriodicRep r = gstp_relabel(g);
    CHECK(r.expand(1) == GranuleSet{3, 4, 5});
    CHECK(r.expand(0) == GranuleSet{0, 1, 2});

    const PeriodicRep week = convert_group(PeriodicRep::bottom(), 7);
    CHECK(gstp_relabel(week) == week);
    CHECK_THROWS_AS(gstp_relabel(Granularity{EmptyRep{}}), ConversionError);

    const PeriodicRep usweek = convert_anchored(shifted_day(10), rep(7, 7, {{14, {4}}}));
    const PeriodicRep us = gstp_relabel(usweek);
    CHECK(us.expand(1) == range(4, 10));
    CHECK(us.expand(0) == range(-3, 3));
}

TEST_CASE("shift keeps the pattern")
{
    const PeriodicRep wp = as_rep(convert_expression(*expr("alter(2, -3, 2, day, group(5, day))"), nullptr));
    const PeriodicRep s = convert_shift(wp, 10);
    CHECK(s.period() == wp.period());
    CHECK(s.label_distance() == wp.label_distance());
    for (Label j = -10; j <= 10; ++j)
        CHECK(s.expand(j + 10) == wp.expand(j));
}

TEST_CASE("expansion of the working-days and weekend granularity")
{
    const PeriodicRep w = as_rep(convert_expression(*expr("alter(2, -3, 2, day, group(5, day))"), nullptr));
    CHECK(w.period() == 7);
    CHECK(w.label_distance() == 2);
    CHECK(w.expand(6) == GranuleSet{20, 21});
    CHECK(w.expand(5) == range(15, 19));
}

TEST_CASE("minimization regression")
{
    const ExprPtr e = expr("alter(1, -1, 2, day, alter(1, 1, 2, day, group(7, day)))");
    ConvertOptions raw;
    raw.minimize = false;
    const PeriodicRep unmin = as_rep(convert_expression(*e, nullptr, raw));
    CHECK(unmin.period() == 14);
    CHECK(unmin.label_distance() == 2);
    const PeriodicRep min = as_rep(convert_expression(*e, nullptr));
    CHECK(min.period() == 7);
    CHECK(min.label_distance() == 1);
    const PeriodicRep week = as_rep(convert_expression(*expr("group(7, day)"), nullptr));
    for (Label j = -2; j <= 12; ++j) {
        CHECK(min.expand(j) == week.expand(j));
        CHECK(unmin.expand(j) == week.expand(j));
    }
}

TEST_CASE("positional selection")
{
    const std::vector<Label> s{1, 2, 3, 4, 5};
    CHECK(delta_select(s, 2, 1) == std::vector<Label>{2});
    CHECK(delta_select(s, 2, 3) == std::vector<Label>{2, 3, 4});
    CHECK(delta_select(s, 4, 5) == std::vector<Label>{4, 5});
    CHECK(delta_select(s, 6, 1).empty());
    CHECK(delta_select(s, -1, 1) == std::vector<Label>{5});
    CHECK(delta_select(s, -2, 3) == std::vector<Label>{4, 5});
    CHECK(delta_select(s, -6, 2) == std::vector<Label>{1});
    CHECK(delta_select(s, -7, 1).empty());
    CHECK(delta_select({}, 1, 1).empty());
}

TEST_CASE("empty results propagate")
{
    const auto conv = [](const std::string& text) { return convert_expression(*expr(text), nullptr); };
    const std::string none = "selectdown(9, 1, day, group(7, day))";
    CHECK(is_empty(conv(none)));
    CHECK(is_empty(conv("group(2, " + none + ")")));
    CHECK(is_empty(conv("shift(3, " + none + ")")));
    CHECK(is_empty(conv("intersect(day, " + none + ")")));
    CHECK(is_empty(conv("difference(" + none + ", day)")));
    CHECK(conv("union(" + none + ", day)") == conv("day"));
    CHECK(conv("difference(day, " + none + ")") == conv("day"));
    CHECK(is_empty(conv("selectup(group(7, day), " + none + ")")));
    CHECK(is_empty(conv("combine(group(7, day), " + none + ")")));
    CHECK(is_empty(conv("subset(1, 5, " + none + ")")));
    CHECK_THROWS_AS(conv("alter(1, 1, 2, day, " + none + ")"), ConversionError);
    CHECK_THROWS_AS(conv("anchor(" + none + ", day)"), ConversionError);
}

TEST_CASE("operand preconditions report the failing subexpression")
{
    CHECK(error_path("group(2, selectdown(1, 1, day, group(7, day)))") == "group");
    CHECK(error_path("shift(1, group(2, selectdown(1, 1, day, group(7, day))))") == "shift.2/group");
    CHECK(error_path("alter(1, -6, 2, day, group(7, day))") == "alter");
    CHECK(error_path("alter(1, -5, 2, day, group(7, day))") == "<no error>");
    CHECK(error_path("alter(1, 1, 2, group(2, day), group(3, day))") == "alter");
    CHECK(error_path("anchor(day, group(7, day))") == "anchor");
    CHECK(error_path("union(day, shift(1, day))") == "union");
    const PeriodicRep bounded = as_rep(convert_subset(PeriodicRep::bottom(), 1, 3));
    CHECK_THROWS_AS(convert_group(bounded, 2), ConversionError);
    try {
        convert_expression(*expr("group(2, selectdown(1, 1, day, group(7, day)))"), nullptr);
    } catch (const ConversionError& e) {
        CHECK_FALSE(e.detail().empty());
        CHECK(std::string(e.what()).find("group") != std::string::npos);
    }
}

TEST_CASE("period cap")
{
    CHECK_THROWS(convert_group(PeriodicRep::bottom(), 7, 5));
    ConvertOptions small;
    small.max_period = 100;
    CHECK_THROWS_AS(convert_expression(*expr("group(7, group(31, day))"), nullptr, small), ConversionError);
    CHECK_NOTHROW(convert_expression(*expr("group(7, group(3, day))"), nullptr, small));

    ::setenv("GRANLOWER_MAX_PERIOD", "100", 1);
    CHECK(max_period_from_env() == 100);
    ::unsetenv("GRANLOWER_MAX_PERIOD");
    CHECK(max_period_from_env() == kDefaultMaxPeriod);
}

TEST_CASE("subset adds bounds and leaves the pattern alone")
{
    const PeriodicRep week = convert_group(PeriodicRep::bottom(), 7);
    const PeriodicRep b = as_rep(convert_subset(week, 2, 4));
    CHECK(b.period() == 7);
    CHECK(b.bounds() == Bounds{2, 4});
    CHECK(b.expand(3) == week.expand(3));
    CHECK(b.expand(5).empty());
    CHECK(b.expand(1).empty());
    const PeriodicRep open = as_rep(convert_subset(week, std::nullopt, 0));
    CHECK(open.expand(-100) == week.expand(-100));
    CHECK(open.expand(1).empty());
}

TEST_CASE("memoization gives the same result")
{
    const CalendarDoc d = parse_calendar(R"(calendar c bottom day;
        week = group(7, day);
        two = group(2, week);
        mon = selectdown(1, 1, day, week);
        both = union(mon, selectdown(3, 1, day, week));
        pick = selectdown(1, 1, mon, two);
    )");
    ConversionCache cache;
    for (const auto& def : d.definitions) {
        const Granularity with = convert_definition(d, def.name, &cache);
        const Granularity without = convert_definition(d, def.name, nullptr);
        CHECK(with == without);
    }
    CHECK(cache.hits() > 0);
    const std::size_t before = cache.size();
    convert_definition(d, "pick", &cache);
    CHECK(cache.size() == before);

    // Minimized and unminimized results are cached separately.
    ConvertOptions raw;
    raw.minimize = false;
    convert_definition(d, "week", &cache, raw);
    CHECK(cache.size() > before);
}

TEST_CASE("step trace")
{
    StepTrace trace;
    ConvertOptions raw;
    raw.minimize = false;
    convert_expression(*expr("alter(1, -1, 2, day, alter(1, 1, 2, day, group(7, day)))"), nullptr, raw, &trace);
    REQUIRE_FALSE(trace.empty());
    const TraceEntry& root = trace.back();
    CHECK(root.path == "alter");
    CHECK(root.period == 14);
    CHECK(root.label_distance == 2);
    CHECK(root.granule_count == 2);
    bool saw_group = false;
    for (const auto& t : trace)
        saw_group = saw_group || (t.expr == "group(7, bottom)" && t.period == 7);
    CHECK(saw_group);
}

TEST_CASE("converted reps agree with brute-force evaluation")
{
    for (const std::string text : {
             "alter(2, -3, 2, day, group(5, day))",
             "anchor(day, selectdown(7, 1, day, group(7, day)))",
             "combine(group(7, day), selectdown(2, 3, day, group(7, day)))",
             "selectintersect(-1, 2, group(3, day), group(7, day))",
             "selectup(group(4, day), selectdown(2, 1, day, group(6, day)))",
             "difference(group(2, day), selectdown(1, 1, group(2, day), group(3, group(2, day))))",
             "alter(3, 2, 4, day, group(5, shift(-2, day)))",
         }) {
        CAPTURE(text);
        const ExprPtr e = expr(text);
        for (bool m : {true, false}) {
            ConvertOptions o;
            o.minimize = m;
            const Granularity g = convert_expression(*e, nullptr, o);
            const WindowEval w = eval_window(*e, -150, 150);
            const ComparisonReport rep = compare_with_periodic(w, g);
            CHECK_MESSAGE(rep.ok(), rep.to_string());
        }
    }
}

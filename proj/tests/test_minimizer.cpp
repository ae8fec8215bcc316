#include <doctest.h>

#include "fixtures.hpp"
#include "granlower/converter.hpp"
#include "granlower/minimizer.hpp"

using namespace granlower;
using namespace fixtures;

namespace {

PeriodicRep unminimized(const std::string& text)
{
    ConvertOptions raw;
    raw.minimize = false;
    return as_rep(convert_expression(*expr(text), nullptr, raw));
}

void check_same_expansion(const PeriodicRep& a, const PeriodicRep& b)
{
    const std::int64_t span = 2 * std::lcm(a.period(), b.period());
    const auto la = a.labels_intersecting(-span, span);
    const auto lb = b.labels_intersecting(-span, span);
    REQUIRE(la == lb);
    for (Label j : la)
        CHECK(a.expand(j) == b.expand(j));
}

} // namespace

TEST_CASE("prime factors")
{
    CHECK(prime_factors(1).empty());
    CHECK(prime_factors(2) == std::vector<std::int64_t>{2});
    CHECK(prime_factors(146097) == std::vector<std::int64_t>{3, 7, 773});
    CHECK(prime_factors(4800) == std::vector<std::int64_t>{2, 3, 5});
}

TEST_CASE("doubled week collapses to the week")
{
    const PeriodicRep g2 = unminimized("alter(1, -1, 2, day, alter(1, 1, 2, day, group(7, day)))");
    REQUIRE(g2.period() == 14);
    CHECK(is_valid_reduction(g2, 2));
    const PeriodicRep m = minimize(g2);
    CHECK(m.period() == 7);
    CHECK(m.label_distance() == 1);
    check_same_expansion(m, g2);
}

TEST_CASE("already minimal reps are left alone")
{
    const PeriodicRep week = unminimized("group(7, day)");
    CHECK(minimize(week) == week);
    const PeriodicRep wp = unminimized("alter(2, -3, 2, day, group(5, day))");
    CHECK(minimize(wp) == wp);
    CHECK(minimize(PeriodicRep::bottom()) == PeriodicRep::bottom());
}

TEST_CASE("day described with five granules per period")
{
    const PeriodicRep five = rep(5, 5, {{1, {1}}, {2, {2}}, {3, {3}}, {4, {4}}, {5, {5}}});
    CHECK(is_valid_reduction(five, 5));
    const PeriodicRep m = minimize(five);
    CHECK(m.period() == 1);
    CHECK(m.label_distance() == 1);
    CHECK(m == PeriodicRep::bottom());
    CHECK(inflate(PeriodicRep::bottom(), 5) == five);
}

TEST_CASE("reductions that would change granules are refused")
{
    // Sizes 2,1 repeating.
    const PeriodicRep ok = rep(6, 4, {{1, {1, 2}}, {2, {3}}, {3, {4, 5}}, {4, {6}}});
    CHECK(is_valid_reduction(ok, 2));
    // Sizes 2,1,1,2: halving would map granule 1 onto granule 3.
    const PeriodicRep bad = rep(6, 4, {{1, {1, 2}}, {2, {3}}, {3, {4}}, {4, {5, 6}}});
    CHECK_FALSE(is_valid_reduction(bad, 2));
    CHECK(minimize(bad) == bad);
    // Alpha must divide gcd(P, N, R).
    CHECK_FALSE(is_valid_reduction(ok, 3));
    CHECK_FALSE(is_valid_reduction(ok, 4));
}

TEST_CASE("labels must line up as well as instants")
{
    // Same instants every 3, but only every other period carries the label
    // pattern 1,2 vs 1,3.
    const PeriodicRep g = rep(6, 4, {{1, {1}}, {2, {2}}, {4, {4}}});
    CHECK_FALSE(is_valid_reduction(g, 2));
}

TEST_CASE("reduced then inflated is expansion-identical")
{
    for (const std::string text : {
             "alter(1, -1, 2, day, alter(1, 1, 2, day, group(7, day)))",
             "union(selectdown(1, 1, day, group(2, day)), selectdown(2, 1, day, group(2, day)))",
             "group(3, union(selectdown(1, 1, day, group(2, day)), selectdown(2, 1, day, group(2, day))))",
         }) {
        CAPTURE(text);
        const PeriodicRep g = unminimized(text);
        const std::int64_t gcd = std::gcd(std::gcd(g.period(), g.label_distance()), g.granule_count());
        for (std::int64_t a = 2; a <= gcd; ++a) {
            if (gcd % a != 0 || !is_valid_reduction(g, a))
                continue;
            const PeriodicRep r = reduce(g, a);
            check_same_expansion(r, g);
            check_same_expansion(inflate(r, a), g);
        }
    }
}

TEST_CASE("minimize is idempotent and leaves no valid prime reduction")
{
    for (const std::string text : {
             "alter(1, -1, 2, day, alter(1, 1, 2, day, group(7, day)))",
             "union(selectdown(1, 1, day, group(2, day)), selectdown(2, 1, day, group(2, day)))",
             "selectdown(1, 1, day, group(4, group(2, day)))",
             "alter(2, 1, 3, day, alter(1, 1, 3, day, group(4, day)))",
         }) {
        CAPTURE(text);
        const PeriodicRep g = unminimized(text);
        const PeriodicRep m = minimize(g);
        CHECK(minimize(m) == m);
        check_same_expansion(m, g);
        const std::int64_t gcd = std::gcd(std::gcd(m.period(), m.label_distance()), m.granule_count());
        for (std::int64_t p : prime_factors(gcd))
            CHECK_FALSE(is_valid_reduction(m, p));
    }
}

TEST_CASE("minimize keeps bounds and passes empty through")
{
    const PeriodicRep g2 = unminimized("alter(1, -1, 2, day, alter(1, 1, 2, day, group(7, day)))");
    const PeriodicRep b = g2.with_bounds(Bounds{-3, 9});
    const PeriodicRep m = minimize(b);
    CHECK(m.period() == 7);
    CHECK(m.bounds() == Bounds{-3, 9});
    CHECK(is_empty(minimize(Granularity{EmptyRep{}})));
}

#pragma once

#include <string>
#include <vector>

#include "granlower/ast.hpp"
#include "granlower/granularity.hpp"

namespace fixtures {

using namespace granlower;

inline GranuleSet range(Instant a, Instant b)
{
    GranuleSet s;
    for (Instant x = a; x <= b; ++x)
        s.push_back(x);
    return s;
}

inline PeriodicRep rep(std::int64_t p, std::int64_t n, std::vector<Granule> g,
                       std::optional<Bounds> b = std::nullopt)
{
    return PeriodicRep::make(p, n, std::move(g), b);
}

inline const PeriodicRep& as_rep(const Granularity& g)
{
    return std::get<PeriodicRep>(g);
}

inline std::vector<Label> labels_of(const PeriodicRep& r)
{
    std::vector<Label> out;
    for (const auto& g : r.explicit_granules())
        out.push_back(g.label);
    return out;
}

/// Closed expression from source text, e.g. "group(7, day)" with bottom day.
inline ExprPtr expr(const std::string& text)
{
    const CalendarDoc doc = parse_calendar("calendar t bottom day;\nx = " + text + ";\n");
    return rewrite_to_bottom(doc, "x");
}

// Integer days 1..n cut into consecutive blocks of `size`; block i (1-based)
// is returned. Written without any library code.
inline GranuleSet block(std::int64_t size, std::int64_t i)
{
    GranuleSet s;
    for (std::int64_t d = (i - 1) * size + 1; d <= i * size; ++d)
        s.push_back(d);
    return s;
}

} // namespace fixtures

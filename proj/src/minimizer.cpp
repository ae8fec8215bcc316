#include "granlower/minimizer.hpp"

#include <numeric>

namespace granlower {

std::vector<std::int64_t> prime_factors(std::int64_t n)
{
    std::vector<std::int64_t> out;
    for (std::int64_t p = 2; p * p <= n; ++p) {
        if (n % p != 0)
            continue;
        out.push_back(p);
        while (n % p == 0)
            n /= p;
    }
    if (n > 1)
        out.push_back(n);
    return out;
}

bool is_valid_reduction(const PeriodicRep& rep, std::int64_t alpha)
{
    if (alpha < 2)
        return alpha == 1;
    const std::int64_t p = rep.period();
    const std::int64_t n = rep.label_distance();
    const std::int64_t r = rep.granule_count();
    if (p % alpha != 0 || n % alpha != 0 || r % alpha != 0)
        return false;
    const std::int64_t dn = n / alpha;
    const std::int64_t dp = p / alpha;
    // Translation by (dn, dp) is injective on label residues, so checking
    // every explicit granule is enough for it to be a bijection.
    const PeriodicRep core = rep.with_bounds(std::nullopt);
    for (const auto& g : core.explicit_granules()) {
        const GranuleSet image = core.expand(g.label + dn);
        if (image.size() != g.instants.size())
            return false;
        for (std::size_t i = 0; i < image.size(); ++i)
            if (image[i] != g.instants[i] + dp)
                return false;
    }
    return true;
}

PeriodicRep reduce(const PeriodicRep& rep, std::int64_t alpha)
{
    const std::int64_t dn = rep.label_distance() / alpha;
    std::vector<Granule> kept;
    for (const auto& g : rep.explicit_granules())
        if (g.label < rep.anchor() + dn)
            kept.push_back(g);
    return normalize_alignment(std::move(kept), rep.period() / alpha, dn, rep.bounds());
}

PeriodicRep inflate(const PeriodicRep& rep, std::int64_t alpha)
{
    std::vector<Granule> out;
    const std::int64_t n = rep.label_distance();
    const std::int64_t p = rep.period();
    for (std::int64_t c = 0; c < alpha; ++c)
        for (const auto& g : rep.explicit_granules()) {
            GranuleSet s;
            s.reserve(g.instants.size());
            for (Instant x : g.instants)
                s.push_back(checked_add(x, checked_mul(c, p)));
            out.push_back({checked_add(g.label, checked_mul(c, n)), std::move(s)});
        }
    return normalize_alignment(std::move(out), checked_mul(p, alpha), checked_mul(n, alpha), rep.bounds());
}

PeriodicRep minimize(const PeriodicRep& rep)
{
    PeriodicRep cur = rep;
    const std::int64_t g = std::gcd(std::gcd(rep.period(), rep.label_distance()), rep.granule_count());
    for (std::int64_t prime : prime_factors(g)) {
        for (;;) {
            const std::int64_t h =
                std::gcd(std::gcd(cur.period(), cur.label_distance()), cur.granule_count());
            if (h % prime != 0 || !is_valid_reduction(cur, prime))
                break;
            cur = reduce(cur, prime);
        }
    }
    return cur;
}

Granularity minimize(const Granularity& g)
{
    if (const auto* rep = std::get_if<PeriodicRep>(&g))
        return minimize(*rep);
    return g;
}

} // namespace granlower

#include "granlower/serialize.hpp"

#include <sstream>

namespace granlower {

using nlohmann::json;

nlohmann::json to_json(const Granularity& g)
{
    if (is_empty(g))
        return json{{"empty", true}};
    const auto& rep = std::get<PeriodicRep>(g);
    json labels = json::array();
    for (const auto& gr : rep.explicit_granules())
        labels.push_back(json{{"label", gr.label}, {"bottoms", gr.instants}});
    json bounds = nullptr;
    if (rep.bounds()) {
        const auto& b = *rep.bounds();
        bounds = json{{"first", b.first ? json(*b.first) : json("-inf")},
                      {"last", b.last ? json(*b.last) : json("+inf")}};
    }
    return json{{"P", rep.period()}, {"N", rep.label_distance()}, {"labels", labels}, {"bounds", bounds}};
}

Granularity granularity_from_json(const nlohmann::json& j)
{
    try {
        if (j.contains("empty") && j.at("empty").get<bool>())
            return EmptyRep{};
        std::vector<Granule> granules;
        for (const auto& item : j.at("labels"))
            granules.push_back({item.at("label").get<Label>(), item.at("bottoms").get<GranuleSet>()});
        std::optional<Bounds> bounds;
        if (j.contains("bounds") && !j.at("bounds").is_null()) {
            const auto& b = j.at("bounds");
            bounds = Bounds{};
            if (b.at("first").is_number_integer())
                bounds->first = b.at("first").get<Label>();
            else if (b.at("first") != "-inf")
                throw GranularityError("bounds.first must be an integer or \"-inf\"");
            if (b.at("last").is_number_integer())
                bounds->last = b.at("last").get<Label>();
            else if (b.at("last") != "+inf")
                throw GranularityError("bounds.last must be an integer or \"+inf\"");
        }
        return PeriodicRep::make(j.at("P").get<std::int64_t>(), j.at("N").get<std::int64_t>(), std::move(granules),
                                 bounds);
    } catch (const json::exception& e) {
        throw GranularityError(std::string("malformed granularity JSON: ") + e.what());
    }
}

std::string bounds_text(const std::optional<Bounds>& b)
{
    if (!b)
        return "none";
    std::ostringstream os;
    os << '[' << (b->first ? std::to_string(*b->first) : "-inf") << ','
       << (b->last ? std::to_string(*b->last) : "+inf") << ']';
    return os.str();
}

std::string to_text(const Granularity& g)
{
    if (is_empty(g))
        return "empty\n";
    const auto& rep = std::get<PeriodicRep>(g);
    std::ostringstream os;
    for (const auto& gr : rep.explicit_granules()) {
        os << gr.label << ':';
        for (Instant x : gr.instants)
            os << ' ' << x;
        os << " | P=" << rep.period() << " N=" << rep.label_distance() << " bounds=" << bounds_text(rep.bounds())
           << '\n';
    }
    return os.str();
}

} // namespace granlower

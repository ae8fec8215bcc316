#pragma once

#include <string>

#include <json.hpp>

#include "granlower/granularity.hpp"

namespace granlower {

/// {"P", "N", "labels": [{"label", "bottoms"}], "bounds"}; an empty
/// granularity is written as {"empty": true}.
nlohmann::json to_json(const Granularity& g);

/// Inverse of to_json. Throws GranularityError on malformed input.
Granularity granularity_from_json(const nlohmann::json& j);

/// One line per explicit granule: "label: i1 i2 ... | P=<> N=<> bounds=<>".
std::string to_text(const Granularity& g);

std::string bounds_text(const std::optional<Bounds>& b);

} // namespace granlower

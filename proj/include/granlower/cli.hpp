#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "granlower/ast.hpp"
#include "granlower/granularity.hpp"

namespace granlower::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kParse = 2,
    kConversion = 3,
    kMismatch = 4,
};

enum class Format { Json, Text };

CalendarDoc load_calendar(const std::string& path);

/// Converts every definition (or just `target`), bottom first, in file order.
std::map<std::string, Granularity> convert_all(const CalendarDoc& doc, const std::optional<std::string>& target,
                                               bool minimize, bool gstp);

std::string render_convert(const CalendarDoc& doc, const std::optional<std::string>& target, bool minimize,
                           bool gstp, Format format);

/// "label: i1 i2 ..." per label, or "label: empty".
std::string render_expand(const CalendarDoc& doc, const std::string& name, Label first, Label last);

/// A label, or "none".
std::string render_up(const CalendarDoc& doc, const std::string& name, Instant t);

struct DefinitionCheck {
    std::string name;
    bool passed = false;
    std::int64_t window = 0;
    Instant lo = 0;
    Instant hi = 0;
    std::size_t labels_checked = 0;
    std::string detail;
};

struct VerifyResult {
    std::vector<DefinitionCheck> checks;
    std::vector<std::string> warnings;

    bool ok() const;
};

/// Checks `reps` (one per definition name) against the oracle. Window size
/// defaults to, and is raised to, three times the largest unminimized period
/// met while lowering the definition; the seed picks the window offset.
VerifyResult verify_definitions(const CalendarDoc& doc, const std::map<std::string, Granularity>& reps,
                                std::int64_t window, std::uint64_t seed);

/// Parses "A..B".
std::pair<Label, Label> parse_label_range(const std::string& text);

/// Entry point of the granlower tool.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace granlower::cli

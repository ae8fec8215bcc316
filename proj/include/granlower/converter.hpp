#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "granlower/ast.hpp"
#include "granlower/granularity.hpp"

namespace granlower {

/// A semantic precondition failed while lowering an expression. `path`
/// locates the failing subexpression from the root, e.g. "alter.2/group.1".
class ConversionError : public std::runtime_error {
public:
    explicit ConversionError(const std::string& message, std::string path = {});

    const std::string& path() const { return path_; }
    const std::string& detail() const { return detail_; }

private:
    std::string detail_;
    std::string path_;
};

inline constexpr std::int64_t kDefaultMaxPeriod = 1'000'000'000;

/// Reads GRANLOWER_MAX_PERIOD, falling back to kDefaultMaxPeriod.
std::int64_t max_period_from_env();

struct ConvertOptions {
    bool minimize = true;
    std::int64_t max_period = kDefaultMaxPeriod;
};

// Positional selection over a sorted label list. Negative k counts from the
// end (-1 is the last element); positions outside the list are dropped.
std::vector<Label> delta_select(const std::vector<Label>& s, std::int64_t k, std::int64_t l);

PeriodicRep convert_group(const PeriodicRep& g, std::int64_t m, std::int64_t max_period = kDefaultMaxPeriod);
PeriodicRep convert_alter(const PeriodicRep& g2, const PeriodicRep& g1, std::int64_t l, std::int64_t k,
                          std::int64_t m, std::int64_t max_period = kDefaultMaxPeriod);
PeriodicRep convert_shift(const PeriodicRep& g, std::int64_t m);
Granularity convert_combine(const PeriodicRep& g1, const PeriodicRep& g2,
                            std::int64_t max_period = kDefaultMaxPeriod);
PeriodicRep convert_anchored(const PeriodicRep& g1, const PeriodicRep& g2,
                             std::int64_t max_period = kDefaultMaxPeriod);
Granularity convert_subset(const PeriodicRep& g, std::optional<Label> from, std::optional<Label> to);
Granularity convert_select_down(const PeriodicRep& g1, const PeriodicRep& g2, std::int64_t k, std::int64_t l,
                                std::int64_t max_period = kDefaultMaxPeriod);
Granularity convert_select_up(const PeriodicRep& g1, const PeriodicRep& g2,
                              std::int64_t max_period = kDefaultMaxPeriod);
Granularity convert_select_intersect(const PeriodicRep& g1, const PeriodicRep& g2, std::int64_t k,
                                     std::int64_t l, std::int64_t max_period = kDefaultMaxPeriod);
Granularity convert_set_op(const PeriodicRep& g1, const PeriodicRep& g2, ast::SetKind kind,
                           std::int64_t max_period = kDefaultMaxPeriod);

/// Relabels granule i as j and numbers the others consecutively.
PeriodicRep relabel(const PeriodicRep& g, Label i, Label j);

/// Relabel so the first granule made only of positive instants gets label 1.
PeriodicRep gstp_relabel(const PeriodicRep& g);
Granularity gstp_relabel(const Granularity& g);

struct TraceEntry {
    std::string path;
    std::string expr;
    bool cached = false;
    bool empty = false;
    std::int64_t period = 0;
    std::int64_t label_distance = 0;
    Label anchor = 0;
    std::int64_t granule_count = 0;
};

using StepTrace = std::vector<TraceEntry>;

/// Memo table keyed by canonical expression text (and the minimize flag).
class ConversionCache {
public:
    const Granularity* find(const std::string& key) const;
    void store(const std::string& key, Granularity g);
    std::size_t size() const { return table_.size(); }
    std::size_t hits() const { return hits_; }

private:
    std::map<std::string, Granularity> table_;
    mutable std::size_t hits_ = 0;
};

/// Post-order lowering of a closed expression. Pass a null cache to disable
/// memoization.
Granularity convert_expression(const Expr& e, ConversionCache* cache, const ConvertOptions& options = {},
                               StepTrace* trace = nullptr);

/// Convenience: rewrite a named definition to the bottom and lower it.
Granularity convert_definition(const CalendarDoc& doc, std::string_view name, ConversionCache* cache,
                               const ConvertOptions& options = {}, StepTrace* trace = nullptr);

} // namespace granlower

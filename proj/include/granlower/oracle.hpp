#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "granlower/ast.hpp"
#include "granlower/granularity.hpp"

namespace granlower {

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Result of evaluating an expression by its set definitions over a finite
/// window of bottom instants.
///
/// Inside the label range [first_label, last_label] the map is complete: a
/// label is present exactly when its granule is non-empty, and the stored
/// granule is the true one. Labels outside that range are not stored.
struct WindowEval {
    Instant lo = 0;
    Instant hi = 0;
    std::map<Label, GranuleSet> granules;
    std::optional<Label> first_label;
    std::optional<Label> last_label;
    /// Set by operations that drop granules of an operand: the instants the
    /// operand's granules in the complete range spanned. No granule outside
    /// the complete range meets them, even where the result has none.
    std::optional<std::pair<Instant, Instant>> known;

    bool complete() const { return first_label.has_value(); }

    /// Instants on which every true granule is known: `known` when set,
    /// otherwise from the first to the last instant of the granules in the
    /// complete range.
    std::optional<std::pair<Instant, Instant>> interior() const;
};

/// Evaluates a closed expression literally on bottom instants [lo, hi].
/// Throws OracleError if nothing of the result can be decided in the window.
WindowEval eval_window(const Expr& e, Instant lo, Instant hi);

struct Mismatch {
    Label label = 0;
    GranuleSet expected;  // oracle
    GranuleSet actual;    // periodic representation
};

struct ComparisonReport {
    std::vector<Mismatch> mismatches;
    std::size_t labels_checked = 0;

    bool ok() const { return mismatches.empty(); }
    std::string to_string() const;
};

/// Label-by-label comparison on the complete range of w, plus a check that
/// every label of rep meeting w's interior was seen by the oracle.
ComparisonReport compare_with_periodic(const WindowEval& w, const Granularity& rep);

} // namespace granlower

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace granlower {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

namespace ast {

struct BottomRef {};

struct NameRef {
    std::string name;
};

/// Group_m(operand)
struct Group {
    std::int64_t m;
    ExprPtr operand;
};

/// Alter^m_{l,k}(partitioner, base): the l-th of every m granules of base
/// gains (or loses) |k| granules of partitioner.
struct Alter {
    std::int64_t l;
    std::int64_t k;
    std::int64_t m;
    ExprPtr partitioner;
    ExprPtr base;
};

struct Shift {
    std::int64_t m;
    ExprPtr operand;
};

struct Combine {
    ExprPtr outer;
    ExprPtr inner;
};

/// Anchored-group(base, anchors)
struct Anchored {
    ExprPtr base;
    ExprPtr anchors;
};

/// Subset^to_from(operand); absent bounds are infinite.
struct Subset {
    std::optional<std::int64_t> from;
    std::optional<std::int64_t> to;
    ExprPtr operand;
};

struct SelectDown {
    std::int64_t k;
    std::int64_t l;
    ExprPtr selected;
    ExprPtr container;
};

struct SelectUp {
    ExprPtr selected;
    ExprPtr contained;
};

struct SelectIntersect {
    std::int64_t k;
    std::int64_t l;
    ExprPtr selected;
    ExprPtr other;
};

enum class SetKind { Union, Intersection, Difference };

struct SetOp {
    SetKind kind;
    ExprPtr first;
    ExprPtr second;
};

} // namespace ast

/// A Calendar Algebra expression node. Children are shared and immutable.
struct Expr {
    using Node = std::variant<ast::BottomRef, ast::NameRef, ast::Group, ast::Alter, ast::Shift,
                              ast::Combine, ast::Anchored, ast::Subset, ast::SelectDown, ast::SelectUp,
                              ast::SelectIntersect, ast::SetOp>;
    Node node;
};

template <typename T>
ExprPtr make_expr(T node)
{
    return std::make_shared<const Expr>(Expr{Expr::Node{std::move(node)}});
}

ExprPtr bottom_expr();
ExprPtr name_expr(std::string name);

/// Direct children of a node, in argument order.
std::vector<ExprPtr> children(const Expr& e);

/// Canonical textual form; BottomRef prints as `bottom_name`.
std::string print_expr(const Expr& e, std::string_view bottom_name);

/// Cache key for closed expressions.
inline std::string canonical_key(const Expr& e) { return print_expr(e, "$"); }

struct Definition {
    std::string name;
    ExprPtr expr;
    int line = 0;
};

/// A named set of granularity definitions over one bottom granularity.
struct CalendarDoc {
    std::string name;
    std::string bottom;
    std::vector<Definition> definitions;

    const Definition* find(std::string_view def_name) const;
};

std::string print_calendar(const CalendarDoc& doc);

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, const std::string& message);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

struct Finding {
    std::string definition;
    std::string rule;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;

    bool ok() const { return findings.empty(); }
    std::string to_string() const;
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(ValidationReport report);
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

namespace rule {
inline constexpr std::string_view parameter_range = "parameter range";
inline constexpr std::string_view unresolved_name = "unresolved name";
inline constexpr std::string_view duplicate_name = "duplicate name";
inline constexpr std::string_view subset_outermost = "Subset must be outermost";
} // namespace rule

/// Syntax only; no name resolution or range checks.
CalendarDoc parse_calendar_unchecked(std::string_view text);

/// Parses and validates; throws ParseError or ValidationError.
CalendarDoc parse_calendar(std::string_view text);

ValidationReport validate(const CalendarDoc& doc);

/// Hash-consing table: structurally identical closed expressions map to one node.
class ExprInterner {
public:
    ExprPtr intern(ExprPtr e);
    std::size_t size() const { return table_.size(); }

private:
    std::map<std::string, ExprPtr> table_;
};

/// Inlines every name reference so only BottomRef leaves remain.
ExprPtr rewrite_to_bottom(const CalendarDoc& doc, std::string_view target);
ExprPtr rewrite_to_bottom(const CalendarDoc& doc, std::string_view target, ExprInterner& interner);

} // namespace granlower

#include "granlower/ast.hpp"

#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace granlower {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string bound_text(const std::optional<std::int64_t>& b, bool upper)
{
    if (b)
        return std::to_string(*b);
    return upper ? "inf" : "-inf";
}

const char* set_keyword(ast::SetKind kind)
{
    switch (kind) {
    case ast::SetKind::Union:
        return "union";
    case ast::SetKind::Intersection:
        return "intersect";
    case ast::SetKind::Difference:
        return "difference";
    }
    return "?";
}

} // namespace

ExprPtr bottom_expr()
{
    return make_expr(ast::BottomRef{});
}

ExprPtr name_expr(std::string name)
{
    return make_expr(ast::NameRef{std::move(name)});
}

std::vector<ExprPtr> children(const Expr& e)
{
    return std::visit(overloaded{
                          [](const ast::BottomRef&) { return std::vector<ExprPtr>{}; },
                          [](const ast::NameRef&) { return std::vector<ExprPtr>{}; },
                          [](const ast::Group& n) { return std::vector<ExprPtr>{n.operand}; },
                          [](const ast::Alter& n) { return std::vector<ExprPtr>{n.partitioner, n.base}; },
                          [](const ast::Shift& n) { return std::vector<ExprPtr>{n.operand}; },
                          [](const ast::Combine& n) { return std::vector<ExprPtr>{n.outer, n.inner}; },
                          [](const ast::Anchored& n) { return std::vector<ExprPtr>{n.base, n.anchors}; },
                          [](const ast::Subset& n) { return std::vector<ExprPtr>{n.operand}; },
                          [](const ast::SelectDown& n) { return std::vector<ExprPtr>{n.selected, n.container}; },
                          [](const ast::SelectUp& n) { return std::vector<ExprPtr>{n.selected, n.contained}; },
                          [](const ast::SelectIntersect& n) { return std::vector<ExprPtr>{n.selected, n.other}; },
                          [](const ast::SetOp& n) { return std::vector<ExprPtr>{n.first, n.second}; },
                      },
                      e.node);
}

namespace {

ExprPtr with_children(const Expr& e, const std::vector<ExprPtr>& c)
{
    return std::visit(overloaded{
                          [&](const ast::BottomRef& n) { return make_expr(n); },
                          [&](const ast::NameRef& n) { return make_expr(n); },
                          [&](ast::Group n) { n.operand = c[0]; return make_expr(n); },
                          [&](ast::Alter n) { n.partitioner = c[0]; n.base = c[1]; return make_expr(n); },
                          [&](ast::Shift n) { n.operand = c[0]; return make_expr(n); },
                          [&](ast::Combine n) { n.outer = c[0]; n.inner = c[1]; return make_expr(n); },
                          [&](ast::Anchored n) { n.base = c[0]; n.anchors = c[1]; return make_expr(n); },
                          [&](ast::Subset n) { n.operand = c[0]; return make_expr(n); },
                          [&](ast::SelectDown n) { n.selected = c[0]; n.container = c[1]; return make_expr(n); },
                          [&](ast::SelectUp n) { n.selected = c[0]; n.contained = c[1]; return make_expr(n); },
                          [&](ast::SelectIntersect n) { n.selected = c[0]; n.other = c[1]; return make_expr(n); },
                          [&](ast::SetOp n) { n.first = c[0]; n.second = c[1]; return make_expr(n); },
                      },
                      e.node);
}

void print_into(std::ostream& os, const Expr& e, std::string_view bottom)
{
    auto rec = [&](const ExprPtr& c) { print_into(os, *c, bottom); };
    std::visit(overloaded{
                   [&](const ast::BottomRef&) { os << bottom; },
                   [&](const ast::NameRef& n) { os << n.name; },
                   [&](const ast::Group& n) { os << "group(" << n.m << ", "; rec(n.operand); os << ')'; },
                   [&](const ast::Alter& n) {
                       os << "alter(" << n.l << ", " << n.k << ", " << n.m << ", ";
                       rec(n.partitioner);
                       os << ", ";
                       rec(n.base);
                       os << ')';
                   },
                   [&](const ast::Shift& n) { os << "shift(" << n.m << ", "; rec(n.operand); os << ')'; },
                   [&](const ast::Combine& n) { os << "combine("; rec(n.outer); os << ", "; rec(n.inner); os << ')'; },
                   [&](const ast::Anchored& n) { os << "anchor("; rec(n.base); os << ", "; rec(n.anchors); os << ')'; },
                   [&](const ast::Subset& n) {
                       os << "subset(" << bound_text(n.from, false) << ", " << bound_text(n.to, true) << ", ";
                       rec(n.operand);
                       os << ')';
                   },
                   [&](const ast::SelectDown& n) {
                       os << "selectdown(" << n.k << ", " << n.l << ", ";
                       rec(n.selected);
                       os << ", ";
                       rec(n.container);
                       os << ')';
                   },
                   [&](const ast::SelectUp& n) { os << "selectup("; rec(n.selected); os << ", "; rec(n.contained); os << ')'; },
                   [&](const ast::SelectIntersect& n) {
                       os << "selectintersect(" << n.k << ", " << n.l << ", ";
                       rec(n.selected);
                       os << ", ";
                       rec(n.other);
                       os << ')';
                   },
                   [&](const ast::SetOp& n) {
                       os << set_keyword(n.kind) << '(';
                       rec(n.first);
                       os << ", ";
                       rec(n.second);
                       os << ')';
                   },
               },
               e.node);
}

} // namespace

std::string print_expr(const Expr& e, std::string_view bottom_name)
{
    std::ostringstream os;
    print_into(os, e, bottom_name);
    return os.str();
}

const Definition* CalendarDoc::find(std::string_view def_name) const
{
    for (const auto& d : definitions)
        if (d.name == def_name)
            return &d;
    return nullptr;
}

std::string print_calendar(const CalendarDoc& doc)
{
    std::ostringstream os;
    os << "calendar " << doc.name << " bottom " << doc.bottom << ";\n";
    for (const auto& d : doc.definitions)
        os << d.name << " = " << print_expr(*d.expr, doc.bottom) << ";\n";
    return os.str();
}

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line), column_(column)
{
}

std::string ValidationReport::to_string() const
{
    std::ostringstream os;
    for (const auto& f : findings)
        os << f.definition << ": " << f.rule << ": " << f.message << '\n';
    return os.str();
}

ValidationError::ValidationError(ValidationReport report)
    : std::runtime_error("calendar failed validation:\n" + report.to_string()), report_(std::move(report))
{
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, Int, Bound, LParen, RParen, Comma, Semi, Equals, End };

struct Token {
    Tok kind;
    std::string text;
    std::int64_t value = 0;
    int line = 1;
    int column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next()
    {
        skip_space();
        Token t;
        t.line = line_;
        t.column = col_;
        if (pos_ >= src_.size()) {
            t.kind = Tok::End;
            return t;
        }
        const char c = src_[pos_];
        auto single = [&](Tok k) {
            advance();
            t.kind = k;
            t.text = std::string(1, c);
            return t;
        };
        switch (c) {
        case '(':
            return single(Tok::LParen);
        case ')':
            return single(Tok::RParen);
        case ',':
            return single(Tok::Comma);
        case ';':
            return single(Tok::Semi);
        case '=':
            return single(Tok::Equals);
        default:
            break;
        }
        if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            if (c == '-' || c == '+')
                advance();
            if (src_.substr(pos_, 3) == "inf" && !ident_char_at(pos_ + 3)) {
                advance(3);
                t.kind = Tok::Bound;
                t.text = std::string(src_.substr(start, pos_ - start));
                return t;
            }
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
                throw ParseError(t.line, t.column, "expected a number after sign");
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                advance();
            t.text = std::string(src_.substr(start, pos_ - start));
            const char* first = t.text.data() + (t.text[0] == '+' ? 1 : 0);
            auto [ptr, ec] = std::from_chars(first, t.text.data() + t.text.size(), t.value);
            if (ec != std::errc{} || ptr != t.text.data() + t.text.size())
                throw ParseError(t.line, t.column, "integer literal out of range: " + t.text);
            t.kind = Tok::Int;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (ident_char_at(pos_))
                advance();
            t.text = std::string(src_.substr(start, pos_ - start));
            t.kind = t.text == "inf" ? Tok::Bound : Tok::Ident;
            return t;
        }
        throw ParseError(t.line, t.column, std::string("unexpected character '") + c + "'");
    }

private:
    bool ident_char_at(std::size_t p) const
    {
        if (p >= src_.size())
            return false;
        const char c = src_[p];
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    }

    void advance(std::size_t n = 1)
    {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_space()
    {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// One argument of an operator call: a literal or a sub-expression.
struct Arg {
    Token token;
    ExprPtr expr;  // null for literals
};

enum class Slot { Int, Bound, Expr };

struct OperatorSig {
    std::string_view name;
    std::vector<Slot> slots;
};

const std::vector<OperatorSig>& operators()
{
    static const std::vector<OperatorSig> table = {
        {"group", {Slot::Int, Slot::Expr}},
        {"alter", {Slot::Int, Slot::Int, Slot::Int, Slot::Expr, Slot::Expr}},
        {"shift", {Slot::Int, Slot::Expr}},
        {"combine", {Slot::Expr, Slot::Expr}},
        {"anchor", {Slot::Expr, Slot::Expr}},
        {"subset", {Slot::Bound, Slot::Bound, Slot::Expr}},
        {"selectdown", {Slot::Int, Slot::Int, Slot::Expr, Slot::Expr}},
        {"selectup", {Slot::Expr, Slot::Expr}},
        {"selectintersect", {Slot::Int, Slot::Int, Slot::Expr, Slot::Expr}},
        {"union", {Slot::Expr, Slot::Expr}},
        {"intersect", {Slot::Expr, Slot::Expr}},
        {"difference", {Slot::Expr, Slot::Expr}},
    };
    return table;
}

class Parser {
public:
    explicit Parser(std::string_view src) : lexer_(src) { cur_ = lexer_.next(); }

    CalendarDoc parse()
    {
        CalendarDoc doc;
        expect_keyword("calendar");
        doc.name = expect(Tok::Ident, "calendar name").text;
        expect_keyword("bottom");
        doc.bottom = expect(Tok::Ident, "bottom granularity name").text;
        bottom_ = doc.bottom;
        expect(Tok::Semi, "';'");
        while (cur_.kind != Tok::End) {
            Definition d;
            const Token name = expect(Tok::Ident, "definition name");
            d.name = name.text;
            d.line = name.line;
            expect(Tok::Equals, "'='");
            d.expr = parse_expr();
            expect(Tok::Semi, "';'");
            doc.definitions.push_back(std::move(d));
        }
        return doc;
    }

private:
    Token take()
    {
        Token t = cur_;
        cur_ = lexer_.next();
        return t;
    }

    [[noreturn]] void error_at(const Token& t, const std::string& msg) const
    {
        throw ParseError(t.line, t.column, msg);
    }

    Token expect(Tok kind, const std::string& what)
    {
        if (cur_.kind != kind)
            error_at(cur_, "expected " + what + (cur_.kind == Tok::End ? " at end of input" : ", found '" + cur_.text + "'"));
        return take();
    }

    void expect_keyword(std::string_view kw)
    {
        if (cur_.kind != Tok::Ident || cur_.text != kw)
            error_at(cur_, "expected '" + std::string(kw) + "'");
        take();
    }

    ExprPtr parse_expr()
    {
        if (cur_.kind != Tok::Ident)
            error_at(cur_, cur_.kind == Tok::End ? "expected an expression at end of input"
                                                 : "expected an expression, found '" + cur_.text + "'");
        const Token head = take();
        if (cur_.kind != Tok::LParen) {
            if (head.text == bottom_)
                return bottom_expr();
            return name_expr(head.text);
        }
        const OperatorSig* sig = nullptr;
        for (const auto& op : operators())
            if (op.name == head.text)
                sig = &op;
        if (!sig)
            error_at(head, "unknown operator '" + head.text + "'");
        take();  // (
        std::vector<Arg> args;
        if (cur_.kind != Tok::RParen) {
            for (;;) {
                args.push_back(parse_arg());
                if (cur_.kind == Tok::Comma) {
                    take();
                    continue;
                }
                break;
            }
        }
        expect(Tok::RParen, "')'");
        if (args.size() != sig->slots.size())
            error_at(head, "operator '" + head.text + "' takes " + std::to_string(sig->slots.size()) +
                               " arguments, got " + std::to_string(args.size()));
        for (std::size_t i = 0; i < args.size(); ++i) {
            const Arg& a = args[i];
            switch (sig->slots[i]) {
            case Slot::Expr:
                if (!a.expr)
                    error_at(a.token, "argument " + std::to_string(i + 1) + " of '" + head.text +
                                          "' must be an expression");
                break;
            case Slot::Int:
                if (a.expr || a.token.kind != Tok::Int)
                    error_at(a.token, a.token.kind == Tok::Bound
                                          ? "'" + a.token.text + "' is only allowed in subset bounds"
                                          : "argument " + std::to_string(i + 1) + " of '" + head.text +
                                                "' must be an integer");
                break;
            case Slot::Bound:
                if (a.expr)
                    error_at(a.token, "argument " + std::to_string(i + 1) + " of '" + head.text +
                                          "' must be an integer or infinite bound");
                break;
            }
        }
        return build(head.text, args);
    }

    Arg parse_arg()
    {
        if (cur_.kind == Tok::Int || cur_.kind == Tok::Bound)
            return Arg{take(), nullptr};
        Token at = cur_;
        return Arg{at, parse_expr()};
    }

    static std::optional<std::int64_t> bound_of(const Token& t)
    {
        if (t.kind == Tok::Bound)
            return std::nullopt;
        return t.value;
    }

    static ExprPtr build(const std::string& op, const std::vector<Arg>& a)
    {
        auto v = [&](std::size_t i) { return a[i].token.value; };
        if (op == "group")
            return make_expr(ast::Group{v(0), a[1].expr});
        if (op == "alter")
            return make_expr(ast::Alter{v(0), v(1), v(2), a[3].expr, a[4].expr});
        if (op == "shift")
            return make_expr(ast::Shift{v(0), a[1].expr});
        if (op == "combine")
            return make_expr(ast::Combine{a[0].expr, a[1].expr});
        if (op == "anchor")
            return make_expr(ast::Anchored{a[0].expr, a[1].expr});
        if (op == "subset") {
            // A lower bound of "inf" or an upper bound of "-inf" is kept
            // finite-less only in the intended direction.
            auto from = bound_of(a[0].token);
            auto to = bound_of(a[1].token);
            if ((!from && a[0].token.text != "-inf") || (!to && a[1].token.text == "-inf"))
                throw ParseError(a[0].token.line, a[0].token.column, "subset bounds must be -inf .. inf");
            return make_expr(ast::Subset{from, to, a[2].expr});
        }
        if (op == "selectdown")
            return make_expr(ast::SelectDown{v(0), v(1), a[2].expr, a[3].expr});
        if (op == "selectup")
            return make_expr(ast::SelectUp{a[0].expr, a[1].expr});
        if (op == "selectintersect")
            return make_expr(ast::SelectIntersect{v(0), v(1), a[2].expr, a[3].expr});
        if (op == "union")
            return make_expr(ast::SetOp{ast::SetKind::Union, a[0].expr, a[1].expr});
        if (op == "intersect")
            return make_expr(ast::SetOp{ast::SetKind::Intersection, a[0].expr, a[1].expr});
        return make_expr(ast::SetOp{ast::SetKind::Difference, a[0].expr, a[1].expr});
    }

    Lexer lexer_;
    Token cur_;
    std::string bottom_;
};

void check_params(const Expr& e, const std::string& def, bool outermost, ValidationReport& report,
                  const std::set<std::string>& known, const std::set<std::string>& bounded)
{
    auto add = [&](std::string_view rule, std::string msg) {
        report.findings.push_back({def, std::string(rule), std::move(msg)});
    };
    std::visit(overloaded{
                   [&](const ast::BottomRef&) {},
                   [&](const ast::NameRef& n) {
                       if (!known.count(n.name))
                           add(rule::unresolved_name, "'" + n.name + "' is not defined before use");
                       else if (bounded.count(n.name))
                           add(rule::subset_outermost,
                               "'" + n.name + "' is bounded by subset and cannot be used as an operand");
                   },
                   [&](const ast::Group& n) {
                       if (n.m < 1)
                           add(rule::parameter_range, "group factor must be a positive integer");
                   },
                   [&](const ast::Alter& n) {
                       if (n.m < 1 || n.l < 1 || n.l > n.m)
                           add(rule::parameter_range, "alter requires 1 <= l <= m");
                   },
                   [&](const ast::Shift&) {},
                   [&](const ast::Combine&) {},
                   [&](const ast::Anchored&) {},
                   [&](const ast::Subset& n) {
                       if (!outermost)
                           add(rule::subset_outermost, "subset may only be the last step of a definition");
                       if (n.from && n.to && *n.from > *n.to)
                           add(rule::parameter_range, "subset requires m <= n");
                   },
                   [&](const ast::SelectDown& n) {
                       if (n.k == 0 || n.l < 1)
                           add(rule::parameter_range, "selectdown requires k != 0 and l > 0");
                   },
                   [&](const ast::SelectUp&) {},
                   [&](const ast::SelectIntersect& n) {
                       if (n.k == 0 || n.l < 1)
                           add(rule::parameter_range, "selectintersect requires k != 0 and l > 0");
                   },
                   [&](const ast::SetOp&) {},
               },
               e.node);
    for (const auto& c : children(e))
        check_params(*c, def, false, report, known, bounded);
}

} // namespace

CalendarDoc parse_calendar_unchecked(std::string_view text)
{
    return Parser(text).parse();
}

CalendarDoc parse_calendar(std::string_view text)
{
    CalendarDoc doc = parse_calendar_unchecked(text);
    ValidationReport report = validate(doc);
    if (!report.ok())
        throw ValidationError(std::move(report));
    return doc;
}

ValidationReport validate(const CalendarDoc& doc)
{
    ValidationReport report;
    std::set<std::string> known;
    std::set<std::string> bounded;
    for (const auto& d : doc.definitions) {
        if (d.name == doc.bottom || known.count(d.name))
            report.findings.push_back({d.name, std::string(rule::duplicate_name), "'" + d.name + "' is defined twice"});
        check_params(*d.expr, d.name, true, report, known, bounded);
        known.insert(d.name);
        if (std::holds_alternative<ast::Subset>(d.expr->node))
            bounded.insert(d.name);
    }
    return report;
}

ExprPtr ExprInterner::intern(ExprPtr e)
{
    auto [it, inserted] = table_.emplace(canonical_key(*e), e);
    return it->second;
}

namespace {

ExprPtr rewrite(const CalendarDoc& doc, const ExprPtr& e, ExprInterner& interner,
                std::map<std::string, ExprPtr>& done, std::set<std::string>& active)
{
    if (std::holds_alternative<ast::BottomRef>(e->node))
        return interner.intern(e);
    if (const auto* ref = std::get_if<ast::NameRef>(&e->node)) {
        if (ref->name == doc.bottom)
            return interner.intern(bottom_expr());
        if (auto it = done.find(ref->name); it != done.end())
            return it->second;
        const Definition* def = doc.find(ref->name);
        if (!def)
            throw ValidationError(ValidationReport{{{ref->name, std::string(rule::unresolved_name),
                                                     "'" + ref->name + "' is not defined"}}});
        if (!active.insert(ref->name).second)
            throw ValidationError(ValidationReport{{{ref->name, std::string(rule::unresolved_name),
                                                     "'" + ref->name + "' is defined in terms of itself"}}});
        ExprPtr out = rewrite(doc, def->expr, interner, done, active);
        active.erase(ref->name);
        done.emplace(ref->name, out);
        return out;
    }
    std::vector<ExprPtr> kids = children(*e);
    for (auto& k : kids)
        k = rewrite(doc, k, interner, done, active);
    return interner.intern(with_children(*e, kids));
}

} // namespace

ExprPtr rewrite_to_bottom(const CalendarDoc& doc, std::string_view target, ExprInterner& interner)
{
    std::map<std::string, ExprPtr> done;
    std::set<std::string> active;
    return rewrite(doc, name_expr(std::string(target)), interner, done, active);
}

ExprPtr rewrite_to_bottom(const CalendarDoc& doc, std::string_view target)
{
    ExprInterner interner;
    return rewrite_to_bottom(doc, target, interner);
}

} // namespace granlower

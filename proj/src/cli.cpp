#include "granlower/cli.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "granlower/converter.hpp"
#include "granlower/oracle.hpp"
#include "granlower/serialize.hpp"

namespace granlower::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> names_in_order(const CalendarDoc& doc, const std::optional<std::string>& target)
{
    if (target) {
        if (*target != doc.bottom && !doc.find(*target))
            throw UsageError("no definition named '" + *target + "'");
        return {*target};
    }
    std::vector<std::string> names{doc.bottom};
    for (const auto& d : doc.definitions)
        names.push_back(d.name);
    return names;
}

ConvertOptions options(bool minimize)
{
    ConvertOptions o;
    o.minimize = minimize;
    o.max_period = max_period_from_env();
    return o;
}

Granularity convert_one(const CalendarDoc& doc, const std::string& name, ConversionCache& cache,
                        const ConvertOptions& opts)
{
    try {
        return convert_definition(doc, name, &cache, opts);
    } catch (const ConversionError& e) {
        throw ConversionError(name + ": " + e.detail(), e.path());
    }
}

} // namespace

CalendarDoc load_calendar(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open calendar file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_calendar(text.str());
}

std::map<std::string, Granularity> convert_all(const CalendarDoc& doc, const std::optional<std::string>& target,
                                               bool minimize, bool gstp)
{
    ConversionCache cache;
    const ConvertOptions opts = options(minimize);
    std::map<std::string, Granularity> out;
    for (const auto& name : names_in_order(doc, target)) {
        Granularity g = convert_one(doc, name, cache, opts);
        if (gstp)
            g = gstp_relabel(g);
        out.emplace(name, std::move(g));
    }
    return out;
}

std::string render_convert(const CalendarDoc& doc, const std::optional<std::string>& target, bool minimize,
                           bool gstp, Format format)
{
    const auto reps = convert_all(doc, target, minimize, gstp);
    const auto names = names_in_order(doc, target);
    if (format == Format::Json) {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& name : names)
            j[name] = nlohmann::ordered_json::parse(to_json(reps.at(name)).dump());
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    for (const auto& name : names)
        os << "# " << name << '\n' << to_text(reps.at(name));
    return os.str();
}

std::string render_expand(const CalendarDoc& doc, const std::string& name, Label first, Label last)
{
    if (first > last)
        throw UsageError("label range is empty");
    const Granularity g = convert_all(doc, name, true, false).at(name);
    const auto* rep = std::get_if<PeriodicRep>(&g);
    std::ostringstream os;
    for (Label j = first; j <= last; ++j) {
        os << j << ':';
        const GranuleSet s = rep ? rep->expand(j) : GranuleSet{};
        if (s.empty())
            os << " empty";
        for (Instant x : s)
            os << ' ' << x;
        os << '\n';
    }
    return os.str();
}

std::string render_up(const CalendarDoc& doc, const std::string& name, Instant t)
{
    const Granularity g = convert_all(doc, name, true, false).at(name);
    const auto* rep = std::get_if<PeriodicRep>(&g);
    const auto label = rep ? rep->up(t) : std::nullopt;
    return (label ? std::to_string(*label) : std::string("none")) + "\n";
}

bool VerifyResult::ok() const
{
    return std::all_of(checks.begin(), checks.end(), [](const DefinitionCheck& c) { return c.passed; });
}

VerifyResult verify_definitions(const CalendarDoc& doc, const std::map<std::string, Granularity>& reps,
                                std::int64_t window, std::uint64_t seed)
{
    VerifyResult result;
    std::mt19937_64 rng(seed);
    for (const auto& name : names_in_order(doc, std::nullopt)) {
        auto it = reps.find(name);
        if (it == reps.end())
            continue;
        const ExprPtr closed = rewrite_to_bottom(doc, name);

        // The largest period met on the unminimized path bounds how far the
        // oracle has to look.
        StepTrace trace;
        ConvertOptions raw = options(false);
        convert_expression(*closed, nullptr, raw, &trace);
        std::int64_t widest = 1;
        for (const auto& t : trace)
            widest = std::max(widest, t.period);
        const std::int64_t needed = checked_mul(3, widest);

        DefinitionCheck check;
        check.name = name;
        std::int64_t w = window > 0 ? window : needed;
        if (w < needed) {
            result.warnings.push_back(name + ": window " + std::to_string(w) + " is below 3x the largest period (" +
                                      std::to_string(needed) + "); raised");
            w = needed;
        }
        const auto* rep = std::get_if<PeriodicRep>(&it->second);
        const std::int64_t own_period = rep ? rep->period() : 1;
        std::uniform_int_distribution<std::int64_t> offset(-w, w);
        const Instant start = offset(rng);

        for (int attempt = 0;; ++attempt) {
            check.window = w;
            check.lo = start;
            check.hi = start + w - 1;
            std::optional<WindowEval> eval;
            try {
                eval = eval_window(*closed, check.lo, check.hi);
            } catch (const OracleError&) {
            }
            std::optional<std::pair<Instant, Instant>> span = eval ? eval->interior() : std::nullopt;
            const bool enough = eval && (!rep || (span && span->second - span->first + 1 >= own_period)) &&
                                (rep || eval->complete());
            if (!enough) {
                if (attempt >= 5) {
                    check.detail = "oracle could not decide a full period even with window " + std::to_string(w);
                    break;
                }
                result.warnings.push_back(name + ": window " + std::to_string(w) +
                                          " leaves less than one period decidable; doubled");
                w = checked_mul(w, 2);
                continue;
            }
            const ComparisonReport report = compare_with_periodic(*eval, it->second);
            check.labels_checked = report.labels_checked;
            check.passed = report.ok();
            check.detail = report.to_string();
            break;
        }
        result.checks.push_back(std::move(check));
    }
    return result;
}

std::pair<Label, Label> parse_label_range(const std::string& text)
{
    const auto dots = text.find("..");
    if (dots == std::string::npos)
        throw UsageError("label range must look like A..B, got '" + text + "'");
    try {
        std::size_t used = 0;
        const std::string a = text.substr(0, dots);
        const std::string b = text.substr(dots + 2);
        const Label first = std::stoll(a, &used);
        if (used != a.size())
            throw UsageError("bad label range '" + text + "'");
        const Label last = std::stoll(b, &used);
        if (used != b.size())
            throw UsageError("bad label range '" + text + "'");
        return {first, last};
    } catch (const std::logic_error&) {
        throw UsageError("bad label range '" + text + "'");
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Lower calendar algebra definitions to periodic granularity representations", "granlower"};
    app.require_subcommand(1);

    std::string file;
    std::optional<std::string> target;
    bool minimize = true;
    bool gstp = false;
    std::string format = "json";
    auto* convert = app.add_subcommand("convert", "Convert definitions to periodic representations");
    convert->add_option("FILE", file, "Calendar file")->required();
    convert->add_option("--target", target, "Only this definition");
    convert->add_flag("--minimize,!--no-minimize", minimize, "Minimize periods (default on)");
    convert->add_flag("--gstp", gstp, "Relabel so the first all-positive granule is 1");
    convert->add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}));

    std::string name;
    std::string labels;
    auto* expand = app.add_subcommand("expand", "List the bottom instants of a range of labels");
    expand->add_option("FILE", file, "Calendar file")->required();
    expand->add_option("NAME", name, "Definition")->required();
    expand->add_option("--labels", labels, "Label range A..B")->required();

    std::int64_t window = 0;
    std::uint64_t seed = 0;
    auto* verify = app.add_subcommand("verify", "Check every definition against the brute-force evaluator");
    verify->add_option("FILE", file, "Calendar file")->required();
    verify->add_option("--window", window, "Window size in bottom instants");
    verify->add_option("--seed", seed, "Seed for the window offset");

    std::int64_t instant = 0;
    auto* up = app.add_subcommand("up", "Label of the granule containing a bottom instant");
    up->add_option("FILE", file, "Calendar file")->required();
    up->add_option("NAME", name, "Definition")->required();
    up->add_option("--instant", instant, "Bottom instant")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        const CalendarDoc doc = load_calendar(file);
        if (convert->parsed()) {
            out << render_convert(doc, target, minimize, gstp, format == "text" ? Format::Text : Format::Json);
        } else if (expand->parsed()) {
            const auto [a, b] = parse_label_range(labels);
            out << render_expand(doc, name, a, b);
        } else if (up->parsed()) {
            out << render_up(doc, name, instant);
        } else if (verify->parsed()) {
            const auto reps = convert_all(doc, std::nullopt, true, false);
            const VerifyResult r = verify_definitions(doc, reps, window, seed);
            for (const auto& w : r.warnings)
                err << "warning: " << w << '\n';
            for (const auto& c : r.checks)
                out << c.name << ": " << (c.passed ? "ok" : "MISMATCH") << " (window [" << c.lo << ", " << c.hi
                    << "], " << c.labels_checked << " labels)\n"
                    << (c.passed ? "" : c.detail);
            return r.ok() ? kOk : kMismatch;
        }
        return kOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kParse;
    } catch (const ValidationError& e) {
        err << e.what();
        return kParse;
    } catch (const ConversionError& e) {
        err << "conversion error: " << e.what() << '\n';
        return kConversion;
    } catch (const GranularityError& e) {
        err << "conversion error: " << e.what() << '\n';
        return kConversion;
    } catch (const OverflowError& e) {
        err << "conversion error: " << e.what() << '\n';
        return kConversion;
    }
}

} // namespace granlower::cli

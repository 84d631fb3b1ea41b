#include "xbench/configspace.hpp"

#include "xbench/common.hpp"
#include "xbench/toml_lite.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace xbench {

std::string_view to_string(ParamKind kind) {
    switch (kind) {
        case ParamKind::Categorical: return "categorical";
        case ParamKind::Integer: return "integer";
        case ParamKind::OrdinalNumeric: return "ordinal";
    }
    return "?";
}

ParamKind parse_param_kind(std::string_view text) {
    if (text == "categorical") return ParamKind::Categorical;
    if (text == "integer") return ParamKind::Integer;
    if (text == "ordinal") return ParamKind::OrdinalNumeric;
    throw ValidationError("unknown parameter kind '" + std::string(text) + "' (categorical|integer|ordinal)");
}

std::string ParamValue::text() const {
    if (is_na()) return "NA";
    if (is_label()) return as_label();
    return format_double(as_number());
}

// ---------------------------------------------------------------------------
// Predicates

namespace {

std::string_view op_text(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "==";
        case CompareOp::Ne: return "!=";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
    }
    return "?";
}

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

Comparison parse_comparison(std::string_view text) {
    static constexpr std::array<std::pair<std::string_view, CompareOp>, 6> ops{{
        {"==", CompareOp::Eq},
        {"!=", CompareOp::Ne},
        {"<=", CompareOp::Le},
        {">=", CompareOp::Ge},
        {"<", CompareOp::Lt},
        {">", CompareOp::Gt},
    }};
    for (const auto& [sym, op] : ops) {
        const auto pos = text.find(sym);
        if (pos == std::string_view::npos) continue;
        Comparison c;
        c.lhs = trim(text.substr(0, pos));
        c.op = op;
        const std::string rhs = trim(text.substr(pos + sym.size()));
        if (c.lhs.empty() || rhs.empty() || !std::all_of(c.lhs.begin(), c.lhs.end(), is_ident_char))
            throw ValidationError("malformed comparison '" + std::string(text) + "'");
        if (rhs.size() >= 2 && (rhs.front() == '\'' || rhs.front() == '"') && rhs.back() == rhs.front()) {
            c.rhs = ParamValue::label(rhs.substr(1, rhs.size() - 2));
        } else if (std::isdigit(static_cast<unsigned char>(rhs.front())) || rhs.front() == '-' || rhs.front() == '.') {
            c.rhs = ParamValue::number(parse_double(rhs, c.lhs));
        } else if (std::all_of(rhs.begin(), rhs.end(), is_ident_char)) {
            c.rhs = rhs;
        } else {
            throw ValidationError("malformed comparison '" + std::string(text) + "'");
        }
        return c;
    }
    throw ValidationError("no comparison operator in '" + std::string(text) + "'");
}

bool compare_values(const ParamValue& a, CompareOp op, const ParamValue& b) {
    if (a.is_na() || b.is_na()) return op == CompareOp::Ne && a != b;
    if (a.is_number() && b.is_number()) {
        const double x = a.as_number();
        const double y = b.as_number();
        switch (op) {
            case CompareOp::Eq: return x == y;
            case CompareOp::Ne: return x != y;
            case CompareOp::Lt: return x < y;
            case CompareOp::Le: return x <= y;
            case CompareOp::Gt: return x > y;
            case CompareOp::Ge: return x >= y;
        }
    }
    const std::string x = a.text();
    const std::string y = b.text();
    switch (op) {
        case CompareOp::Eq: return x == y;
        case CompareOp::Ne: return x != y;
        case CompareOp::Lt: return x < y;
        case CompareOp::Le: return x <= y;
        case CompareOp::Gt: return x > y;
        case CompareOp::Ge: return x >= y;
    }
    return false;
}

std::vector<std::string> referenced(const Comparison& c) {
    std::vector<std::string> out{c.lhs};
    if (c.rhs_is_param()) out.push_back(std::get<std::string>(c.rhs));
    return out;
}

}  // namespace

std::string Comparison::text() const {
    std::string out = lhs + " " + std::string(op_text(op)) + " ";
    if (rhs_is_param()) {
        out += std::get<std::string>(rhs);
    } else {
        const auto& v = std::get<ParamValue>(rhs);
        out += v.is_label() ? "'" + v.as_label() + "'" : v.text();
    }
    return out;
}

Predicate parse_predicate(std::string_view text) {
    Predicate p;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find("&&", start);
        const auto part = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        if (!trim(part).empty()) p.push_back(parse_comparison(part));
        if (pos == std::string_view::npos) break;
        start = pos + 2;
    }
    return p;
}

std::string predicate_text(const Predicate& p) {
    std::string out;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i > 0) out += " && ";
        out += p[i].text();
    }
    return out;
}

bool evaluate_comparison(const Comparison& c, const ConfigurationSpace& space, const std::vector<ParamValue>& values) {
    const ParamValue& lhs = values[space.require_index(c.lhs)];
    if (c.rhs_is_param()) {
        const ParamValue& rhs = values[space.require_index(std::get<std::string>(c.rhs))];
        return compare_values(lhs, c.op, rhs);
    }
    return compare_values(lhs, c.op, std::get<ParamValue>(c.rhs));
}

bool evaluate_predicate(const Predicate& p, const ConfigurationSpace& space, const std::vector<ParamValue>& values) {
    return std::all_of(p.begin(), p.end(), [&](const Comparison& c) { return evaluate_comparison(c, space, values); });
}

// ---------------------------------------------------------------------------
// Space

ConfigurationSpace::ConfigurationSpace(std::string family, std::vector<ParameterSpec> params,
                                       std::vector<Comparison> constraints)
    : family_(std::move(family)), params_(std::move(params)), constraints_(std::move(constraints)) {
    if (family_.empty()) throw ValidationError("space: empty family name");
    std::set<std::string, std::less<>> names;
    for (const auto& p : params_) {
        if (p.name.empty()) throw ValidationError("space: parameter with empty name");
        if (!names.insert(p.name).second) throw ValidationError("space: duplicate parameter '" + p.name + "'");
        if (p.domain.empty()) throw ValidationError("parameter '" + p.name + "': empty domain");
        std::set<ParamValue> seen;
        for (const auto& v : p.domain) {
            if (v.is_na()) throw ValidationError("parameter '" + p.name + "': NA is not a domain value");
            if (p.kind == ParamKind::Categorical && !v.is_label())
                throw ValidationError("parameter '" + p.name + "': categorical domain needs labels");
            if (p.kind != ParamKind::Categorical && !v.is_number())
                throw ValidationError("parameter '" + p.name + "': numeric domain needs numbers");
            if (p.kind == ParamKind::Integer && v.as_number() != std::floor(v.as_number()))
                throw ValidationError("parameter '" + p.name + "': integer domain has non-integer " + v.text());
            if (!seen.insert(v).second)
                throw ValidationError("parameter '" + p.name + "': duplicate domain value " + v.text());
        }
        if (std::find(p.domain.begin(), p.domain.end(), p.default_value) == p.domain.end())
            throw ValidationError("parameter '" + p.name + "': default " + p.default_value.text() + " not in domain");
    }
    const auto check_refs = [&](const Comparison& c, const std::string& where) {
        for (const auto& r : referenced(c))
            if (!names.contains(r)) throw ValidationError(where + ": unknown parameter '" + r + "'");
    };
    for (const auto& p : params_) {
        for (const auto& c : p.condition) {
            check_refs(c, "condition of '" + p.name + "'");
            if (c.rhs_is_param())
                throw ValidationError("condition of '" + p.name + "': conditions compare against literals only");
        }
    }
    for (const auto& c : constraints_) check_refs(c, "constraint '" + c.text() + "'");

    // Kahn's algorithm, lowest declared index first among ready parameters.
    const std::size_t n = params_.size();
    std::vector<std::vector<std::size_t>> deps(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& c : params_[i].condition) deps[i].push_back(*index_of(c.lhs));
    std::vector<bool> placed(n, false);
    while (order_.size() < n) {
        bool progressed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (placed[i]) continue;
            if (std::all_of(deps[i].begin(), deps[i].end(), [&](std::size_t d) { return placed[d] && d != i; })) {
                placed[i] = true;
                order_.push_back(i);
                progressed = true;
                break;
            }
        }
        if (!progressed) throw ValidationError("space '" + family_ + "': cyclic parameter conditions");
    }
}

std::optional<std::size_t> ConfigurationSpace::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return i;
    return std::nullopt;
}

std::size_t ConfigurationSpace::require_index(std::string_view name) const {
    const auto idx = index_of(name);
    if (!idx) throw ValidationError("space '" + family_ + "' has no parameter '" + std::string(name) + "'");
    return *idx;
}

Configuration ConfigurationSpace::default_configuration() const {
    Configuration c{family_, std::vector<ParamValue>(params_.size())};
    for (const std::size_t i : order_)
        c.values[i] = evaluate_predicate(params_[i].condition, *this, c.values) ? params_[i].default_value
                                                                                : ParamValue::na();
    return c;
}

const ParamValue& Configuration::get(const ConfigurationSpace& space, std::string_view name) const {
    return values.at(space.require_index(name));
}

void Configuration::set(const ConfigurationSpace& space, std::string_view name, ParamValue value) {
    values.at(space.require_index(name)) = std::move(value);
}

std::vector<Violation> validate(const Configuration& config, const ConfigurationSpace& space) {
    std::vector<Violation> out;
    if (config.family != space.family())
        out.push_back({"family", "configuration family '" + config.family + "' != space '" + space.family() + "'"});
    if (config.values.size() != space.size()) {
        out.push_back({"values", "expected " + std::to_string(space.size()) + " values, got " +
                                     std::to_string(config.values.size())});
        return out;
    }
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& spec = space.params()[i];
        const auto& v = config.values[i];
        const bool active = evaluate_predicate(spec.condition, space, config.values);
        if (active) {
            if (v.is_na()) {
                out.push_back({spec.name, "active parameter is NA"});
            } else if (std::find(spec.domain.begin(), spec.domain.end(), v) == spec.domain.end()) {
                out.push_back({spec.name, "value " + v.text() + " not in domain"});
            }
        } else if (!v.is_na()) {
            out.push_back({spec.name, "inactive parameter must be NA"});
        }
    }
    for (const auto& c : space.constraints()) {
        bool involves_na = false;
        for (const auto& r : referenced(c)) involves_na |= config.values[space.require_index(r)].is_na();
        if (!involves_na && !evaluate_comparison(c, space, config.values))
            out.push_back({c.text(), "constraint violated"});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grid and sampling

namespace {

// Constraints whose referenced parameters are all assigned once the evaluation
// order reaches position k; lets the enumeration prune early.
std::vector<std::vector<std::size_t>> constraints_ready_at(const ConfigurationSpace& space) {
    const auto& order = space.evaluation_order();
    std::vector<std::size_t> position(space.size());
    for (std::size_t k = 0; k < order.size(); ++k) position[order[k]] = k;
    std::vector<std::vector<std::size_t>> ready(std::max<std::size_t>(order.size(), 1));
    for (std::size_t ci = 0; ci < space.constraints().size(); ++ci) {
        std::size_t last = 0;
        for (const auto& r : referenced(space.constraints()[ci])) last = std::max(last, position[space.require_index(r)]);
        ready[last].push_back(ci);
    }
    return ready;
}

bool constraint_ok(const Comparison& c, const ConfigurationSpace& space, const std::vector<ParamValue>& values) {
    for (const auto& r : referenced(c))
        if (values[space.require_index(r)].is_na()) return true;
    return evaluate_comparison(c, space, values);
}

template <typename Visit>
void walk_grid(const ConfigurationSpace& space, Visit&& visit) {
    const auto& order = space.evaluation_order();
    const auto ready = constraints_ready_at(space);
    std::vector<ParamValue> values(space.size());
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == order.size()) {
            visit(values);
            return;
        }
        const std::size_t pi = order[k];
        const auto& spec = space.params()[pi];
        const auto check = [&] {
            return std::all_of(ready[k].begin(), ready[k].end(),
                               [&](std::size_t ci) { return constraint_ok(space.constraints()[ci], space, values); });
        };
        if (!evaluate_predicate(spec.condition, space, values)) {
            values[pi] = ParamValue::na();
            if (check()) rec(k + 1);
        } else {
            for (const auto& v : spec.domain) {
                values[pi] = v;
                if (check()) rec(k + 1);
            }
        }
        values[pi] = ParamValue::na();
    };
    if (order.empty()) {
        visit(values);
        return;
    }
    rec(0);
}

std::vector<int> grid_key(const Configuration& c, const ConfigurationSpace& space) {
    std::vector<int> key(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& d = space.params()[i].domain;
        const auto it = std::find(d.begin(), d.end(), c.values[i]);
        key[i] = it == d.end() ? -1 : static_cast<int>(it - d.begin());
    }
    return key;
}

}  // namespace

std::vector<Configuration> enumerate_grid(const ConfigurationSpace& space) {
    std::vector<Configuration> out;
    walk_grid(space, [&](const std::vector<ParamValue>& v) { out.push_back({space.family(), v}); });
    const auto& order = space.evaluation_order();
    if (!std::is_sorted(order.begin(), order.end())) {
        std::vector<std::pair<std::vector<int>, std::size_t>> keyed;
        keyed.reserve(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) keyed.emplace_back(grid_key(out[i], space), i);
        std::sort(keyed.begin(), keyed.end());
        std::vector<Configuration> sorted;
        sorted.reserve(out.size());
        for (const auto& [key, i] : keyed) sorted.push_back(std::move(out[i]));
        out = std::move(sorted);
    }
    return out;
}

std::uint64_t count_grid(const ConfigurationSpace& space) {
    std::uint64_t n = 0;
    walk_grid(space, [&](const std::vector<ParamValue>&) { ++n; });
    return n;
}

std::vector<Configuration> sample_random(const ConfigurationSpace& space, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ValidationError("sample_random: n must be >= 1");
    Rng rng(mix_seed(seed, fnv1a(space.family())));
    std::vector<Configuration> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        bool accepted = false;
        for (int attempt = 0; attempt < kSampleRetryBound && !accepted; ++attempt) {
            std::vector<ParamValue> values(space.size());
            for (const std::size_t pi : space.evaluation_order()) {
                const auto& spec = space.params()[pi];
                if (!evaluate_predicate(spec.condition, space, values)) continue;
                std::uniform_int_distribution<std::size_t> pick(0, spec.domain.size() - 1);
                values[pi] = spec.domain[pick(rng)];
            }
            const bool ok = std::all_of(space.constraints().begin(), space.constraints().end(),
                                        [&](const Comparison& c) { return constraint_ok(c, space, values); });
            if (ok) {
                out.push_back({space.family(), std::move(values)});
                accepted = true;
            }
        }
        if (!accepted)
            throw ValidationError("sample_random: no feasible configuration after " +
                                  std::to_string(kSampleRetryBound) + " attempts (space '" + space.family() + "')");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

std::vector<std::string> sorted_labels(const ParameterSpec& spec) {
    std::vector<std::string> labels;
    for (const auto& v : spec.domain) labels.push_back(v.as_label());
    std::sort(labels.begin(), labels.end());
    return labels;
}

}  // namespace

std::vector<double> encode(const Configuration& config, const ConfigurationSpace& space) {
    if (config.values.size() != space.size()) throw ValidationError("encode: configuration width mismatch");
    std::vector<double> out(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& spec = space.params()[i];
        const auto& v = config.values[i];
        if (v.is_na()) {
            out[i] = -1.0;
            continue;
        }
        if (std::find(spec.domain.begin(), spec.domain.end(), v) == spec.domain.end())
            throw ValidationError("encode: parameter '" + spec.name + "' value " + v.text() + " not in domain");
        if (spec.kind == ParamKind::Categorical) {
            const auto labels = sorted_labels(spec);
            out[i] = static_cast<double>(std::find(labels.begin(), labels.end(), v.as_label()) - labels.begin());
        } else {
            out[i] = v.as_number();
        }
    }
    return out;
}

Configuration decode(const std::vector<double>& features, const ConfigurationSpace& space) {
    if (features.size() != space.size()) throw ValidationError("decode: feature width mismatch");
    Configuration c{space.family(), std::vector<ParamValue>(space.size())};
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& spec = space.params()[i];
        const double f = features[i];
        if (f == -1.0) continue;
        if (spec.kind == ParamKind::Categorical) {
            const auto labels = sorted_labels(spec);
            if (f < 0 || f != std::floor(f) || f >= static_cast<double>(labels.size()))
                throw ValidationError("decode: parameter '" + spec.name + "' bad code " + format_double(f));
            c.values[i] = ParamValue::label(labels[static_cast<std::size_t>(f)]);
        } else {
            const auto v = ParamValue::number(f);
            if (std::find(spec.domain.begin(), spec.domain.end(), v) == spec.domain.end())
                throw ValidationError("decode: parameter '" + spec.name + "' value " + v.text() + " not in domain");
            c.values[i] = v;
        }
    }
    return c;
}

std::string canonical_form(const Configuration& config, const ConfigurationSpace& space) {
    std::string out = config.family;
    for (std::size_t i = 0; i < space.size(); ++i) out += ";" + space.params()[i].name + "=" + config.values.at(i).text();
    return out;
}

std::string config_id(const Configuration& config, const ConfigurationSpace& space) {
    return to_hex(fnv1a(canonical_form(config, space)));
}

std::string config_csv_header(const ConfigurationSpace& space) {
    std::string out = "config_id";
    for (const auto& p : space.params()) out += "," + p.name;
    return out;
}

std::string config_csv_row(const Configuration& config, const ConfigurationSpace& space) {
    std::string out = config_id(config, space);
    for (const auto& v : config.values) out += "," + v.text();
    return out;
}

ParamValue parse_value_for(const ParameterSpec& spec, std::string_view text) {
    if (text == "NA") return ParamValue::na();
    ParamValue v = spec.kind == ParamKind::Categorical ? ParamValue::label(std::string(text))
                                                       : ParamValue::number(parse_double(text, spec.name));
    if (std::find(spec.domain.begin(), spec.domain.end(), v) == spec.domain.end())
        throw ValidationError("parameter '" + spec.name + "': value '" + std::string(text) + "' not in domain");
    return v;
}

Configuration parse_assignment(std::string_view text, const ConfigurationSpace& space) {
    std::vector<std::optional<ParamValue>> given(space.size());
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string item = trim(text.substr(start, end - start));
        start = end + 1;
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ValidationError("assignment '" + item + "': expected name=value");
        const std::string name = trim(std::string_view(item).substr(0, eq));
        const std::size_t idx = space.require_index(name);
        given[idx] = parse_value_for(space.params()[idx], trim(std::string_view(item).substr(eq + 1)));
    }
    Configuration c{space.family(), std::vector<ParamValue>(space.size())};
    for (const std::size_t i : space.evaluation_order()) {
        const auto& spec = space.params()[i];
        if (!evaluate_predicate(spec.condition, space, c.values)) continue;
        c.values[i] = given[i] ? *given[i] : spec.default_value;
    }
    const auto violations = validate(c, space);
    if (!violations.empty())
        throw ValidationError("configuration invalid: " + violations.front().subject + ": " + violations.front().message);
    return c;
}

// ---------------------------------------------------------------------------
// Space files

ConfigurationSpace parse_space(std::string_view text) {
    const auto doc = toml::parse(text);
    const std::string family = doc.root.at("family").as_string("family");
    std::vector<ParameterSpec> params;
    for (const auto& t : doc.array("param")) {
        ParameterSpec spec;
        spec.name = t.at("name").as_string("name");
        spec.kind = parse_param_kind(t.at("kind").as_string("kind"));
        const auto to_value = [&](const toml::Value& v, std::string_view key) {
            if (spec.kind == ParamKind::Categorical) {
                if (v.kind == toml::Value::Kind::Bool) return ParamValue::label(v.boolean ? "true" : "false");
                return ParamValue::label(v.as_string(key));
            }
            return ParamValue::number(v.as_number(key));
        };
        for (const auto& item : t.at("domain").as_array("domain")) spec.domain.push_back(to_value(item, "domain"));
        spec.default_value = to_value(t.at("default"), "default");
        if (const auto* cond = t.find("condition")) spec.condition = parse_predicate(cond->as_string("condition"));
        params.push_back(std::move(spec));
    }
    std::vector<Comparison> constraints;
    for (const auto& t : doc.array("constraint")) {
        auto p = parse_predicate(t.at("expr").as_string("expr"));
        constraints.insert(constraints.end(), p.begin(), p.end());
    }
    return {family, std::move(params), std::move(constraints)};
}

ConfigurationSpace load_space(const std::string& path) {
    try {
        return parse_space(read_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::string space_to_text(const ConfigurationSpace& space) {
    std::ostringstream out;
    out << "family = " << toml::quote(space.family()) << "\n";
    const auto value_text = [](const ParamValue& v) { return v.is_label() ? toml::quote(v.as_label()) : v.text(); };
    for (const auto& p : space.params()) {
        out << "\n[[param]]\n";
        out << "name = " << toml::quote(p.name) << "\n";
        out << "kind = " << toml::quote(to_string(p.kind)) << "\n";
        out << "domain = [";
        for (std::size_t i = 0; i < p.domain.size(); ++i) out << (i ? ", " : "") << value_text(p.domain[i]);
        out << "]\n";
        out << "default = " << value_text(p.default_value) << "\n";
        if (!p.condition.empty()) out << "condition = " << toml::quote(predicate_text(p.condition)) << "\n";
    }
    for (const auto& c : space.constraints()) out << "\n[[constraint]]\nexpr = " << toml::quote(c.text()) << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Shipped spaces

namespace {

ParameterSpec categorical(std::string name, std::vector<std::string> labels, std::string def) {
    ParameterSpec p{std::move(name), ParamKind::Categorical, {}, {}, ParamValue::label(std::move(def))};
    for (auto& l : labels) p.domain.push_back(ParamValue::label(std::move(l)));
    return p;
}

ParameterSpec numeric(std::string name, ParamKind kind, std::vector<double> values, double def) {
    ParameterSpec p{std::move(name), kind, {}, {}, ParamValue::number(def)};
    for (const double v : values) p.domain.push_back(ParamValue::number(v));
    return p;
}

}  // namespace

ConfigurationSpace modcma_space() {
    std::vector<ParameterSpec> params{
        categorical("covariance", {"false", "true"}, "true"),
        categorical("active", {"false", "true"}, "false"),
        categorical("base_sampler", {"Gaussian", "Halton", "Sobol"}, "Gaussian"),
        categorical("elitist", {"false", "true"}, "false"),
        categorical("mirrored", {"off", "mirrored", "pairwise"}, "off"),
        categorical("weights_option", {"default", "equal", "lambda-decay"}, "default"),
        categorical("step_size_adaptation", {"CSA", "PSR"}, "CSA"),
        categorical("local_restart", {"none", "IPOP", "BIPOP"}, "none"),
        numeric("lambda", ParamKind::Integer, {5, 8, 10, 14, 20, 200}, 8),
        numeric("mu", ParamKind::Integer, {2, 4, 5, 7, 10, 20, 100}, 4),
    };
    return {"modcma", std::move(params), parse_predicate("mu <= lambda")};
}

ConfigurationSpace modde_space() {
    std::vector<ParameterSpec> params{
        categorical("base", {"best", "rand", "target"}, "rand"),
        categorical("ref", {"none", "best", "pbest", "rand"}, "none"),
        numeric("diffs", ParamKind::Integer, {1, 2}, 1),
        categorical("archive", {"false", "true"}, "false"),
        categorical("crossover", {"bin", "exp"}, "bin"),
        categorical("adaptation_method", {"none", "jDE", "shade"}, "none"),
        categorical("lpsr", {"false", "true"}, "false"),
        numeric("lambda", ParamKind::Integer, {8, 10, 14, 50, 60, 300}, 8),
        numeric("F", ParamKind::OrdinalNumeric, {0.25, 0.5, 0.75, 1.25, 1.75}, 0.5),
        numeric("CR", ParamKind::OrdinalNumeric, {0.05, 0.25, 0.5, 0.75, 1.0}, 0.5),
    };
    return {"modde", std::move(params), {}};
}

ConfigurationSpace random_search_space() { return {"random", {}, {}}; }

}  // namespace xbench

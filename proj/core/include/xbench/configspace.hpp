#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace xbench {

enum class ParamKind { Categorical, Integer, OrdinalNumeric };

std::string_view to_string(ParamKind kind);
ParamKind parse_param_kind(std::string_view text);

/// A single parameter value: a categorical label, a number, or "not applicable"
/// for a conditional parameter whose condition does not hold.
class ParamValue {
public:
    ParamValue() = default;  // not applicable
    static ParamValue na() { return {}; }
    static ParamValue label(std::string text) { return ParamValue(std::move(text)); }
    static ParamValue number(double v) { return ParamValue(v); }

    [[nodiscard]] bool is_na() const { return std::holds_alternative<std::monostate>(v_); }
    [[nodiscard]] bool is_label() const { return std::holds_alternative<std::string>(v_); }
    [[nodiscard]] bool is_number() const { return std::holds_alternative<double>(v_); }
    [[nodiscard]] const std::string& as_label() const { return std::get<std::string>(v_); }
    [[nodiscard]] double as_number() const { return std::get<double>(v_); }

    /// "NA", the label, or the shortest round-trip number text.
    [[nodiscard]] std::string text() const;

    friend bool operator==(const ParamValue&, const ParamValue&) = default;
    friend auto operator<=>(const ParamValue&, const ParamValue&) = default;

private:
    explicit ParamValue(std::string text) : v_(std::move(text)) {}
    explicit ParamValue(double v) : v_(v) {}
    std::variant<std::monostate, std::string, double> v_;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

/// `lhs <op> rhs` where lhs is a parameter name and rhs is either another
/// parameter name or a literal value.
struct Comparison {
    std::string lhs;
    CompareOp op = CompareOp::Eq;
    std::variant<std::string, ParamValue> rhs;

    [[nodiscard]] bool rhs_is_param() const { return std::holds_alternative<std::string>(rhs); }
    [[nodiscard]] std::string text() const;
    friend bool operator==(const Comparison&, const Comparison&) = default;
};

/// Conjunction of comparisons. Empty means "always".
using Predicate = std::vector<Comparison>;

/// Parses "a == 'x' && b <= c && n != 3". Bare identifiers on the right are
/// parameter references; quoted text and numbers are literals.
Predicate parse_predicate(std::string_view text);
std::string predicate_text(const Predicate& p);

struct ParameterSpec {
    std::string name;
    ParamKind kind = ParamKind::Categorical;
    std::vector<ParamValue> domain;
    Predicate condition;
    ParamValue default_value;

    friend bool operator==(const ParameterSpec&, const ParameterSpec&) = default;
};

struct Configuration;

class ConfigurationSpace {
public:
    /// Validates every structural invariant (unique names, non-empty duplicate-free
    /// domains, default in domain, known references, acyclic conditions);
    /// throws ValidationError otherwise.
    ConfigurationSpace(std::string family, std::vector<ParameterSpec> params, std::vector<Comparison> constraints);

    [[nodiscard]] const std::string& family() const { return family_; }
    [[nodiscard]] const std::vector<ParameterSpec>& params() const { return params_; }
    [[nodiscard]] const std::vector<Comparison>& constraints() const { return constraints_; }
    [[nodiscard]] std::size_t size() const { return params_.size(); }

    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const;
    [[nodiscard]] std::size_t require_index(std::string_view name) const;

    /// Parameters ordered so that every condition only references earlier entries.
    [[nodiscard]] const std::vector<std::size_t>& evaluation_order() const { return order_; }

    /// Configuration holding each parameter's default (inactive ones as NA).
    [[nodiscard]] Configuration default_configuration() const;

    friend bool operator==(const ConfigurationSpace& a, const ConfigurationSpace& b) {
        return a.family_ == b.family_ && a.params_ == b.params_ && a.constraints_ == b.constraints_;
    }

private:
    std::string family_;
    std::vector<ParameterSpec> params_;
    std::vector<Comparison> constraints_;
    std::vector<std::size_t> order_;
};

struct Configuration {
    std::string family;
    std::vector<ParamValue> values;  // aligned with ConfigurationSpace::params()

    [[nodiscard]] const ParamValue& get(const ConfigurationSpace& space, std::string_view name) const;
    void set(const ConfigurationSpace& space, std::string_view name, ParamValue value);

    friend bool operator==(const Configuration&, const Configuration&) = default;
};

struct Violation {
    std::string subject;  // parameter name or constraint text
    std::string message;
};

/// True if `p` holds for the (possibly partial) assignment; comparisons involving
/// NA are false except `!=`.
bool evaluate_predicate(const Predicate& p, const ConfigurationSpace& space, const std::vector<ParamValue>& values);
bool evaluate_comparison(const Comparison& c, const ConfigurationSpace& space, const std::vector<ParamValue>& values);

std::vector<Violation> validate(const Configuration& config, const ConfigurationSpace& space);

/// Cartesian product of active domains filtered by conditions and constraints,
/// ordered lexicographically by (parameter order, domain order), NA first.
std::vector<Configuration> enumerate_grid(const ConfigurationSpace& space);

/// Number of grid configurations, without materializing them.
std::uint64_t count_grid(const ConfigurationSpace& space);

/// Maximum rejection-sampling attempts per requested configuration.
inline constexpr int kSampleRetryBound = 10'000;

/// Rejection sampling: active parameters drawn uniformly from their domains in
/// evaluation order, constraints checked afterwards. Throws ValidationError when a
/// single configuration takes more than kSampleRetryBound attempts.
std::vector<Configuration> sample_random(const ConfigurationSpace& space, std::size_t n, std::uint64_t seed);

/// One slot per parameter: categorical -> index in the alphabetically sorted
/// domain, numeric -> value, NA -> -1.
std::vector<double> encode(const Configuration& config, const ConfigurationSpace& space);
Configuration decode(const std::vector<double>& features, const ConfigurationSpace& space);

/// Canonical text "family;name=value;..." and its 16-hex-digit FNV-1a hash.
std::string canonical_form(const Configuration& config, const ConfigurationSpace& space);
std::string config_id(const Configuration& config, const ConfigurationSpace& space);

/// CSV header "config_id,<names...>" and matching row.
std::string config_csv_header(const ConfigurationSpace& space);
std::string config_csv_row(const Configuration& config, const ConfigurationSpace& space);

/// Parses a configuration from "name=value,name=value"; missing parameters take
/// defaults, inactive ones become NA.
Configuration parse_assignment(std::string_view text, const ConfigurationSpace& space);
ParamValue parse_value_for(const ParameterSpec& spec, std::string_view text);

// Space files (see docs/space_format.md).
ConfigurationSpace parse_space(std::string_view text);
ConfigurationSpace load_space(const std::string& path);
std::string space_to_text(const ConfigurationSpace& space);

/// The shipped modular CMA-ES and modular DE spaces (module tables incl. mu <= lambda).
ConfigurationSpace modcma_space();
ConfigurationSpace modde_space();
/// Parameterless space for the random-search baseline.
ConfigurationSpace random_search_space();

}  // namespace xbench

#pragma once

// Brute-force grid counter that shares nothing with the library's enumerator:
// it walks the full odometer over (domain + NA) for every parameter and checks
// each candidate with its own comparison logic.

#include "xbench/configspace.hpp"

#include <cstdint>
#include <vector>

namespace oracle {

inline int compare_values(const xbench::ParamValue& a, const xbench::ParamValue& b) {
    if (a.is_number() && b.is_number()) return a.as_number() < b.as_number() ? -1 : (a.as_number() > b.as_number() ? 1 : 0);
    const std::string ta = a.text();
    const std::string tb = b.text();
    return ta < tb ? -1 : (ta > tb ? 1 : 0);
}

inline bool holds(const xbench::Comparison& c, const xbench::ConfigurationSpace& s,
                  const std::vector<xbench::ParamValue>& v, bool na_result) {
    const auto& lhs = v[*s.index_of(c.lhs)];
    const xbench::ParamValue rhs =
        c.rhs_is_param() ? v[*s.index_of(std::get<std::string>(c.rhs))] : std::get<xbench::ParamValue>(c.rhs);
    if (lhs.is_na() || rhs.is_na()) return na_result || c.op == xbench::CompareOp::Ne;
    const int k = compare_values(lhs, rhs);
    switch (c.op) {
        case xbench::CompareOp::Eq: return k == 0;
        case xbench::CompareOp::Ne: return k != 0;
        case xbench::CompareOp::Lt: return k < 0;
        case xbench::CompareOp::Le: return k <= 0;
        case xbench::CompareOp::Gt: return k > 0;
        case xbench::CompareOp::Ge: return k >= 0;
    }
    return false;
}

inline std::uint64_t brute_force_count(const xbench::ConfigurationSpace& s) {
    const auto& params = s.params();
    std::vector<std::vector<xbench::ParamValue>> choices;
    for (const auto& p : params) {
        auto c = p.domain;
        if (!p.condition.empty()) c.insert(c.begin(), xbench::ParamValue::na());
        choices.push_back(c);
    }
    std::vector<std::size_t> digit(params.size(), 0);
    std::vector<xbench::ParamValue> values(params.size());
    std::uint64_t count = 0;
    while (true) {
        for (std::size_t i = 0; i < params.size(); ++i) values[i] = choices[i][digit[i]];
        bool ok = true;
        for (std::size_t i = 0; i < params.size() && ok; ++i) {
            bool active = true;
            for (const auto& c : params[i].condition) active = active && holds(c, s, values, false);
            ok = active != values[i].is_na();
        }
        for (const auto& c : s.constraints())
            if (ok) ok = holds(c, s, values, true);
        if (ok) ++count;
        std::size_t k = params.size();
        while (k > 0) {
            --k;
            if (++digit[k] < choices[k].size()) break;
            digit[k] = 0;
            if (k == 0) return count;
        }
        if (params.empty()) return count;
    }
}

}  // namespace oracle

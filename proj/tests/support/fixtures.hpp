#pragma once

#include "xbench/configspace.hpp"
#include "xbench/runner.hpp"

#include <string>
#include <vector>

namespace fixtures {

inline xbench::ParameterSpec cat(std::string name, const std::vector<std::string>& dom) {
    xbench::ParameterSpec p;
    p.name = std::move(name);
    p.kind = xbench::ParamKind::Categorical;
    for (const auto& d : dom) p.domain.push_back(xbench::ParamValue::label(d));
    p.default_value = p.domain.front();
    return p;
}

inline xbench::ParameterSpec num(std::string name, const std::vector<double>& dom) {
    xbench::ParameterSpec p;
    p.name = std::move(name);
    p.kind = xbench::ParamKind::Integer;
    for (double d : dom) p.domain.push_back(xbench::ParamValue::number(d));
    p.default_value = p.domain.front();
    return p;
}

inline xbench::runner::RunRecord record(const xbench::Configuration& c, const xbench::ConfigurationSpace& space, int fid,
                                        int dim, int iid, int seed, double aocc) {
    xbench::runner::RunRecord r;
    r.config = c;
    r.config_id = xbench::config_id(c, space);
    r.fid = fid;
    r.dim = dim;
    r.iid = iid;
    r.seed = seed;
    r.aocc = aocc;
    return r;
}

}  // namespace fixtures

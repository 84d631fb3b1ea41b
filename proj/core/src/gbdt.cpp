#include "xbench/gbdt.hpp"

#include "xbench/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace xbench::gbdt {

namespace {

void check_input(std::span<const double> x, int n_features) {
    if (static_cast<int>(x.size()) != n_features) {
        throw ValidationError("predict: expected " + std::to_string(n_features) + " features, got " +
                              std::to_string(x.size()));
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!std::isfinite(x[j])) throw ValidationError("predict: feature " + std::to_string(j) + " is not finite");
    }
}

int depth_of(const Tree& tree, int node) {
    const Node& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_of(tree, n.left), depth_of(tree, n.right));
}

// ---------------------------------------------------------------------------
// Tree growing

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& X, const std::vector<double>& residual, const FitParams& params)
        : X_(X), r_(residual), params_(params), m_(static_cast<int>(X.front().size())), goes_left_(X.size()) {}

    Tree build(const std::vector<std::vector<std::size_t>>& sorted) {
        Tree tree;
        grow(tree, sorted, 0);
        return tree;
    }

private:
    int grow(Tree& tree, const std::vector<std::vector<std::size_t>>& sorted, int depth) {
        const auto& rows = sorted.front();
        const auto n = static_cast<double>(rows.size());
        double sum = 0.0;
        bool pure = true;
        for (std::size_t i : rows) {
            sum += r_[i];
            pure = pure && r_[i] == r_[rows.front()];
        }
        const int index = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(Node{.cover = n});
        if (pure || depth >= params_.max_depth || rows.size() < 2 * static_cast<std::size_t>(params_.min_leaf)) {
            tree.nodes[static_cast<std::size_t>(index)].value = sum / n;
            return index;
        }
        const Split split = best_split(sorted, sum);
        if (split.feature < 0) {
            tree.nodes[static_cast<std::size_t>(index)].value = sum / n;
            return index;
        }
        for (std::size_t i : rows) goes_left_[i] = X_[i][static_cast<std::size_t>(split.feature)] < split.threshold;
        std::vector<std::vector<std::size_t>> left(sorted.size());
        std::vector<std::vector<std::size_t>> right(sorted.size());
        for (std::size_t f = 0; f < sorted.size(); ++f) {
            for (std::size_t i : sorted[f]) (goes_left_[i] ? left[f] : right[f]).push_back(i);
        }
        const int l = grow(tree, left, depth + 1);
        const int r = grow(tree, right, depth + 1);
        Node& node = tree.nodes[static_cast<std::size_t>(index)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return index;
    }

    // Features are scanned in ascending order and thresholds ascending within a
    // feature; only a strictly larger gain replaces the incumbent.
    Split best_split(const std::vector<std::vector<std::size_t>>& sorted, double sum) const {
        Split best;
        const std::size_t n = sorted.front().size();
        const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
        const double parent = sum * sum / static_cast<double>(n);
        for (int f = 0; f < m_; ++f) {
            const auto& order = sorted[static_cast<std::size_t>(f)];
            double left_sum = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left_sum += r_[order[k]];
                const double a = X_[order[k]][static_cast<std::size_t>(f)];
                const double b = X_[order[k + 1]][static_cast<std::size_t>(f)];
                if (!(a < b)) continue;
                const std::size_t nl = k + 1;
                if (nl < min_leaf || n - nl < min_leaf) continue;
                const double right_sum = sum - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(nl) +
                                    right_sum * right_sum / static_cast<double>(n - nl) - parent;
                if (best.feature < 0 || gain > best.gain) {
                    double thr = a + (b - a) / 2.0;
                    if (!(a < thr) || !(thr <= b)) thr = b;
                    best = Split{f, thr, gain};
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& X_;
    const std::vector<double>& r_;
    const FitParams& params_;
    int m_;
    std::vector<char> goes_left_;
};

// ---------------------------------------------------------------------------
// TreeSHAP path bookkeeping

struct PathElement {
    int feature = -1;
    double zero_fraction = 0.0;
    double one_fraction = 0.0;
    double weight = 0.0;
};

// Ratios (i+1)/(d+1), (d-i)/(d+1) and their inverses for every path length.
struct PathRatios {
    static constexpr int kSize = kMaxFeatures + 2;
    double up[kSize][kSize];
    double down[kSize][kSize];
    double inv_up[kSize][kSize];
    double inv_down[kSize][kSize];

    PathRatios() {
        for (int d = 0; d < kSize; ++d) {
            for (int i = 0; i < kSize; ++i) {
                up[d][i] = (i + 1) / static_cast<double>(d + 1);
                down[d][i] = (d - i) / static_cast<double>(d + 1);
                inv_up[d][i] = (d + 1) / static_cast<double>(i + 1);
                inv_down[d][i] = i < d ? (d + 1) / static_cast<double>(d - i) : 0.0;
            }
        }
    }
};

const PathRatios& ratios() {
    static const PathRatios table;
    return table;
}

// Each recursion level owns a segment of one shared buffer (copied from its
// parent's segment), so the walk allocates nothing.
void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction, int feature) {
    const auto& r = ratios();
    path[depth] = PathElement{feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
    for (int i = depth - 1; i >= 0; --i) {
        path[i + 1].weight += one_fraction * path[i].weight * r.up[depth][i];
        path[i].weight = zero_fraction * path[i].weight * r.down[depth][i];
    }
}

void unwind_path(PathElement* path, int depth, int index) {
    const auto& r = ratios();
    const double one = path[index].one_fraction;
    const double zero = path[index].zero_fraction;
    double next = path[depth].weight;
    for (int i = depth - 1; i >= 0; --i) {
        if (one != 0.0) {
            const double tmp = path[i].weight;
            path[i].weight = next * r.inv_up[depth][i] / one;
            next = tmp - path[i].weight * zero * r.down[depth][i];
        } else {
            path[i].weight = path[i].weight * r.inv_down[depth][i] / zero;
        }
    }
    for (int i = index; i < depth; ++i) {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

// Only called for elements with one_fraction != 0.
double unwound_path_sum(const PathElement* path, int depth, int index) {
    const auto& r = ratios();
    const double inv_one = 1.0 / path[index].one_fraction;
    const double zero = path[index].zero_fraction;
    double next = path[depth].weight;
    double total = 0.0;
    for (int i = depth - 1; i >= 0; --i) {
        const double tmp = next * r.inv_up[depth][i] * inv_one;
        total += tmp;
        next = path[i].weight - tmp * zero * r.down[depth][i];
    }
    return total;
}

void shap_recurse(const Tree& tree, int node_index, std::span<const double> x, std::vector<double>& phi,
                  PathElement* parent_path, int depth, double zero_fraction, double one_fraction, int feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, zero_fraction, one_fraction, feature);
    const Node& node = tree.nodes[static_cast<std::size_t>(node_index)];
    if (node.is_leaf()) {
        // For elements with one_fraction == 0 the unwound sum is (1/zero_fraction)
        // times a path-wide constant, so it is computed once per leaf.
        double cold = -1.0;
        for (int i = 1; i <= depth; ++i) {
            double w = 0.0;
            if (path[i].one_fraction != 0.0) {
                w = unwound_path_sum(path, depth, i);
            } else {
                if (cold < 0.0) {
                    cold = 0.0;
                    for (int k = 0; k < depth; ++k) cold += path[k].weight * ratios().inv_down[depth][k];
                }
                w = cold / path[i].zero_fraction;
            }
            phi[static_cast<std::size_t>(path[i].feature)] += w * (path[i].one_fraction - path[i].zero_fraction) * node.value;
        }
        return;
    }
    const bool left = x[static_cast<std::size_t>(node.feature)] < node.threshold;
    const int hot = left ? node.left : node.right;
    const int cold = left ? node.right : node.left;
    double incoming_zero = 1.0;
    double incoming_one = 1.0;
    for (int k = 1; k <= depth; ++k) {
        if (path[k].feature == node.feature) {
            incoming_zero = path[k].zero_fraction;
            incoming_one = path[k].one_fraction;
            unwind_path(path, depth, k);
            --depth;
            break;
        }
    }
    const double hot_cover = tree.nodes[static_cast<std::size_t>(hot)].cover;
    const double cold_cover = tree.nodes[static_cast<std::size_t>(cold)].cover;
    shap_recurse(tree, hot, x, phi, path, depth + 1, incoming_zero * hot_cover / node.cover, incoming_one,
                 node.feature);
    shap_recurse(tree, cold, x, phi, path, depth + 1, incoming_zero * cold_cover / node.cover, 0.0, node.feature);
}

double tree_conditional(const Tree& tree, int node_index, std::span<const double> x, std::uint32_t mask) {
    const Node& node = tree.nodes[static_cast<std::size_t>(node_index)];
    if (node.is_leaf()) return node.value;
    if (mask & (1u << node.feature)) {
        return tree_conditional(tree, x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right,
                                x, mask);
    }
    const Node& l = tree.nodes[static_cast<std::size_t>(node.left)];
    const Node& r = tree.nodes[static_cast<std::size_t>(node.right)];
    return (l.cover * tree_conditional(tree, node.left, x, mask) + r.cover * tree_conditional(tree, node.right, x, mask)) /
           node.cover;
}

void validate_tree(const Tree& tree, int n_features, std::size_t t) {
    const std::string where = "model: tree " + std::to_string(t);
    if (tree.nodes.empty()) throw ValidationError(where + " has no nodes");
    std::vector<int> parents(tree.nodes.size(), 0);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const Node& n = tree.nodes[i];
        const std::string at = where + " node " + std::to_string(i);
        if (!(n.cover > 0.0) || !std::isfinite(n.cover)) throw ValidationError(at + " has non-positive cover");
        if (n.is_leaf()) {
            if (!std::isfinite(n.value)) throw ValidationError(at + " has a non-finite leaf value");
            continue;
        }
        if (n.feature >= n_features) throw ValidationError(at + " splits on an unknown feature");
        if (!std::isfinite(n.threshold)) throw ValidationError(at + " has a non-finite threshold");
        const auto size = static_cast<int>(tree.nodes.size());
        if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= size || n.right >= size ||
            n.left == n.right) {
            throw ValidationError(at + " has invalid child links");
        }
        ++parents[static_cast<std::size_t>(n.left)];
        ++parents[static_cast<std::size_t>(n.right)];
        const double sum = tree.nodes[static_cast<std::size_t>(n.left)].cover + tree.nodes[static_cast<std::size_t>(n.right)].cover;
        if (std::abs(sum - n.cover) > 1e-9 * std::max(1.0, n.cover)) {
            throw ValidationError(at + " cover does not equal the sum of its children");
        }
    }
    for (std::size_t i = 1; i < parents.size(); ++i) {
        if (parents[i] != 1) throw ValidationError(where + " node " + std::to_string(i) + " is not reachable exactly once");
    }
}

}  // namespace

double Tree::predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
        const Node& n = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

int Tree::depth() const { return nodes.empty() ? 0 : depth_of(*this, 0); }

double Tree::expected_value() const { return tree_conditional(*this, 0, {}, 0u); }

double Ensemble::predict(std::span<const double> x) const {
    check_input(x, n_features);
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return base_score + learning_rate * sum;
}

Ensemble fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y, const FitParams& params) {
    if (X.size() != y.size()) throw ValidationError("fit: X and y have different row counts");
    if (X.size() < 2) throw ValidationError("fit: need at least 2 rows");
    if (params.max_depth < 0 || params.n_trees < 0 || params.min_leaf < 1 || !(params.learning_rate > 0.0)) {
        throw ValidationError("fit: invalid parameters");
    }
    const std::size_t m = X.front().size();
    if (m == 0) throw ValidationError("fit: no features");
    if (m > static_cast<std::size_t>(kMaxFeatures)) {
        throw ValidationError("fit: at most " + std::to_string(kMaxFeatures) + " features are supported");
    }
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].size() != m) throw ValidationError("fit: ragged feature matrix at row " + std::to_string(i));
        for (double v : X[i]) {
            if (!std::isfinite(v)) throw ValidationError("fit: non-finite feature at row " + std::to_string(i));
        }
        if (!std::isfinite(y[i])) throw ValidationError("fit: non-finite target at row " + std::to_string(i));
    }

    Ensemble model;
    model.n_features = static_cast<int>(m);
    model.learning_rate = params.learning_rate;
    model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
        model.base_score = y.front();
        return model;
    }

    std::vector<std::vector<std::size_t>> sorted(m, std::vector<std::size_t>(X.size()));
    for (std::size_t f = 0; f < m; ++f) {
        std::iota(sorted[f].begin(), sorted[f].end(), std::size_t{0});
        std::stable_sort(sorted[f].begin(), sorted[f].end(),
                         [&](std::size_t a, std::size_t b) { return X[a][f] < X[b][f]; });
    }

    std::vector<double> prediction(y.size(), model.base_score);
    std::vector<double> residual(y.size());
    for (int t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - prediction[i];
        TreeBuilder builder(X, residual, params);
        Tree tree = builder.build(sorted);
        for (std::size_t i = 0; i < y.size(); ++i) prediction[i] += params.learning_rate * tree.predict(X[i]);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double r2_score(std::span<const double> y, std::span<const double> prediction) {
    if (y.size() != prediction.size() || y.empty()) throw ValidationError("r2_score: size mismatch");
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - prediction[i]) * (y[i] - prediction[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

std::vector<double> tree_shap(const Tree& tree, std::span<const double> x, int n_features) {
    std::vector<double> phi(static_cast<std::size_t>(n_features), 0.0);
    if (tree.nodes.empty()) return phi;
    const auto d = static_cast<std::size_t>(tree.depth() + 2);
    std::vector<PathElement> buffer(d * (d + 1) / 2 + d);
    // the root level reads an empty parent segment at offset 0 and writes from 1
    shap_recurse(tree, 0, x, phi, buffer.data(), 0, 1.0, 1.0, -1);
    return phi;
}

Explanation tree_shap(const Ensemble& ensemble, std::span<const double> x) {
    check_input(x, ensemble.n_features);
    Explanation out;
    out.base = ensemble.base_score;
    out.phi.assign(static_cast<std::size_t>(ensemble.n_features), 0.0);
    for (const auto& tree : ensemble.trees) {
        out.base += ensemble.learning_rate * tree.expected_value();
        const auto phi = tree_shap(tree, x, ensemble.n_features);
        for (std::size_t j = 0; j < phi.size(); ++j) out.phi[j] += ensemble.learning_rate * phi[j];
    }
    return out;
}

double conditional_expectation(const Ensemble& ensemble, std::span<const double> x, std::uint32_t mask) {
    double sum = 0.0;
    for (const auto& tree : ensemble.trees) sum += tree_conditional(tree, 0, x, mask);
    return ensemble.base_score + ensemble.learning_rate * sum;
}

Explanation brute_shap(const Ensemble& ensemble, std::span<const double> x) {
    const int m = ensemble.n_features;
    if (m > kBruteForceMaxFeatures) {
        throw ValidationError("brute_shap: " + std::to_string(m) + " features exceed the limit of " +
                              std::to_string(kBruteForceMaxFeatures));
    }
    check_input(x, m);
    const std::uint32_t full = (1u << m);
    std::vector<double> value(full);
    for (std::uint32_t s = 0; s < full; ++s) value[s] = conditional_expectation(ensemble, x, s);
    // |S|! (m - |S| - 1)! / m!
    std::vector<double> coef(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        coef[static_cast<std::size_t>(k)] = std::exp(std::lgamma(k + 1.0) + std::lgamma(m - k) - std::lgamma(m + 1.0));
    }
    Explanation out;
    out.base = value[0];
    out.phi.assign(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < m; ++j) {
        const std::uint32_t bit = 1u << j;
        double sum = 0.0;
        for (std::uint32_t s = 0; s < full; ++s) {
            if (s & bit) continue;
            sum += coef[static_cast<std::size_t>(std::popcount(s))] * (value[s | bit] - value[s]);
        }
        out.phi[static_cast<std::size_t>(j)] = sum;
    }
    return out;
}

std::string to_json(const Ensemble& ensemble) {
    nlohmann::ordered_json doc;
    doc["format"] = "xbench-gbdt";
    doc["version"] = 1;
    doc["loss"] = "squared_error";
    doc["n_features"] = ensemble.n_features;
    doc["base_score"] = ensemble.base_score;
    doc["learning_rate"] = ensemble.learning_rate;
    auto trees = nlohmann::ordered_json::array();
    for (const auto& tree : ensemble.trees) {
        auto nodes = nlohmann::ordered_json::array();
        for (const auto& n : tree.nodes) {
            nlohmann::ordered_json j;
            if (n.is_leaf()) {
                j["value"] = n.value;
            } else {
                j["feature"] = n.feature;
                j["threshold"] = n.threshold;
                j["left"] = n.left;
                j["right"] = n.right;
            }
            j["cover"] = n.cover;
            nodes.push_back(std::move(j));
        }
        trees.push_back(nlohmann::ordered_json{{"nodes", std::move(nodes)}});
    }
    doc["trees"] = std::move(trees);
    return doc.dump(1) + "\n";
}

Ensemble from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("model: invalid JSON: ") + e.what());
    }
    try {
        if (doc.value("format", "") != "xbench-gbdt") throw ValidationError("model: not an xbench-gbdt document");
        Ensemble model;
        model.n_features = doc.at("n_features").get<int>();
        model.base_score = doc.at("base_score").get<double>();
        model.learning_rate = doc.at("learning_rate").get<double>();
        if (model.n_features < 1 || model.n_features > kMaxFeatures) {
            throw ValidationError("model: n_features must be in [1, " + std::to_string(kMaxFeatures) + "]");
        }
        for (const auto& jt : doc.at("trees")) {
            Tree tree;
            for (const auto& jn : jt.at("nodes")) {
                Node n;
                n.cover = jn.at("cover").get<double>();
                if (jn.contains("feature")) {
                    n.feature = jn.at("feature").get<int>();
                    if (n.feature < 0) throw ValidationError("model: negative feature index");
                    n.threshold = jn.at("threshold").get<double>();
                    n.left = jn.at("left").get<int>();
                    n.right = jn.at("right").get<int>();
                } else {
                    n.value = jn.at("value").get<double>();
                }
                tree.nodes.push_back(n);
            }
            validate_tree(tree, model.n_features, model.trees.size());
            model.trees.push_back(std::move(tree));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model: malformed document: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

std::vector<SwarmRow> swarm_data(const runner::FeatureFrame& frame, const Ensemble& model, int fid, int dim) {
    std::vector<SwarmRow> rows;
    rows.reserve(frame.X.size() * frame.columns.size());
    for (std::size_t r = 0; r < frame.X.size(); ++r) {
        const auto ex = tree_shap(model, frame.X[r]);
        for (std::size_t j = 0; j < frame.columns.size(); ++j) {
            rows.push_back(SwarmRow{fid, dim, r, frame.columns[j], frame.X[r][j], ex.phi[j]});
        }
    }
    return rows;
}

std::vector<FeatureImportance> importance_ranking(const std::vector<SwarmRow>& rows) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& r : rows) {
        auto& a = acc[r.feature];
        a.first += std::abs(r.shap);
        ++a.second;
    }
    std::vector<FeatureImportance> out;
    for (const auto& [name, a] : acc) out.push_back({name, a.first / static_cast<double>(a.second)});
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.mean_abs_shap > b.mean_abs_shap; });
    return out;
}

std::vector<GroupModel> explain(const std::vector<runner::RunRecord>& records, const ConfigurationSpace& space,
                                const FitParams& params, int jobs) {
    std::map<std::pair<int, int>, std::vector<runner::RunRecord>> groups;
    for (const auto& r : records) {
        if (r.ok()) groups[{r.fid, r.dim}].push_back(r);
    }
    if (groups.empty()) throw ValidationError("explain: no successful records");
    std::vector<GroupModel> out;
    std::vector<std::vector<runner::RunRecord>*> inputs;
    for (auto& [key, group] : groups) {
        runner::sort_records(group);
        GroupModel g;
        g.fid = key.first;
        g.dim = key.second;
        g.n_records = group.size();
        out.push_back(std::move(g));
        inputs.push_back(&group);
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(out.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < out.size(); i = next++) {
            try {
                auto& g = out[i];
                const auto frame = runner::feature_frame(*inputs[i], space);
                if (frame.X.size() < 2) throw ValidationError("needs at least 2 records");
                g.model = fit(frame.X, frame.y, params);
                std::vector<double> pred;
                pred.reserve(frame.X.size());
                for (const auto& x : frame.X) pred.push_back(g.model.predict(x));
                g.r2 = r2_score(frame.y, pred);
                g.rows = swarm_data(frame, g.model, g.fid, g.dim);
                g.ranking = importance_ranking(g.rows);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const auto n = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, out.size());
        for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
        worker();
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!errors[i].empty()) {
            throw ValidationError("explain: f" + std::to_string(out[i].fid) + " d" + std::to_string(out[i].dim) + ": " +
                                  errors[i]);
        }
    }
    return out;
}

std::string swarm_csv(const std::vector<GroupModel>& groups) {
    std::ostringstream os;
    os << "fid,dim,record_idx,feature,encoded_value,shap\n";
    for (const auto& g : groups) {
        for (const auto& r : g.rows) {
            os << r.fid << ',' << r.dim << ',' << r.record_idx << ',' << r.feature << ','
               << format_double(r.encoded_value) << ',' << format_double(r.shap) << '\n';
        }
    }
    return os.str();
}

std::string importance_csv(const std::vector<GroupModel>& groups) {
    std::ostringstream os;
    os << "fid,dim,rank,feature,mean_abs_shap,r2\n";
    for (const auto& g : groups) {
        for (std::size_t k = 0; k < g.ranking.size(); ++k) {
            os << g.fid << ',' << g.dim << ',' << k + 1 << ',' << g.ranking[k].feature << ','
               << format_double(g.ranking[k].mean_abs_shap) << ',' << format_double(g.r2) << '\n';
        }
    }
    return os.str();
}

std::string swarm_svg(const GroupModel& group) {
    // Rows keep the importance order; points are spread vertically by a
    // deterministic hash of the record index.
    const double row_h = 28.0;
    const double left = 170.0;
    const double width = 520.0;
    const double top = 40.0;
    const auto n_rows = group.ranking.size();
    const double height = top + row_h * static_cast<double>(n_rows) + 40.0;

    double max_abs = 0.0;
    std::map<std::string, std::pair<double, double>> range;
    for (const auto& r : group.rows) {
        max_abs = std::max(max_abs, std::abs(r.shap));
        auto [it, fresh] = range.try_emplace(r.feature, r.encoded_value, r.encoded_value);
        if (!fresh) {
            it->second.first = std::min(it->second.first, r.encoded_value);
            it->second.second = std::max(it->second.second, r.encoded_value);
        }
    }
    if (max_abs == 0.0) max_abs = 1.0;
    const double x0 = left + width / 2.0;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + width + 30 << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<text x=\"10\" y=\"20\">f" << group.fid << " d" << group.dim << "  R2=" << format_double(group.r2)
       << "</text>\n";
    os << "<line x1=\"" << x0 << "\" y1=\"" << top - 10 << "\" x2=\"" << x0 << "\" y2=\"" << height - 30
       << "\" stroke=\"#888\"/>\n";
    std::map<std::string, std::size_t> row_of;
    for (std::size_t k = 0; k < n_rows; ++k) {
        row_of[group.ranking[k].feature] = k;
        const double y = top + row_h * (static_cast<double>(k) + 0.5);
        os << "<text x=\"10\" y=\"" << y + 4 << "\">" << group.ranking[k].feature << "</text>\n";
    }
    for (const auto& r : group.rows) {
        const auto k = row_of.at(r.feature);
        const auto [lo, hi] = range.at(r.feature);
        const double t = hi > lo ? (r.encoded_value - lo) / (hi - lo) : 0.5;
        const double jitter = static_cast<double>(splitmix64(r.record_idx * 131 + k) % 1000) / 1000.0 - 0.5;
        const double cx = x0 + r.shap / max_abs * (width / 2.0 - 5.0);
        const double cy = top + row_h * (static_cast<double>(k) + 0.5) + jitter * row_h * 0.7;
        const int red = static_cast<int>(std::lround(40 + 215 * t));
        const int blue = static_cast<int>(std::lround(255 - 215 * t));
        os << "<circle cx=\"" << format_double(cx) << "\" cy=\"" << format_double(cy) << "\" r=\"2\" fill=\"rgb(" << red
           << ",60," << blue << ")\" fill-opacity=\"0.7\"/>\n";
    }
    os << "<text x=\"" << x0 - 30 << "\" y=\"" << height - 12 << "\">SHAP value</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace xbench::gbdt

#include "prepbench/gbtree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <json.hpp>

#include "prepbench/errors.hpp"
#include "prepbench/stats.hpp"

namespace prepbench::gbtree {

namespace {

bool cell_missing(const NumericTable& x, const BoolTable& mask, std::size_t r,
                  std::size_t c) {
    return is_missing(x, mask, r, c);
}

// Total order on split candidates: higher gain, then lower feature, then
// lower threshold, then default-right. Shared by the level-wise scan and by
// best_split so the split-oracle tests can reproduce it exactly.
bool candidate_better(const SplitCandidate& a, const SplitCandidate& b) {
    if (!b.valid) return a.valid;
    if (!a.valid) return false;
    if (a.gain != b.gain) return a.gain > b.gain;
    if (a.feature != b.feature) return a.feature < b.feature;
    if (a.threshold != b.threshold) return a.threshold < b.threshold;
    return !a.default_left && b.default_left;
}

struct BuildNode {
    double g = 0.0;
    double h = 0.0;
    std::int64_t count = 0;
    int tree_index = -1;
    double parent_term = 0.0;  // G^2/(H+lambda) of this node
    SplitCandidate best;
};

struct ScanState {
    double g_acc = 0.0;
    double h_acc = 0.0;
    double last = 0.0;
    bool started = false;
};

class TreeBuilder {
public:
    TreeBuilder(const BoostConfig& cfg, const NumericTable& x, const BoolTable& mask,
                const std::vector<std::vector<std::uint32_t>>& order)
        : cfg_(cfg), x_(x), mask_(mask), order_(order) {}

    // Grows one tree against (grad, hess), updates margins with the new leaf
    // weights, and tallies importances.
    Tree grow(std::span<const double> grad, std::span<const double> hess,
              std::vector<double>& margins, std::vector<double>& gain_sum,
              std::vector<std::int64_t>& split_count) {
        const std::size_t n = x_.rows;
        Tree tree;
        tree.nodes.emplace_back();

        std::vector<int> row_node(n, 0);
        std::vector<BuildNode> level(1);
        level[0].tree_index = 0;
        for (std::size_t r = 0; r < n; ++r) {
            level[0].g += grad[r];
            level[0].h += hess[r];
            ++level[0].count;
        }

        for (int depth = 0;; ++depth) {
            if (level.empty()) break;
            const bool at_cap = depth >= cfg_.max_depth;
            for (auto& nd : level) {
                const double denom = nd.h + cfg_.l2_reg;
                nd.parent_term = denom > 0.0 ? nd.g * nd.g / denom : 0.0;
                nd.best = SplitCandidate{};
            }
            if (!at_cap) search_splits(level, row_node, grad, hess);

            // Settle leaves and partition split rows in one row-order pass so
            // child statistics are accumulated identically regardless of how
            // candidate columns were scanned.
            std::vector<BuildNode> next;
            std::vector<int> child_base(level.size(), -1);
            for (std::size_t k = 0; k < level.size(); ++k) {
                auto& nd = level[k];
                if (nd.best.valid) {
                    child_base[k] = static_cast<int>(next.size());
                    TreeNode& tn = tree.nodes[static_cast<std::size_t>(nd.tree_index)];
                    tn.feature = nd.best.feature;
                    tn.threshold = nd.best.threshold;
                    tn.default_left = nd.best.default_left;
                    tn.gain = nd.best.gain;
                    tn.left = static_cast<int>(tree.nodes.size());
                    tn.right = tn.left + 1;
                    tree.nodes.emplace_back();
                    tree.nodes.emplace_back();
                    BuildNode l, r;
                    l.tree_index = tn.left;
                    r.tree_index = tn.right;
                    next.push_back(l);
                    next.push_back(r);
                    gain_sum[static_cast<std::size_t>(nd.best.feature)] += nd.best.gain;
                    ++split_count[static_cast<std::size_t>(nd.best.feature)];
                } else {
                    const double denom = nd.h + cfg_.l2_reg;
                    const double w =
                        denom > 0.0 ? -cfg_.learning_rate * nd.g / denom : 0.0;
                    tree.nodes[static_cast<std::size_t>(nd.tree_index)].weight = w;
                }
            }

            bool any_split = false;
            for (int cb : child_base) any_split |= cb >= 0;
            for (std::size_t r = 0; r < n; ++r) {
                const int k = row_node[r];
                if (k < 0) continue;
                const auto& nd = level[static_cast<std::size_t>(k)];
                if (!nd.best.valid) {
                    margins[r] +=
                        tree.nodes[static_cast<std::size_t>(nd.tree_index)].weight;
                    row_node[r] = -1;
                    continue;
                }
                const auto f = static_cast<std::size_t>(nd.best.feature);
                bool go_left;
                if (cell_missing(x_, mask_, r, f)) {
                    go_left = nd.best.default_left;
                } else {
                    go_left = x_.at(r, f) < nd.best.threshold;
                }
                const int child =
                    child_base[static_cast<std::size_t>(k)] + (go_left ? 0 : 1);
                auto& cn = next[static_cast<std::size_t>(child)];
                cn.g += grad[r];
                cn.h += hess[r];
                ++cn.count;
                row_node[r] = child;
            }
            if (!any_split) break;
            level = std::move(next);
        }
        return tree;
    }

private:
    void search_splits(std::vector<BuildNode>& level, std::span<const int> row_node,
                       std::span<const double> grad, std::span<const double> hess) {
        const std::size_t n_active = level.size();
        bool any_searchable = false;
        for (const auto& nd : level)
            any_searchable |= nd.count >= 2 && nd.h >= 2.0 * cfg_.min_child_weight;
        if (!any_searchable) return;

        std::vector<ScanState> state(n_active);
        for (std::size_t j = 0; j < x_.cols; ++j) {
            const auto& ord = order_[j];
            if (ord.empty()) continue;
            const auto col = x_.column(j);

            // Forward pass: prefix sums over present values; missing implied
            // on the right side.
            std::fill(state.begin(), state.end(), ScanState{});
            for (const std::uint32_t r : ord) {
                const int k = row_node[r];
                if (k < 0) continue;
                auto& st = state[static_cast<std::size_t>(k)];
                const double v = col[r];
                if (st.started && v > st.last) {
                    const double t = 0.5 * (st.last + v);
                    if (st.last < t && t <= v) {
                        auto& nd = level[static_cast<std::size_t>(k)];
                        propose(nd, st.g_acc, st.h_acc, static_cast<int>(j), t, false);
                    }
                }
                st.g_acc += grad[r];
                st.h_acc += hess[r];
                st.last = v;
                st.started = true;
            }

            // Backward pass: suffix sums; missing implied on the left side.
            std::fill(state.begin(), state.end(), ScanState{});
            for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
                const std::uint32_t r = *it;
                const int k = row_node[r];
                if (k < 0) continue;
                auto& st = state[static_cast<std::size_t>(k)];
                const double v = col[r];
                if (st.started && v < st.last) {
                    const double t = 0.5 * (v + st.last);
                    if (v < t && t <= st.last) {
                        auto& nd = level[static_cast<std::size_t>(k)];
                        propose_right(nd, st.g_acc, st.h_acc, static_cast<int>(j), t);
                    }
                }
                st.g_acc += grad[r];
                st.h_acc += hess[r];
                st.last = v;
                st.started = true;
            }
        }
    }

    void propose(BuildNode& nd, double gl, double hl, int feature, double threshold,
                 bool default_left) {
        const double gr = nd.g - gl;
        const double hr = nd.h - hl;
        consider(nd, gl, hl, gr, hr, feature, threshold, default_left);
    }

    void propose_right(BuildNode& nd, double gr, double hr, int feature,
                       double threshold) {
        const double gl = nd.g - gr;
        const double hl = nd.h - hr;
        consider(nd, gl, hl, gr, hr, feature, threshold, true);
    }

    void consider(BuildNode& nd, double gl, double hl, double gr, double hr,
                  int feature, double threshold, bool default_left) {
        if (hl < cfg_.min_child_weight || hr < cfg_.min_child_weight) return;
        const double dl = hl + cfg_.l2_reg;
        const double dr = hr + cfg_.l2_reg;
        if (dl <= 0.0 || dr <= 0.0) return;
        const double gain =
            0.5 * (gl * gl / dl + gr * gr / dr - nd.parent_term) - cfg_.gamma;
        if (!(gain > 0.0)) return;
        SplitCandidate c{true, gain, feature, threshold, default_left};
        if (candidate_better(c, nd.best)) nd.best = c;
    }

    const BoostConfig& cfg_;
    const NumericTable& x_;
    const BoolTable& mask_;
    const std::vector<std::vector<std::uint32_t>>& order_;
};

std::vector<std::vector<std::uint32_t>> presort_columns(const NumericTable& x,
                                                        const BoolTable& mask) {
    std::vector<std::vector<std::uint32_t>> order(x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) {
        auto& ord = order[j];
        ord.reserve(x.rows);
        for (std::size_t r = 0; r < x.rows; ++r)
            if (!cell_missing(x, mask, r, j)) ord.push_back(static_cast<std::uint32_t>(r));
        const auto col = x.column(j);
        std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (col[a] != col[b]) return col[a] < col[b];
            return a < b;
        });
    }
    return order;
}

void validate_config(const BoostConfig& cfg) {
    if (cfg.n_estimators < 0) throw ArgumentError("gbtree: negative n_estimators");
    if (cfg.learning_rate <= 0.0 || cfg.learning_rate > 1.0)
        throw ArgumentError("gbtree: learning_rate must lie in (0, 1]");
    if (cfg.max_depth < 1) throw ArgumentError("gbtree: max_depth must be >= 1");
    if (cfg.gamma < 0.0) throw ArgumentError("gbtree: gamma must be >= 0");
    if (cfg.l2_reg < 0.0) throw ArgumentError("gbtree: l2_reg must be >= 0");
    if (cfg.min_child_weight < 0.0)
        throw ArgumentError("gbtree: min_child_weight must be >= 0");
}

}  // namespace

SplitCandidate best_split(const NumericTable& features, const BoolTable& mask,
                          std::span<const double> grad,
                          std::span<const double> hess,
                          const BoostConfig& config) {
    validate_config(config);
    if (grad.size() != features.rows || hess.size() != features.rows)
        throw ArgumentError("best_split: gradient length mismatch");
    BoostConfig cfg = config;
    cfg.max_depth = 1;
    const auto order = presort_columns(features, mask);
    TreeBuilder builder(cfg, features, mask, order);
    std::vector<double> margins(features.rows, 0.0);
    std::vector<double> gain_sum(features.cols, 0.0);
    std::vector<std::int64_t> split_count(features.cols, 0);
    Tree t = builder.grow(grad, hess, margins, gain_sum, split_count);
    SplitCandidate out;
    const TreeNode& root = t.nodes.front();
    if (root.feature >= 0) {
        out.valid = true;
        out.feature = root.feature;
        out.threshold = root.threshold;
        out.default_left = root.default_left;
        out.gain = root.gain;
    }
    return out;
}

BoostedModel fit(const BoostConfig& config, const NumericTable& features,
                 const BoolTable& mask, std::span<const int> labels) {
    validate_config(config);
    if (features.rows < 2) throw FitError("gbtree: need at least two rows");
    if (features.cols == 0) throw FitError("gbtree: empty feature table");
    if (labels.size() != features.rows)
        throw FitError("gbtree: labels/rows mismatch");
    std::int64_t pos = 0;
    for (int y : labels) pos += (y != 0);
    if (pos == 0 || pos == static_cast<std::int64_t>(labels.size()))
        throw FitError("gbtree: labels contain a single class");

    BoostedModel model;
    model.config = config;
    model.n_features = features.cols;
    model.gain_sum.assign(features.cols, 0.0);
    model.split_count.assign(features.cols, 0);

    const double p0 = std::clamp(static_cast<double>(pos) /
                                     static_cast<double>(labels.size()),
                                 1e-15, 1.0 - 1e-15);
    model.base_score = std::log(p0 / (1.0 - p0));

    const auto order = presort_columns(features, mask);
    TreeBuilder builder(config, features, mask, order);

    const std::size_t n = features.rows;
    std::vector<double> margins(n, model.base_score);
    std::vector<double> grad(n), hess(n);
    for (int round = 0; round < config.n_estimators; ++round) {
        for (std::size_t r = 0; r < n; ++r) {
            const double p = stable_sigmoid(margins[r]);
            grad[r] = p - static_cast<double>(labels[r] != 0 ? 1 : 0);
            hess[r] = p * (1.0 - p);
        }
        model.trees.push_back(
            builder.grow(grad, hess, margins, model.gain_sum, model.split_count));
    }
    return model;
}

std::vector<double> predict_margin(const BoostedModel& model,
                                   const NumericTable& features,
                                   const BoolTable& mask, std::size_t n_trees) {
    if (features.cols != model.n_features)
        throw SchemaError("gbtree: feature count differs from training");
    const std::size_t use = std::min(n_trees, model.trees.size());
    std::vector<double> margin(features.rows, model.base_score);
    for (std::size_t r = 0; r < features.rows; ++r) {
        double m = model.base_score;
        for (std::size_t t = 0; t < use; ++t) {
            const auto& nodes = model.trees[t].nodes;
            int k = 0;
            while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
                const auto& nd = nodes[static_cast<std::size_t>(k)];
                const auto f = static_cast<std::size_t>(nd.feature);
                bool go_left;
                if (cell_missing(features, mask, r, f)) {
                    go_left = nd.default_left;
                } else {
                    go_left = features.at(r, f) < nd.threshold;
                }
                k = go_left ? nd.left : nd.right;
            }
            m += nodes[static_cast<std::size_t>(k)].weight;
        }
        margin[r] = m;
    }
    return margin;
}

std::vector<double> predict_proba(const BoostedModel& model,
                                  const NumericTable& features,
                                  const BoolTable& mask) {
    auto margin = predict_margin(model, features, mask);
    for (double& m : margin) m = stable_sigmoid(m);
    return margin;
}

std::vector<double> importance(const BoostedModel& model, ImportanceKind kind) {
    std::vector<double> out(model.n_features, 0.0);
    for (std::size_t f = 0; f < model.n_features; ++f) {
        out[f] = kind == ImportanceKind::Gain
                     ? model.gain_sum[f]
                     : static_cast<double>(model.split_count[f]);
    }
    return out;
}

ImportanceKind importance_kind_from_name(const std::string& name) {
    if (name == "gain") return ImportanceKind::Gain;
    if (name == "weight") return ImportanceKind::Weight;
    throw ArgumentError("unknown importance kind: " + name);
}

std::string to_json(const BoostedModel& model) {
    nlohmann::ordered_json j;
    j["base_score"] = model.base_score;
    j["n_features"] = model.n_features;
    j["learning_rate"] = model.config.learning_rate;
    nlohmann::ordered_json trees = nlohmann::ordered_json::array();
    for (const auto& tree : model.trees) {
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const auto& nd : tree.nodes) {
            nlohmann::ordered_json n;
            if (nd.feature < 0) {
                n["leaf"] = nd.weight;
            } else {
                n["feature"] = nd.feature;
                n["threshold"] = nd.threshold;
                n["default_left"] = nd.default_left;
                n["left"] = nd.left;
                n["right"] = nd.right;
                n["gain"] = nd.gain;
            }
            nodes.push_back(std::move(n));
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);
    return j.dump();
}

}  // namespace prepbench::gbtree

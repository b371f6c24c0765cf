#pragma once

// Gradient-boosted regression trees for weighted binary logistic loss.
//
// Each round fits one tree to the first/second-order gradients
//   g_i = w_i (p_i - y_i),  h_i = w_i p_i (1 - p_i)
// with exact greedy split search over pre-sorted columns. A split's gain is
//   1/2 [G_L^2/(H_L+l2) + G_R^2/(H_R+l2) - G^2/(H+l2)]
// and a leaf's weight is -G/(H+l2), clamped to +/-kLeafClamp and scaled by
// the learning rate at prediction time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "automode/error.hpp"
#include "automode/matrix.hpp"
#include "automode/random.hpp"

namespace automode {

using json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;
inline constexpr double kLeafClamp = 15.0;
inline constexpr double kMarginClamp = 30.0;

struct Hyperparams {
    int n_rounds = 50;
    int max_depth = 4;
    double learning_rate = 0.1;
    double min_child_hessian = 1.0;
    double l2_leaf = 1.0;
    double feature_subsample = 1.0;
    double row_subsample = 1.0;

    void validate() const {
        auto fail = [](const std::string& m) { throw InvalidArgument("hyperparams: " + m); };
        if (n_rounds < 1) fail("n_rounds must be >= 1");
        if (max_depth < 1) fail("max_depth must be >= 1");
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must be in (0, 1]");
        if (!(min_child_hessian >= 0.0) || !std::isfinite(min_child_hessian)) fail("min_child_hessian must be >= 0");
        if (!(l2_leaf >= 0.0) || !std::isfinite(l2_leaf)) fail("l2_leaf must be >= 0");
        if (!(feature_subsample > 0.0 && feature_subsample <= 1.0)) fail("feature_subsample must be in (0, 1]");
        if (!(row_subsample > 0.0 && row_subsample <= 1.0)) fail("row_subsample must be in (0, 1]");
    }

    json to_json() const {
        return {{"n_rounds", n_rounds},
                {"max_depth", max_depth},
                {"learning_rate", learning_rate},
                {"min_child_hessian", min_child_hessian},
                {"l2_leaf", l2_leaf},
                {"feature_subsample", feature_subsample},
                {"row_subsample", row_subsample}};
    }

    /// Missing fields keep their defaults.
    static Hyperparams from_json(const json& j) {
        Hyperparams hp;
        hp.n_rounds = j.value("n_rounds", hp.n_rounds);
        hp.max_depth = j.value("max_depth", hp.max_depth);
        hp.learning_rate = j.value("learning_rate", hp.learning_rate);
        hp.min_child_hessian = j.value("min_child_hessian", hp.min_child_hessian);
        hp.l2_leaf = j.value("l2_leaf", hp.l2_leaf);
        hp.feature_subsample = j.value("feature_subsample", hp.feature_subsample);
        hp.row_subsample = j.value("row_subsample", hp.row_subsample);
        hp.validate();
        return hp;
    }

    bool operator==(const Hyperparams&) const = default;
};

/// Internal node when `feature >= 0`, leaf otherwise. Rows with
/// x[feature] < threshold go left; NaN follows `default_left`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    bool default_left = true;
    double value = 0.0;  // leaf weight (unscaled)
    double gain = 0.0;   // split gain, for importance
    double cover = 0.0;  // hessian mass reaching the node

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double leaf_value(std::span<const double> x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const TreeNode& n = nodes[static_cast<std::size_t>(i)];
            const double v = x[static_cast<std::size_t>(n.feature)];
            const bool go_left = std::isnan(v) ? n.default_left : v < n.threshold;
            i = go_left ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }

    int depth() const { return depth_from(0); }

    bool operator==(const Tree&) const = default;

private:
    int depth_from(int i) const {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        return n.is_leaf() ? 0 : 1 + std::max(depth_from(n.left), depth_from(n.right));
    }
};

inline double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

/// Pivot-vs-challenger classifier: predicts the probability that the
/// challenger beats the pivot.
struct BinaryClassifier {
    std::string challenger_id;
    std::string pivot_id;
    std::string schema_hash;
    std::size_t n_features = 0;
    double base_logit = 0.0;
    double learning_rate = 1.0;
    Hyperparams hyperparams;
    std::vector<Tree> trees;

    double margin(std::span<const double> x) const {
        if (x.size() != n_features)
            throw SchemaError("classifier '" + challenger_id + "' expects " + std::to_string(n_features) +
                              " features, got " + std::to_string(x.size()));
        double m = base_logit;
        for (const auto& t : trees) m += learning_rate * t.leaf_value(x);
        return std::clamp(m, -kMarginClamp, kMarginClamp);
    }

    double predict_proba(std::span<const double> x) const { return sigmoid(margin(x)); }

    bool operator==(const BinaryClassifier&) const = default;
};

inline double predict_proba(const BinaryClassifier& model, std::span<const double> x) {
    return model.predict_proba(x);
}

/// Weighted mean logistic loss of `model` on (X, y, w).
inline double logistic_loss(const BinaryClassifier& model, const Matrix& X, std::span<const int> y,
                            std::span<const double> w) {
    double loss = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        if (w[i] <= 0.0) continue;
        const double m = model.margin(X.row(i));
        // log(1 + e^-m) for y = 1, log(1 + e^m) for y = 0, computed stably.
        const double z = y[i] ? -m : m;
        loss += w[i] * (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))));
        wsum += w[i];
    }
    return wsum > 0.0 ? loss / wsum : 0.0;
}

namespace detail {

struct SortedColumn {
    std::vector<std::uint32_t> rows;
    std::vector<double> values;
};

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    double hess_left = 0.0;
    double hess_right = 0.0;
};

inline double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) / 2.0;
    return (mid > lo && mid <= hi) ? mid : hi;
}

inline std::vector<std::size_t> sample_indices(std::size_t n, double frac, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (frac >= 1.0) return idx;
    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))), 1, n);
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

class TreeGrower {
public:
    TreeGrower(const Matrix& X, const std::vector<SortedColumn>& columns, const Hyperparams& hp)
        : X_(X), columns_(columns), hp_(hp) {}

    Tree grow(std::span<const double> grad, std::span<const double> hess, std::span<const std::size_t> rows,
              std::span<const std::size_t> features) {
        const std::size_t n = X_.rows();
        node_of_.assign(n, -1);
        Tree tree;
        TreeNode root;
        double G = 0.0, H = 0.0;
        for (auto i : rows) {
            node_of_[i] = 0;
            G += grad[i];
            H += hess[i];
        }
        root.cover = H;
        tree.nodes.push_back(root);
        sum_g_ = {G};
        sum_h_ = {H};

        // Per-row (slot, g, h) packed together: the column scans below visit
        // rows in sorted-value order, so locality of this array matters.
        struct RowState {
            int slot;
            double g;
            double h;
        };
        std::vector<RowState> state(n, RowState{-1, 0.0, 0.0});
        for (auto i : rows) state[i] = {0, grad[i], hess[i]};

        std::vector<int> frontier = {0};
        for (int depth = 0; depth < hp_.max_depth && !frontier.empty(); ++depth) {
            std::vector<int> slot(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < frontier.size(); ++s) slot[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
            if (depth > 0)
                for (auto i : rows) state[i].slot = slot[static_cast<std::size_t>(node_of_[i])];
            std::vector<SplitCandidate> best(frontier.size());
            std::vector<double> gl(frontier.size()), hl(frontier.size()), last(frontier.size());
            std::vector<char> seen(frontier.size());

            for (auto f : features) {
                std::fill(gl.begin(), gl.end(), 0.0);
                std::fill(hl.begin(), hl.end(), 0.0);
                std::fill(seen.begin(), seen.end(), 0);
                const auto& col = columns_[f];
                const std::uint32_t* col_rows = col.rows.data();
                const double* col_values = col.values.data();
                const std::size_t m = col.rows.size();
                for (std::size_t k = 0; k < m; ++k) {
                    const RowState& st = state[col_rows[k]];
                    if (st.slot < 0) continue;
                    const auto su = static_cast<std::size_t>(st.slot);
                    const double x = col_values[k];
                    if (seen[su] && x > last[su])
                        consider(best[su], frontier[su], static_cast<int>(f), last[su], x, gl[su], hl[su]);
                    gl[su] += st.g;
                    hl[su] += st.h;
                    last[su] = x;
                    seen[su] = 1;
                }
            }

            std::vector<int> next;
            std::vector<int> split_feature(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < frontier.size(); ++s) {
                const SplitCandidate& c = best[s];
                if (c.feature < 0) continue;
                const int id = frontier[s];
                const int left = static_cast<int>(tree.nodes.size());
                const int right = left + 1;
                TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
                node.feature = c.feature;
                node.threshold = c.threshold;
                node.left = left;
                node.right = right;
                node.gain = c.gain;
                node.default_left = c.hess_left >= c.hess_right;
                tree.nodes.push_back(TreeNode{});
                tree.nodes.push_back(TreeNode{});
                sum_g_.resize(tree.nodes.size(), 0.0);
                sum_h_.resize(tree.nodes.size(), 0.0);
                next.push_back(left);
                next.push_back(right);
            }
            if (next.empty()) break;
            for (auto i : rows) {
                const int nd = node_of_[i];
                const TreeNode& node = tree.nodes[static_cast<std::size_t>(nd)];
                if (node.is_leaf()) continue;
                const int child = X_(i, static_cast<std::size_t>(node.feature)) < node.threshold ? node.left : node.right;
                node_of_[i] = child;
                sum_g_[static_cast<std::size_t>(child)] += grad[i];
                sum_h_[static_cast<std::size_t>(child)] += hess[i];
            }
            for (int c : next) tree.nodes[static_cast<std::size_t>(c)].cover = sum_h_[static_cast<std::size_t>(c)];
            frontier.clear();
            for (int c : next)
                if (sum_h_[static_cast<std::size_t>(c)] >= 2.0 * hp_.min_child_hessian) frontier.push_back(c);
        }

        for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
            TreeNode& node = tree.nodes[k];
            if (!node.is_leaf()) continue;
            const double denom = sum_h_[k] + hp_.l2_leaf;
            const double v = denom > 0.0 ? -sum_g_[k] / denom : 0.0;
            node.value = std::clamp(v, -kLeafClamp, kLeafClamp);
        }
        return tree;
    }

private:
    void consider(SplitCandidate& best, int node, int feature, double lo, double hi, double GL, double HL) const {
        const double G = sum_g_[static_cast<std::size_t>(node)];
        const double H = sum_h_[static_cast<std::size_t>(node)];
        const double GR = G - GL;
        const double HR = H - HL;
        const double lambda = hp_.l2_leaf;
        if (HL < hp_.min_child_hessian || HR < hp_.min_child_hessian) return;
        if (!(HL + lambda > 0.0) || !(HR + lambda > 0.0)) return;
        const double gain = 0.5 * (GL * GL / (HL + lambda) + GR * GR / (HR + lambda) - G * G / (H + lambda));
        if (gain > best.gain) best = {gain, feature, midpoint(lo, hi), HL, HR};
    }

    const Matrix& X_;
    const std::vector<SortedColumn>& columns_;
    const Hyperparams& hp_;
    std::vector<int> node_of_;
    std::vector<double> sum_g_;
    std::vector<double> sum_h_;
};

}  // namespace detail

/// Trains one boosted classifier. Rows with zero weight are dropped before
/// anything else, so they cannot influence split candidates.
inline BinaryClassifier train_binary(const Matrix& X, std::span<const int> y, std::span<const double> w,
                                     const Hyperparams& hp, std::uint64_t seed) {
    hp.validate();
    if (y.size() != X.rows() || w.size() != X.rows())
        throw InvalidArgument("train_binary: X, y and w must have the same number of rows");
    if (X.cols() == 0) throw InvalidArgument("train_binary: no features");

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        if (!std::isfinite(w[i]) || w[i] < 0.0) throw InvalidArgument("train_binary: weights must be finite and >= 0");
        if (y[i] != 0 && y[i] != 1) throw InvalidArgument("train_binary: labels must be 0 or 1");
        for (double v : X.row(i))
            if (!std::isfinite(v))
                throw InvalidArgument("train_binary: non-finite feature value in row " + std::to_string(i));
        if (w[i] > 0.0) keep.push_back(i);
    }
    if (keep.empty()) throw InvalidArgument("train_binary: all sample weights are zero");

    const std::size_t n = keep.size();
    const std::size_t d = X.cols();
    Matrix Xk(n, d);
    std::vector<int> yk(n);
    std::vector<double> wk(n);
    double wpos = 0.0, wall = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto src = X.row(keep[r]);
        std::copy(src.begin(), src.end(), Xk.row(r).begin());
        yk[r] = y[keep[r]];
        wk[r] = w[keep[r]];
        wall += wk[r];
        if (yk[r]) wpos += wk[r];
    }
    if (wpos <= 0.0 || wpos >= wall) throw InvalidArgument("train_binary: single-class input");

    BinaryClassifier model;
    model.n_features = d;
    model.learning_rate = hp.learning_rate;
    model.hyperparams = hp;
    const double pbar = wpos / wall;
    model.base_logit = std::log(pbar / (1.0 - pbar));

    std::vector<detail::SortedColumn> columns(d);
    for (std::size_t f = 0; f < d; ++f) {
        auto& col = columns[f];
        col.rows.resize(n);
        std::iota(col.rows.begin(), col.rows.end(), 0u);
        std::stable_sort(col.rows.begin(), col.rows.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return Xk(a, f) < Xk(b, f); });
        col.values.resize(n);
        for (std::size_t k = 0; k < n; ++k) col.values[k] = Xk(col.rows[k], f);
    }

    std::vector<double> margin(n, model.base_logit), grad(n), hess(n);
    detail::TreeGrower grower(Xk, columns, hp);
    for (int round = 0; round < hp.n_rounds; ++round) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(round)));
        const auto rows = detail::sample_indices(n, hp.row_subsample, rng);
        const auto feats = detail::sample_indices(d, hp.feature_subsample, rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = wk[i] * (p - yk[i]);
            hess[i] = wk[i] * p * (1.0 - p);
        }
        Tree tree = grower.grow(grad, hess, rows, feats);
        for (std::size_t i = 0; i < n; ++i) margin[i] += hp.learning_rate * tree.leaf_value(Xk.row(i));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

/// Classifier that predicts `label` everywhere, for pairs whose training
/// labels never disagree. It carries one leaf-only tree and no splits.
inline BinaryClassifier constant_classifier(std::size_t n_features, int label, const Hyperparams& hp) {
    BinaryClassifier model;
    model.n_features = n_features;
    model.learning_rate = hp.learning_rate;
    model.hyperparams = hp;
    model.base_logit = label ? kLeafClamp : -kLeafClamp;
    model.trees.push_back(Tree{{TreeNode{}}});
    return model;
}

// ---------------------------------------------------------------------------
// Feature importance

/// Total split gain per feature, normalized to sum to 1.
inline std::vector<double> feature_importance(const BinaryClassifier& model) {
    if (model.trees.empty()) throw InvalidArgument("feature_importance: model has no trees");
    std::vector<double> imp(model.n_features, 0.0);
    double total = 0.0;
    for (const auto& t : model.trees)
        for (const auto& n : t.nodes)
            if (!n.is_leaf()) {
                imp[static_cast<std::size_t>(n.feature)] += n.gain;
                total += n.gain;
            }
    if (!(total > 0.0)) throw InvalidArgument("feature_importance: model has no splits");
    for (double& v : imp) v /= total;
    return imp;
}

inline bool has_splits(const BinaryClassifier& model) {
    for (const auto& t : model.trees)
        for (const auto& n : t.nodes)
            if (!n.is_leaf() && n.gain > 0.0) return true;
    return false;
}

/// Mean of the per-model normalized importances. Models without any split
/// (constant classifiers) are left out of the mean.
inline std::vector<double> feature_importance(std::span<const BinaryClassifier> models) {
    if (models.empty()) throw InvalidArgument("feature_importance: no models");
    std::vector<double> mean(models.front().n_features, 0.0);
    std::size_t used = 0;
    for (const auto& m : models) {
        if (m.n_features != mean.size()) throw SchemaError("feature_importance: models disagree on feature count");
        if (!has_splits(m)) continue;
        const auto imp = feature_importance(m);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += imp[i];
        ++used;
    }
    if (used == 0) throw InvalidArgument("feature_importance: no model has any split");
    for (double& v : mean) v /= static_cast<double>(used);
    return mean;
}

// ---------------------------------------------------------------------------
// Serialization
//
// {"kind": "automode.binary_classifier", "format_version": 1,
//  "challenger": id, "pivot": id, "schema_hash": hex, "n_features": d,
//  "base_logit": b, "learning_rate": lr, "hyperparams": {...},
//  "trees": [{"feature": [...], "threshold": [...], "left": [...],
//             "right": [...], "default_left": [...], "value": [...],
//             "gain": [...], "cover": [...]}, ...]}
// Tree arrays are parallel and indexed by node id; leaves have feature -1.

inline json tree_to_json(const Tree& t) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         default_left = json::array(), value = json::array(), gain = json::array(), cover = json::array();
    for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        default_left.push_back(n.default_left);
        value.push_back(n.value);
        gain.push_back(n.gain);
        cover.push_back(n.cover);
    }
    return {{"feature", feature}, {"threshold", threshold},       {"left", left},   {"right", right},
            {"default_left", default_left}, {"value", value}, {"gain", gain}, {"cover", cover}};
}

inline Tree tree_from_json(const json& j, std::size_t n_features) {
    const auto feature = j.at("feature").get<std::vector<int>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<int>>();
    const auto right = j.at("right").get<std::vector<int>>();
    const auto default_left = j.at("default_left").get<std::vector<bool>>();
    const auto value = j.at("value").get<std::vector<double>>();
    const auto gain = j.at("gain").get<std::vector<double>>();
    const auto cover = j.at("cover").get<std::vector<double>>();
    const std::size_t n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || default_left.size() != n ||
        value.size() != n || gain.size() != n || cover.size() != n)
        throw ParseError("tree arrays are empty or of unequal length");
    Tree t;
    t.nodes.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        TreeNode& node = t.nodes[k];
        node.feature = feature[k];
        node.threshold = threshold[k];
        node.left = left[k];
        node.right = right[k];
        node.default_left = default_left[k];
        node.value = value[k];
        node.gain = gain[k];
        node.cover = cover[k];
        if (!node.is_leaf()) {
            const auto in_range = [&](int c) { return c > static_cast<int>(k) && c < static_cast<int>(n); };
            if (static_cast<std::size_t>(node.feature) >= n_features || !in_range(node.left) || !in_range(node.right))
                throw ParseError("tree node " + std::to_string(k) + " has invalid feature or child index");
        }
    }
    return t;
}

inline json classifier_to_json(const BinaryClassifier& m) {
    json trees = json::array();
    for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
    return {{"kind", "automode.binary_classifier"},
            {"format_version", kModelFormatVersion},
            {"challenger", m.challenger_id},
            {"pivot", m.pivot_id},
            {"schema_hash", m.schema_hash},
            {"n_features", m.n_features},
            {"base_logit", m.base_logit},
            {"learning_rate", m.learning_rate},
            {"hyperparams", m.hyperparams.to_json()},
            {"trees", std::move(trees)}};
}

inline BinaryClassifier classifier_from_json(const json& j) {
    try {
        if (j.at("kind").get<std::string>() != "automode.binary_classifier")
            throw ParseError("not a binary classifier document");
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw VersionError("unsupported classifier format_version " + std::to_string(version));
        BinaryClassifier m;
        m.challenger_id = j.at("challenger").get<std::string>();
        m.pivot_id = j.at("pivot").get<std::string>();
        m.schema_hash = j.at("schema_hash").get<std::string>();
        m.n_features = j.at("n_features").get<std::size_t>();
        m.base_logit = j.at("base_logit").get<double>();
        m.learning_rate = j.at("learning_rate").get<double>();
        m.hyperparams = Hyperparams::from_json(j.at("hyperparams"));
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t, m.n_features));
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("corrupted classifier: ") + e.what());
    }
}

inline json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("write to '" + path + "' failed", false);
}

inline void save_classifier(const std::string& path, const BinaryClassifier& m) {
    write_text_file(path, classifier_to_json(m).dump(1) + "\n");
}

inline BinaryClassifier load_classifier(const std::string& path) { return classifier_from_json(parse_json_file(path)); }

}  // namespace automode

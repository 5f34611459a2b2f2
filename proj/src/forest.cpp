#include "edurisk/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "edurisk/error.hpp"
#include "edurisk/parallel.hpp"

namespace edurisk {

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const double> y, ForestKind kind, int depth_limit, int min_leaf,
                int max_features, std::mt19937_64& rng)
        : x_(x), y_(y), kind_(kind), depth_limit_(depth_limit), min_leaf_(min_leaf), max_features_(max_features),
          rng_(rng) {}

    Tree build(std::vector<std::size_t> samples) {
        grow(samples, 0);
        return std::move(tree_);
    }

private:
    double leaf_value(const std::vector<std::size_t>& samples) const {
        double sum = 0.0;
        for (auto i : samples) sum += y_[i];
        return sum / static_cast<double>(samples.size());
    }

    // Variance impurity is the sum of squared deviations; Gini impurity is
    // weighted by the node size. Both are additive over children.
    double impurity(double sum, double sum_sq, double n) const {
        if (n <= 0.0) return 0.0;
        if (kind_ == ForestKind::Regression) return std::max(0.0, sum_sq - sum * sum / n);
        const double p = sum / n;
        return n * 2.0 * p * (1.0 - p);
    }

    std::vector<int> candidate_features() {
        std::vector<int> features(x_.cols());
        std::iota(features.begin(), features.end(), 0);
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(max_features_), features.size());
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, features.size() - 1);
            std::swap(features[i], features[pick(rng_)]);
        }
        features.resize(k);
        std::sort(features.begin(), features.end());
        return features;
    }

    std::optional<Split> best_split(const std::vector<std::size_t>& samples, double parent_impurity) {
        const auto n = samples.size();
        std::optional<Split> best;
        std::vector<std::pair<double, double>> column(n);
        for (int f : candidate_features()) {
            for (std::size_t i = 0; i < n; ++i) column[i] = {x_(samples[i], static_cast<std::size_t>(f)), y_[samples[i]]};
            std::stable_sort(column.begin(), column.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            double total = 0.0, total_sq = 0.0;
            for (const auto& [v, t] : column) {
                total += t;
                total_sq += t * t;
            }
            double left = 0.0, left_sq = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left += column[i].second;
                left_sq += column[i].second * column[i].second;
                if (column[i].first == column[i + 1].first) continue;
                const auto n_left = i + 1;
                const auto n_right = n - n_left;
                if (n_left < static_cast<std::size_t>(min_leaf_) || n_right < static_cast<std::size_t>(min_leaf_)) continue;
                const double imp = impurity(left, left_sq, static_cast<double>(n_left)) +
                                   impurity(total - left, total_sq - left_sq, static_cast<double>(n_right));
                if (!(imp < parent_impurity)) continue;
                if (!best || imp < best->impurity) {
                    const double threshold = column[i].first + 0.5 * (column[i + 1].first - column[i].first);
                    best = Split{f, threshold, imp};
                }
            }
        }
        return best;
    }

    int grow(const std::vector<std::size_t>& samples, int depth) {
        const int index = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, leaf_value(samples)});

        if (depth >= depth_limit_ || samples.size() < 2 * static_cast<std::size_t>(min_leaf_)) return index;
        double sum = 0.0, sum_sq = 0.0;
        for (auto i : samples) {
            sum += y_[i];
            sum_sq += y_[i] * y_[i];
        }
        const double parent = impurity(sum, sum_sq, static_cast<double>(samples.size()));
        if (parent <= 0.0) return index;

        const auto split = best_split(samples, parent);
        if (!split) return index;

        std::vector<std::size_t> left, right;
        for (auto i : samples) {
            (x_(i, static_cast<std::size_t>(split->feature)) <= split->threshold ? left : right).push_back(i);
        }
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(index)];
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.left = l;
        node.right = r;
        return index;
    }

    const FeatureMatrix& x_;
    std::span<const double> y_;
    ForestKind kind_;
    int depth_limit_;
    int min_leaf_;
    int max_features_;
    std::mt19937_64& rng_;
    Tree tree_;
};

// Lexicographic order over (features, target), independent of storage order.
std::vector<std::size_t> canonical_order(const FeatureMatrix& x, std::span<const double> y) {
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = x.row(a);
        const auto rb = x.row(b);
        for (std::size_t j = 0; j < ra.size(); ++j) {
            if (ra[j] != rb[j]) return ra[j] < rb[j];
        }
        return y[a] < y[b];
    });
    return order;
}

}  // namespace

std::string_view to_string(ForestKind kind) {
    return kind == ForestKind::Regression ? "regression" : "classification";
}

double Tree::predict(std::span<const double> x) const {
    if (nodes.empty()) throw DataError("empty tree");
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

int Tree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<int> level(nodes.size(), 0);
    int deepest = 0;
    // children always follow their parent in the flat layout
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.is_leaf()) continue;
        level[static_cast<std::size_t>(n.left)] = level[i] + 1;
        level[static_cast<std::size_t>(n.right)] = level[i] + 1;
        deepest = std::max(deepest, level[i] + 1);
    }
    return deepest;
}

ForestModel fit_forest(const FeatureMatrix& x, std::span<const double> target, ForestKind kind, int depth_limit,
                       const ForestConfig& config, std::uint64_t seed) {
    if (x.empty()) throw DataError("cannot fit a forest on an empty feature matrix");
    if (target.size() != x.rows()) throw DataError("feature rows and target length differ");
    if (depth_limit < 1) throw ConfigError("forest depth limit must be at least 1");
    if (config.n_trees < 1) throw ConfigError("forest needs at least one tree");
    if (config.min_leaf < 1) throw ConfigError("minimum leaf size must be at least 1");
    if (kind == ForestKind::Classification &&
        std::any_of(target.begin(), target.end(), [](double v) { return v != 0.0 && v != 1.0; }))
        throw DataError("classification targets must be 0 or 1");

    const int max_features = config.max_features.value_or(
        static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols())))));
    if (max_features < 1) throw ConfigError("max_features must be at least 1");

    // Copy rows into canonical order so bootstrap indices are order-free.
    const auto order = canonical_order(x, target);
    FeatureMatrix cx(x.rows(), x.cols());
    std::vector<double> cy(x.rows());
    for (std::size_t i = 0; i < order.size(); ++i) {
        std::copy(x.row(order[i]).begin(), x.row(order[i]).end(), cx.row(i).begin());
        cy[i] = target[order[i]];
    }

    ForestModel model;
    model.kind = kind;
    model.depth_limit = depth_limit;
    model.seed = seed;
    model.n_features = x.cols();
    model.trees.resize(static_cast<std::size_t>(config.n_trees));

    parallel_for(model.trees.size(), config.threads, [&](std::size_t t) {
        std::mt19937_64 rng(seed + t);
        std::vector<std::size_t> samples(cx.rows());
        if (config.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, cx.rows() - 1);
            for (auto& s : samples) s = pick(rng);
            std::sort(samples.begin(), samples.end());
        } else {
            std::iota(samples.begin(), samples.end(), 0);
        }
        TreeBuilder builder(cx, cy, kind, depth_limit, config.min_leaf, max_features, rng);
        model.trees[t] = builder.build(std::move(samples));
    });
    return model;
}

double predict_forest(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.n_features)
        throw DataError("expected " + std::to_string(model.n_features) + " features, got " + std::to_string(x.size()));
    if (model.trees.empty()) throw DataError("forest has no trees");
    double sum = 0.0;
    for (const auto& t : model.trees) sum += t.predict(x);
    return sum / static_cast<double>(model.trees.size());
}

ForestModel constant_forest(ForestKind kind, std::size_t n_features, double value) {
    ForestModel m;
    m.kind = kind;
    m.depth_limit = 1;
    m.n_features = n_features;
    m.trees.push_back(Tree{{TreeNode{-1, 0.0, -1, -1, value}}});
    return m;
}

}  // namespace edurisk

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "edurisk/matrix.hpp"

namespace edurisk {

enum class ForestKind { Regression, Classification };

std::string_view to_string(ForestKind kind);

/// Flat binary tree. Internal nodes send x[feature] <= threshold left.
/// Leaves have feature == -1 and store the mean target (regression) or the
/// positive-class frequency (classification).
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    int depth() const;
    bool operator==(const Tree&) const = default;
};

struct ForestConfig {
    int n_trees = 100;
    int min_leaf = 2;
    /// Candidate features per split; default ceil(sqrt(#features)).
    std::optional<int> max_features;
    /// Draw a bootstrap resample per tree (same size as the training set).
    bool bootstrap = true;
    unsigned threads = 1;
};

struct ForestModel {
    ForestKind kind = ForestKind::Regression;
    int depth_limit = 3;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    std::vector<Tree> trees;

    bool operator==(const ForestModel&) const = default;
};

/// Trains `config.n_trees` depth-limited CART trees. Tree t uses a generator
/// seeded with seed + t; rows are put in a canonical order first, so the
/// result depends neither on the worker count nor on the input row order.
/// Ties between equally good splits go to the lowest feature index, then the
/// lowest threshold.
ForestModel fit_forest(const FeatureMatrix& x, std::span<const double> target, ForestKind kind, int depth_limit,
                       const ForestConfig& config, std::uint64_t seed);

/// Mean over trees of the leaf value reached by x.
double predict_forest(const ForestModel& model, std::span<const double> x);

/// Forest with a single one-leaf tree that always predicts `value`.
ForestModel constant_forest(ForestKind kind, std::size_t n_features, double value);

}  // namespace edurisk

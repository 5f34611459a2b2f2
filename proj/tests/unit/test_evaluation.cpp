#include <cmath>
#include <random>

#include "doctest.h"
#include "edurisk/error.hpp"
#include "edurisk/evaluation.hpp"
#include "test_support.hpp"

using namespace edurisk;

TEST_CASE("AUC on the four-point example") {
    const std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> labels{0, 0, 1, 1};
    const auto r = roc_auc(scores, labels);
    CHECK(r.auc == 0.75);
    CHECK(r.curve.points.front() == RocPoint{0.0, 0.0});
    CHECK(r.curve.points.back() == RocPoint{1.0, 1.0});
}

TEST_CASE("perfectly separating scores give AUC 1") {
    const std::vector<double> scores{0.1, 0.2, 0.7, 0.9};
    const std::vector<int> labels{0, 0, 1, 1};
    CHECK(roc_auc(scores, labels).auc == 1.0);
}

TEST_CASE("AUC equals the pairwise oracle, including ties") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> size(2, 200);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int rep = 0; rep < 100; ++rep) {
        testing::random_scores(rng, size(rng), scores, labels);
        const auto r = roc_auc(scores, labels);
        CHECK(std::abs(r.auc - testing::brute_force_auc(scores, labels)) <= 1e-12);
        CHECK(std::abs(trapezoid_area(r.curve) - r.auc) <= 1e-9);
        for (std::size_t i = 1; i < r.curve.points.size(); ++i) {
            CHECK(r.curve.points[i].fpr >= r.curve.points[i - 1].fpr);
            CHECK(r.curve.points[i].tpr >= r.curve.points[i - 1].tpr);
        }
    }
}

TEST_CASE("AUC is invariant under increasing transforms") {
    std::mt19937_64 rng(78);
    std::vector<double> scores;
    std::vector<int> labels;
    testing::random_scores(rng, 150, scores, labels);
    std::vector<double> transformed;
    for (double s : scores) transformed.push_back(std::exp(3.0 * s) - 4.0);
    CHECK(roc_auc(scores, labels).auc == roc_auc(transformed, labels).auc);
}

TEST_CASE("one-class labels are degenerate") {
    const std::vector<double> scores{0.1, 0.2};
    const std::vector<int> labels{1, 1};
    CHECK_THROWS_AS(roc_auc(scores, labels), DegenerateError);
}

TEST_CASE("confusion matrix by level") {
    SUBCASE("all negatives at level 0") {
        const std::vector<int> actual(7, 0), levels(7, 0);
        const auto m = confusion_by_level(actual, levels);
        CHECK(m == ConfusionMatrix{{{7, 0, 0, 0}, {0, 0, 0, 0}}});
    }
    SUBCASE("ten hand-labelled points") {
        const std::vector<int> actual{0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
        const std::vector<int> levels{0, 0, 0, 1, 2, 0, 3, 3, 0, 2};
        const auto m = confusion_by_level(actual, levels);
        CHECK(m == ConfusionMatrix{{{4, 1, 1, 0}, {1, 0, 1, 2}}});
        CHECK(binarize(m) == BinaryConfusion{{{4, 2}, {1, 3}}});
    }
    SUBCASE("levels outside 0..3 are rejected") {
        const std::vector<int> actual{0}, levels{4};
        CHECK_THROWS(confusion_by_level(actual, levels));
    }
}

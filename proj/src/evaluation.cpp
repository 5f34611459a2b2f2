#include "edurisk/evaluation.hpp"

#include <algorithm>
#include <numeric>

#include "edurisk/error.hpp"

namespace edurisk {

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("roc_auc: scores and labels differ in length");
    std::int64_t n_pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw DataError("roc_auc: labels must be 0 or 1");
        n_pos += l;
    }
    const auto n = static_cast<std::int64_t>(labels.size());
    const auto n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DegenerateError("roc_auc: labels contain a single class");

    // descending by score; each block of equal scores is one threshold
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult result;
    result.curve.points.push_back({0.0, 0.0});
    // Sum of midranks of positives in ascending order; ranks are 1-based.
    double positive_rank_sum = 0.0;
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::int64_t block_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            block_pos += labels[order[j]];
            ++j;
        }
        const auto block = static_cast<std::int64_t>(j - i);
        // descending positions i..j-1 map to ascending ranks n-j+1 .. n-i
        const double midrank = static_cast<double>((n - static_cast<std::int64_t>(j) + 1) + (n - static_cast<std::int64_t>(i))) / 2.0;
        positive_rank_sum += midrank * static_cast<double>(block_pos);
        tp += block_pos;
        fp += block - block_pos;
        result.curve.points.push_back(
            {static_cast<double>(fp) / static_cast<double>(n_neg), static_cast<double>(tp) / static_cast<double>(n_pos)});
        i = j;
    }
    const double u = positive_rank_sum - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
    result.auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return result;
}

double trapezoid_area(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

ConfusionMatrix confusion_by_level(std::span<const int> actual_at_risk, std::span<const int> levels) {
    if (actual_at_risk.size() != levels.size()) throw DataError("confusion: inputs differ in length");
    ConfusionMatrix m{};
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const int a = actual_at_risk[i];
        const int l = levels[i];
        if (a != 0 && a != 1) throw DataError("confusion: actual class must be 0 or 1");
        if (l < 0 || l > 3) throw DataError("confusion: level " + std::to_string(l) + " outside 0..3");
        ++m[static_cast<std::size_t>(a)][static_cast<std::size_t>(l)];
    }
    return m;
}

BinaryConfusion binarize(const ConfusionMatrix& m) {
    BinaryConfusion b{};
    for (std::size_t r = 0; r < 2; ++r) {
        b[r][0] = m[r][0];
        b[r][1] = m[r][1] + m[r][2] + m[r][3];
    }
    return b;
}

}  // namespace edurisk

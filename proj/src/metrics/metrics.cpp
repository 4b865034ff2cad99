#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace penseg {

namespace {

// Jonker-Volgenant style shortest augmenting path assignment, O(n^3).
// Returns column assigned to each row of the square cost matrix.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, n), way(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        p[n] = i;
        int j0 = n;
        std::vector<double> minv(n + 1, INF);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            double delta = INF;
            for (int j = 0; j < n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != n);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 0; j < n; ++j)
        if (p[j] < n) row_to_col[p[j]] = j;
    return row_to_col;
}

}  // namespace

std::vector<std::vector<double>> iou_matrix(const std::vector<Mask2D>& gt,
                                            const std::vector<Mask2D>& pred) {
    std::vector<std::vector<double>> m(gt.size(), std::vector<double>(pred.size(), 0.0));
    for (size_t i = 0; i < gt.size(); ++i) {
        for (size_t j = 0; j < pred.size(); ++j) {
            const Mask2D& a = gt[i];
            const Mask2D& b = pred[j];
            if (a.height() != b.height() || a.width() != b.width())
                throw ValidationError("iou_matrix: mask dimension mismatch");
            size_t inter = 0, uni = 0;
            const auto& ra = a.raw();
            const auto& rb = b.raw();
            for (size_t k = 0; k < ra.size(); ++k) {
                inter += ra[k] & rb[k];
                uni += ra[k] | rb[k];
            }
            m[i][j] = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
        }
    }
    return m;
}

MatchResult match_detections(const std::vector<std::vector<double>>& matrix, double threshold,
                             bool pre_mask) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw ValidationError("match_detections: threshold must be in (0, 1]");
    const int n_gt = static_cast<int>(matrix.size());
    const int n_pred = n_gt > 0 ? static_cast<int>(matrix[0].size()) : 0;

    MatchResult result;
    result.iou_threshold = threshold;

    const int n = std::max(n_gt, n_pred);
    std::vector<char> gt_matched(n_gt, 0), pred_matched(n_pred, 0);
    if (n > 0) {
        // pad to square with zero-IoU dummies (cost 1)
        std::vector<std::vector<double>> cost(n, std::vector<double>(n, 1.0));
        for (int i = 0; i < n_gt; ++i)
            for (int j = 0; j < n_pred; ++j) {
                double iou = matrix[i][j];
                if (pre_mask && iou < threshold) iou = 0.0;
                cost[i][j] = 1.0 - iou;
            }
        std::vector<int> col = solve_assignment(cost);
        for (int i = 0; i < n_gt; ++i) {
            int j = col[i];
            if (j < 0 || j >= n_pred) continue;
            double iou = matrix[i][j];
            if (iou >= threshold) {
                result.pairs.push_back({i, j, iou});
                gt_matched[i] = 1;
                pred_matched[j] = 1;
            }
        }
    }
    for (int i = 0; i < n_gt; ++i)
        if (!gt_matched[i]) result.unmatched_gt.push_back(i);
    for (int j = 0; j < n_pred; ++j)
        if (!pred_matched[j]) result.unmatched_pred.push_back(j);
    return result;
}

MetricsReport compute_metrics(const MatchResult& match) {
    MetricsReport r;
    r.tp = static_cast<int>(match.pairs.size());
    r.fp = static_cast<int>(match.unmatched_pred.size());
    r.fn = static_cast<int>(match.unmatched_gt.size());

    auto ratio = [&r](int num, int den) {
        if (den == 0) {
            r.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / den;
    };
    r.jaccard = ratio(r.tp, r.tp + r.fp + r.fn);
    r.precision = ratio(r.tp, r.tp + r.fp);
    r.recall = ratio(r.tp, r.tp + r.fn);
    if (r.tp == 0) {
        r.quality = 0.0;
        r.degenerate = true;
    } else {
        double sum = 0.0;
        for (const auto& p : match.pairs) sum += p.iou;
        r.quality = sum / r.tp;
    }
    return r;
}

}  // namespace penseg

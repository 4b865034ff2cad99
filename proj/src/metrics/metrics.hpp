#pragma once

#include <tuple>
#include <vector>

#include "core/types.hpp"

namespace penseg {

struct MatchResult {
    struct Pair {
        int gt = 0;
        int pred = 0;
        double iou = 0.0;
    };
    std::vector<Pair> pairs;
    std::vector<int> unmatched_gt;
    std::vector<int> unmatched_pred;
    double iou_threshold = 0.5;
};

struct MetricsReport {
    int tp = 0, fp = 0, fn = 0;
    double jaccard = 0.0, precision = 0.0, recall = 0.0, quality = 0.0;
    bool degenerate = false;  // some 0/0 ratio was reported as 0
};

// Entry (i, j) = |gt_i ∩ pred_j| / |gt_i ∪ pred_j|. Masks must share dims.
std::vector<std::vector<double>> iou_matrix(const std::vector<Mask2D>& gt,
                                            const std::vector<Mask2D>& pred);

// Optimal assignment minimizing sum(1 - IoU) over the zero-padded square
// cost matrix; matched pairs below the threshold are demoted to unmatched.
// With pre_mask set, sub-threshold entries are zeroed before assignment
// instead (sensitivity switch).
MatchResult match_detections(const std::vector<std::vector<double>>& matrix, double threshold,
                             bool pre_mask = false);

MetricsReport compute_metrics(const MatchResult& match);

}  // namespace penseg

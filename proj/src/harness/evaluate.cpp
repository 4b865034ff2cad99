#include "harness/evaluate.hpp"

#include <json.hpp>

#include "projections/projections.hpp"

namespace penseg {

Predictor::Predictor(const ModelBundle& bundle) : config_(bundle.config) {
    if (config_.input_mode == InputMode::kPen)
        pen_.emplace(config_.pen, bundle.pen_params);
    head_.emplace(config_.head, bundle.head_params);
}

RgbProjection Predictor::project(const ImageStack& stack) {
    switch (config_.input_mode) {
        case InputMode::kPen: return pen_forward(*pen_, stack);
        case InputMode::kMip: return mip(stack);
        case InputMode::kLinear: return linear_depth_embed(stack, DepthEmbedConfig{});
    }
    throw ValidationError("Predictor: bad input mode");
}

SegPrediction Predictor::predict(const ImageStack& stack) {
    RgbProjection proj = project(stack);
    return head_forward(*head_, proj);
}

DetectionSet Predictor::detect(const ImageStack& stack) {
    SegPrediction pred = predict(stack);
    return flows_to_instances(pred, config_.head);
}

MetricsReport evaluate(Predictor& predictor, const Dataset& dataset, double iou_threshold) {
    if (dataset.empty()) throw ValidationError("evaluate: empty dataset");
    int tp = 0, fp = 0, fn = 0;
    double iou_sum = 0.0;
    for (const auto& [stack, annotations] : dataset) {
        DetectionSet det = predictor.detect(stack);
        std::vector<Mask2D> gt_masks, pred_masks;
        for (const CellAnnotation& cell : annotations.cells) gt_masks.push_back(cell.mask);
        for (const Detection& d : det.detections) pred_masks.push_back(d.mask);
        MatchResult match = match_detections(iou_matrix(gt_masks, pred_masks), iou_threshold);
        // count from the sets, not the match: an empty IoU matrix carries
        // no prediction count, so unmatched_pred misses fp when gt is empty
        tp += static_cast<int>(match.pairs.size());
        fp += static_cast<int>(pred_masks.size() - match.pairs.size());
        fn += static_cast<int>(gt_masks.size() - match.pairs.size());
        for (const MatchResult::Pair& p : match.pairs) iou_sum += p.iou;
    }
    MetricsReport report;
    report.tp = tp;
    report.fp = fp;
    report.fn = fn;
    const auto ratio = [&report](int num, int den) {
        if (den == 0) {
            report.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / den;
    };
    report.jaccard = ratio(tp, tp + fp + fn);
    report.precision = ratio(tp, tp + fp);
    report.recall = ratio(tp, tp + fn);
    if (tp > 0) {
        report.quality = iou_sum / tp;
    } else {
        report.quality = 0.0;
        report.degenerate = true;
    }
    return report;
}

std::string metrics_report_to_json(const MetricsReport& report, double iou_threshold) {
    nlohmann::ordered_json j;
    j["tp"] = report.tp;
    j["fp"] = report.fp;
    j["fn"] = report.fn;
    j["jaccard"] = report.jaccard;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["quality"] = report.quality;
    j["threshold"] = iou_threshold;
    j["degenerate"] = report.degenerate;
    return j.dump(2) + "\n";
}

}  // namespace penseg

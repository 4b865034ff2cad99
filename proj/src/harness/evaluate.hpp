#pragma once

#include <optional>
#include <string>

#include "harness/dataset.hpp"
#include "harness/train.hpp"
#include "metrics/metrics.hpp"
#include "pen/pen.hpp"
#include "seghead/instances.hpp"

namespace penseg {

// Inference wrapper over a trained bundle: projection (per input mode),
// eval-mode head forward, and flow-following instance recovery.
class Predictor {
public:
    explicit Predictor(const ModelBundle& bundle);

    const TrainConfig& config() const { return config_; }

    RgbProjection project(const ImageStack& stack);
    SegPrediction predict(const ImageStack& stack);
    DetectionSet detect(const ImageStack& stack);

private:
    TrainConfig config_;
    std::optional<PenModel> pen_;
    std::optional<HeadModel> head_;
};

// Pooled TP/FP/FN over the whole dataset at the given IoU threshold;
// quality is the mean matched IoU over all pooled pairs.
MetricsReport evaluate(Predictor& predictor, const Dataset& dataset, double iou_threshold);

std::string metrics_report_to_json(const MetricsReport& report, double iou_threshold);

}  // namespace penseg

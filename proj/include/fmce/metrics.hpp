#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace fmce {

// Confusion matrix plus macro-averaged classification metrics. Classes
// are 0-based here; confusion[actual][predicted] holds counts.
struct EvalMetrics {
    double accuracy = 0.0;
    double precision = 0.0;  // macro
    double recall = 0.0;     // macro
    double f1 = 0.0;         // macro
    std::vector<std::vector<int64_t>> confusion;
};

// Macro averaging: unweighted mean of the per-class metric. A class with
// no predicted positives contributes precision 0; likewise recall for a
// class absent from the labels, and F1 when precision + recall is 0.
EvalMetrics compute_metrics(std::span<const int> predictions, std::span<const int> labels,
                            int class_count);

nlohmann::json metrics_to_json(const EvalMetrics& metrics);

}  // namespace fmce

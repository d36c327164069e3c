#include "fmce/metrics.hpp"

#include <stdexcept>
#include <string>

namespace fmce {

EvalMetrics compute_metrics(std::span<const int> predictions, std::span<const int> labels,
                            int class_count) {
    if (class_count < 1) throw std::invalid_argument("class_count must be >= 1");
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("prediction/label count mismatch");
    }
    if (predictions.empty()) throw std::invalid_argument("no samples to score");

    EvalMetrics m;
    m.confusion.assign(static_cast<size_t>(class_count),
                       std::vector<int64_t>(static_cast<size_t>(class_count), 0));
    for (size_t i = 0; i < predictions.size(); ++i) {
        const int a = labels[i], p = predictions[i];
        if (a < 0 || a >= class_count || p < 0 || p >= class_count) {
            throw std::out_of_range("class index outside [0, " + std::to_string(class_count) +
                                    ") at sample " + std::to_string(i));
        }
        m.confusion[static_cast<size_t>(a)][static_cast<size_t>(p)]++;
    }

    int64_t diagonal = 0;
    double precision_sum = 0.0, recall_sum = 0.0, f1_sum = 0.0;
    for (int c = 0; c < class_count; ++c) {
        const int64_t tp = m.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)];
        int64_t predicted = 0, actual = 0;
        for (int o = 0; o < class_count; ++o) {
            predicted += m.confusion[static_cast<size_t>(o)][static_cast<size_t>(c)];
            actual += m.confusion[static_cast<size_t>(c)][static_cast<size_t>(o)];
        }
        diagonal += tp;
        const double precision =
            predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        const double recall =
            actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        precision_sum += precision;
        recall_sum += recall;
        f1_sum += f1;
    }
    m.accuracy = static_cast<double>(diagonal) / static_cast<double>(predictions.size());
    m.precision = precision_sum / class_count;
    m.recall = recall_sum / class_count;
    m.f1 = f1_sum / class_count;
    return m;
}

nlohmann::json metrics_to_json(const EvalMetrics& metrics) {
    return nlohmann::json{
        {"accuracy", metrics.accuracy},
        {"precision", metrics.precision},
        {"recall", metrics.recall},
        {"f1", metrics.f1},
        {"confusion", metrics.confusion},
    };
}

}  // namespace fmce

#pragma once

// Independent brute-force references for the analysis and metrics paths.
// Everything here is written as straight-line loops over the defining
// formulas and deliberately shares no code with src/; the tests compare
// library output against these.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace oracle {

inline std::vector<double> smooth(const std::vector<double>& loss, double alpha,
                                  bool literal = false) {
    std::vector<double> out;
    out.push_back(loss[0]);
    for (size_t m = 1; m < loss.size(); ++m) {
        const double prev = literal ? loss[m - 1] : out[m - 1];
        out.push_back(alpha * prev + (1.0 - alpha) * loss[m]);
    }
    return out;
}

// cqi[i] belongs to epoch i+2
inline std::vector<double> cqi_values(const std::vector<double>& smoothed, int window) {
    std::vector<double> diffs;
    for (size_t m = 1; m < smoothed.size(); ++m) diffs.push_back(smoothed[m] - smoothed[m - 1]);
    std::vector<double> out;
    for (size_t i = 0; i < diffs.size(); ++i) {
        const size_t w = std::min<size_t>(static_cast<size_t>(window), i + 1);
        double total = 0.0;
        for (size_t j = i + 1 - w; j <= i; ++j) total += std::abs(diffs[j]);
        out.push_back(total / static_cast<double>(w));
    }
    return out;
}

inline std::optional<int> converged_epoch(const std::vector<double>& cqi, double mu) {
    for (size_t i = 0; i < cqi.size(); ++i) {
        if (cqi[i] <= mu) return static_cast<int>(i) + 2;
    }
    return std::nullopt;
}

struct MarkerResult {
    int baseline_epoch = 0;
    std::vector<int> markers;
    double total_drop = 0.0;
    double per_phase_drop = 0.0;
};

// scans epochs accumulating log-loss drop until each threshold is met
inline MarkerResult epoch_markers(const std::vector<double>& raw,
                                  const std::vector<double>& smoothed, int e_k, int k) {
    std::vector<double> log_s;
    for (double v : smoothed) log_s.push_back(std::log(v));

    MarkerResult r;
    r.baseline_epoch = 1;
    for (size_t m = 1; m < raw.size(); ++m) {
        if (raw[m] > raw[static_cast<size_t>(r.baseline_epoch) - 1]) {
            r.baseline_epoch = static_cast<int>(m) + 1;
        }
    }
    const double base = log_s[static_cast<size_t>(r.baseline_epoch) - 1];
    r.total_drop = std::abs(log_s[static_cast<size_t>(e_k) - 1] - base);
    if (r.total_drop == 0.0) throw std::runtime_error("oracle: degenerate curve");
    r.per_phase_drop = r.total_drop / k;

    int prev = r.baseline_epoch;
    for (int phase = 1; phase < k; ++phase) {
        int found = 0;
        for (int m = prev + 1; m < e_k; ++m) {
            if (std::abs(log_s[static_cast<size_t>(m) - 1] - base) >= phase * r.per_phase_drop) {
                found = m;
                break;
            }
        }
        if (found == 0) throw std::runtime_error("oracle: infeasible segmentation");
        r.markers.push_back(found);
        prev = found;
    }
    r.markers.push_back(e_k);
    return r;
}

struct Metrics {
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
};

// per-class counting directly over the vectors (no confusion matrix)
inline Metrics metrics(const std::vector<int>& preds, const std::vector<int>& labels, int k) {
    Metrics m;
    size_t correct = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == labels[i]) correct++;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
    for (int c = 0; c < k; ++c) {
        size_t tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < preds.size(); ++i) {
            if (preds[i] == c && labels[i] == c) tp++;
            if (preds[i] == c && labels[i] != c) fp++;
            if (preds[i] != c && labels[i] == c) fn++;
        }
        const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        m.precision += p / k;
        m.recall += r / k;
        m.f1 += f / k;
    }
    return m;
}

}  // namespace oracle

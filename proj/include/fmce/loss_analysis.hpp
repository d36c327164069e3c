#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fmce {

// Per-epoch training loss, epochs 1..M. values[i] is the loss at epoch i+1.
struct LossSeries {
    std::vector<double> values;
    std::string run_id;
};

// Rejects series shorter than 2 epochs and non-finite/negative values,
// naming the offending epoch.
void validate_loss_series(const LossSeries& series);

enum class SmoothingMode {
    recursive,      // exponential moving average: uses the smoothed previous value
    paper_literal,  // weighted pair: uses the raw previous value
};

struct SmoothingConfig {
    double alpha = 0.85;
    SmoothingMode mode = SmoothingMode::recursive;
};

// Smoothed loss, same length and epoch indexing as its source.
struct SmoothedSeries {
    std::vector<double> values;
};

struct CqiConfig {
    int window = 10;       // B
    double threshold = 1e-4;  // mu_CQI
};

// First differences and their windowed absolute means, both defined from
// epoch 2 on: diffs[i] and cqi[i] belong to epoch i+2.
struct CqiSeries {
    std::vector<double> diffs;
    std::vector<double> cqi;
    std::optional<int> converged_epoch;  // smallest epoch with cqi <= threshold
};

// Smoothing seeded with the first raw value. In recursive mode each step
// blends with the previous smoothed value; in paper_literal mode with the
// previous raw value.
SmoothedSeries smooth(const LossSeries& series, const SmoothingConfig& cfg);

// diffs[i] = values[i+1] - values[i]; rejects series shorter than 2.
std::vector<double> first_difference(const SmoothedSeries& series);

// Windowed mean of absolute first differences. At epoch m the window
// covers the last min(B, m-1) differences (the head is truncated to what
// exists). converged_epoch is the first crossing of the threshold.
CqiSeries cqi(const SmoothedSeries& series, const CqiConfig& cfg);

// Loss-log readers. CSV expects an "epoch,loss" header; JSONL expects one
// {"epoch": int, "loss": number} object per line. Either way epochs must
// be 1..M contiguous ascending. run_id defaults to the file stem.
LossSeries read_loss_log(const std::string& path);

const char* to_string(SmoothingMode mode);
SmoothingMode smoothing_mode_from_string(const std::string& name);

}  // namespace fmce

#pragma once

#include <string>
#include <vector>

#include "fmce/fmcs_dataset.hpp"
#include "fmce/metrics.hpp"
#include "fmce/nn.hpp"
#include "fmce/original_task.hpp"

namespace fmce {

struct FmceNetConfig {
    // above this channel count a leading conv reducer (no pooling) brings
    // the input down to the budget before the halving stages
    int channel_budget = 1024;
    // permit one stage when the input can only be halved once
    bool allow_single_stage = false;
};

// Convergence-score classifier: halving conv/maxpool/relu stages sized
// from the input shape, then FC to K logits and a softmax.
struct FmceModel {
    ModelGraph graph;
    int k = 0;
    Shape3 input_shape;
    int logits_layer_count = 0;  // layers up to (excluding) the softmax
    int last_conv_layer = -1;
    std::vector<float> norm_mean;  // per-channel standardization from the train split
    std::vector<float> norm_std;
    uint64_t split_seed = 0;
    std::string dataset_digest;

    Shape3 heatmap_shape() const;  // spatial grid of the last conv activation
};

// Stage count = halvings of min(H, W) until it reaches 1 or 2, floored
// at 2; each stage is conv3x3 (channels halved), maxpool2x2, relu.
std::vector<LayerSpec> fmce_layer_specs(Shape3 input, int k, const FmceNetConfig& cfg = {});

FmceModel build_fmce(Shape3 input, int k, uint64_t seed, const FmceNetConfig& cfg = {});

struct FmceTrainResult {
    FmceModel model;
    LossSeries loss;  // admissible loss_analysis input
};

// Standardizes with train-split statistics, then runs the shared
// minibatch loop. epochs = 0 returns the untrained model.
FmceTrainResult train_fmce(const FmcsDataset& dataset, const TrainConfig& cfg,
                           const FmceNetConfig& net_cfg = {});

// Confusion matrix and macro metrics over the dataset's test split.
EvalMetrics evaluate(const FmceModel& model, const FmcsDataset& dataset);

std::vector<int> predict(const FmceModel& model, const Tensor4& raw_features);

struct Heatmap {
    int h = 0, w = 0;
    std::vector<float> values;  // in [0, 1]
};

// Grad-CAM over the last conv activation: channel weights are the spatial
// mean of the target logit's gradient; the weighted sum is ReLU'd and
// max-normalized. target_score is 1-based.
Heatmap grad_cam(const FmceModel& model, std::span<const float> raw_features, int target_score);

void write_pgm(const Heatmap& map, const std::string& path);

// weights.fmck + model.json under dir
void save_fmce_model(const FmceModel& model, const std::string& dir);
FmceModel load_fmce_model(const std::string& dir, const FmceNetConfig& cfg = {});

}  // namespace fmce

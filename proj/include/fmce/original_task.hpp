#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmce/loss_analysis.hpp"
#include "fmce/nn.hpp"
#include "fmce/optimizer.hpp"
#include "fmce/synthetic.hpp"

namespace fmce {

// Classifier for the synthetic task: a two-block conv backbone producing
// (16, 4, 4) feature maps from 16x16 inputs, then GAP -> FC -> softmax.
struct OriginalTaskModel {
    ModelGraph graph;
    int backbone_layer_count = 0;  // layers forming the feature extractor
    int logits_layer_count = 0;    // layers up to (excluding) the softmax

    Shape3 feature_shape() const { return graph.shape_after(backbone_layer_count); }
};

OriginalTaskModel build_original_task_model(uint64_t seed);

struct TrainConfig {
    int epochs = 60;
    int batch_size = 64;
    OptimizerConfig optimizer;
    uint64_t seed = 7;
};

// Generic minibatch cross-entropy loop shared by both classifiers.
// `fill` materializes a batch for the given sample ids; `after_epoch` runs
// once per epoch (checkpointing). Aborts if the epoch loss exceeds 10x the
// first epoch's loss.
using BatchFiller = std::function<Tensor4(const std::vector<int>& ids, std::vector<int>& labels)>;

LossSeries run_training(ModelGraph& model, int logits_layer_count, int sample_count,
                        const BatchFiller& fill, const TrainConfig& cfg,
                        uint64_t shuffle_seed, const std::string& run_id,
                        const std::function<void(int epoch)>& after_epoch = {});

// Per-epoch loss log and checkpoint files under trace_dir:
//   loss.csv, checkpoints/epoch_%04d.fmck, config.json
struct TrainingTrace {
    LossSeries loss;
    std::vector<std::string> checkpoint_paths;  // index m-1 -> epoch m
    nlohmann::json config;
    std::string trace_dir;

    const std::string& checkpoint_for_epoch(int epoch) const;
};

TrainingTrace train_original(const SyntheticDataset& dataset, const TrainConfig& cfg,
                             const std::string& trace_dir,
                             const DatasetOptions& data_options = {});

TrainingTrace read_trace(const std::string& trace_dir);

// Backbone-only inference over a dataset split with the weights of one
// checkpoint; output rows follow `indices` order.
Tensor4 extract_feature_maps(const std::string& checkpoint_path, const SyntheticDataset& dataset,
                             const std::vector<int>& indices);

}  // namespace fmce

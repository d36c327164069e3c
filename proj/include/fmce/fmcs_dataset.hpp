#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmce/original_task.hpp"
#include "fmce/phase_segmentation.hpp"
#include "fmce/tensor.hpp"

namespace fmce {

// One labeled feature map; the tensor data lives in FmcsDataset::features.
struct FmcsSample {
    uint8_t label = 0;          // convergence score 1..K
    uint32_t source_index = 0;  // original image index
    uint32_t marker_epoch = 0;  // E_k the feature map was extracted at
};

// The K x N collection of labeled feature maps. On disk (".fmcs",
// little-endian): magic "FMCS", u32 version, u32 K, u64 sample count,
// u32 C/H/W, per sample {label u8, source_index u32, marker_epoch u32,
// C*H*W f32}, then a trailing u64 FNV-1a checksum of all preceding bytes.
struct FmcsDataset {
    int k = 0;
    Shape3 feature_shape;
    std::vector<FmcsSample> meta;
    std::vector<float> features;  // meta.size() * feature_shape.volume(), sample-major
    std::vector<int> train_indices;  // filled by split_dataset
    std::vector<int> test_indices;
    nlohmann::json provenance;

    size_t sample_count() const { return meta.size(); }

    std::span<const float> sample_features(size_t i) const {
        const size_t vol = static_cast<size_t>(feature_shape.volume());
        return {features.data() + i * vol, vol};
    }

    // batch tensor over a subset of samples, preserving index order
    Tensor4 gather(const std::vector<int>& indices) const;

    std::vector<int> per_label_counts() const;  // index k-1 -> count of label k
};

inline constexpr uint32_t kFmcsVersion = 1;

// Extracts feature maps over the training split at every marker epoch.
// Samples are laid out by score, then by split position; deterministic.
FmcsDataset build_fmcs_dataset(const TrainingTrace& trace, const PhasePlan& plan,
                               const SyntheticDataset& dataset);

// Label-balanced 3:1 partition, deterministic in seed; per-label
// remainders go to the training side.
void split_dataset(FmcsDataset& dataset, uint64_t seed);

void save_dataset(const FmcsDataset& dataset, const std::string& path);
FmcsDataset load_dataset(const std::string& path);

// The trailing file checksum, hex-encoded; doubles as the content digest
// recorded in manifests and reports.
std::string dataset_digest(const FmcsDataset& dataset);

nlohmann::json dataset_manifest(const FmcsDataset& dataset);

}  // namespace fmce

#pragma once

#include <cstdint>
#include <vector>

#include "fmce/tensor.hpp"

namespace fmce {

inline constexpr int kImageSize = 16;
inline constexpr int kClassCount = 4;

// Procedurally generated 4-class grayscale toy task: horizontal stripes,
// vertical stripes, checkerboard, centered blob. Pixel values in [0, 1].
struct SyntheticDataset {
    Tensor4 images;           // (N, 1, 16, 16)
    std::vector<int> labels;  // 0..3, one per image
    std::vector<int> train_indices;  // stratified 3:1 split
    std::vector<int> test_indices;
    uint64_t generator_seed = 0;
    int n_per_class = 0;
};

struct DatasetOptions {
    double noise_sigma = 0.1;
    bool randomize = true;  // false: canonical phase/scale per class, for tests
};

// Bit-identical regeneration from the same seed. Requires n_per_class >= 50
// (use DatasetOptions-free overload defaults for the production path).
SyntheticDataset generate_dataset(uint64_t seed, int n_per_class,
                                  const DatasetOptions& options = {});

// Gathers a row subset into a batch tensor, preserving index order.
Tensor4 gather_images(const Tensor4& images, const std::vector<int>& indices);

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& indices);

}  // namespace fmce

#include "fmce/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fmce/rng.hpp"

namespace fmce {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

struct PatternParams {
    double period = 4.0;   // stripes / checker cell size
    double phase = 0.0;    // stripes offset / checker shift
    double phase2 = 0.0;   // checker second axis shift / blob center jitter
    double sigma = 3.5;    // blob width
    double amplitude = 0.9;
};

PatternParams draw_params(int label, Xoshiro256pp& rng, bool randomize) {
    PatternParams p;
    if (!randomize) return p;
    switch (label) {
        case 0:
        case 1:
            p.period = rng.uniform(3.0, 6.0);
            p.phase = rng.uniform(0.0, p.period);
            break;
        case 2:
            p.period = 2.0 + static_cast<double>(rng.next_below(3));  // cell size 2..4
            p.phase = static_cast<double>(rng.next_below(static_cast<uint64_t>(p.period)));
            p.phase2 = static_cast<double>(rng.next_below(static_cast<uint64_t>(p.period)));
            break;
        case 3:
            p.sigma = rng.uniform(2.5, 4.5);
            p.amplitude = rng.uniform(0.7, 1.0);
            p.phase = rng.uniform(-2.0, 2.0);   // center jitter y
            p.phase2 = rng.uniform(-2.0, 2.0);  // center jitter x
            break;
        default:
            break;
    }
    return p;
}

double pattern_value(int label, const PatternParams& p, int y, int x) {
    switch (label) {
        case 0:  // horizontal stripes: bands along y
            return 0.5 + 0.35 * std::sin(kTwoPi * (y + p.phase) / p.period);
        case 1:  // vertical stripes: bands along x
            return 0.5 + 0.35 * std::sin(kTwoPi * (x + p.phase) / p.period);
        case 2: {
            const long cy = static_cast<long>(std::floor((y + p.phase) / p.period));
            const long cx = static_cast<long>(std::floor((x + p.phase2) / p.period));
            return ((cy + cx) & 1) ? 0.85 : 0.15;
        }
        case 3: {
            const double center = (kImageSize - 1) / 2.0;
            const double dy = y - (center + p.phase);
            const double dx = x - (center + p.phase2);
            return p.amplitude * std::exp(-(dy * dy + dx * dx) / (2.0 * p.sigma * p.sigma));
        }
        default:
            return 0.0;
    }
}

}  // namespace

SyntheticDataset generate_dataset(uint64_t seed, int n_per_class,
                                  const DatasetOptions& options) {
    if (n_per_class < 50) {
        throw std::invalid_argument("n_per_class must be >= 50, got " +
                                    std::to_string(n_per_class));
    }

    const int total = n_per_class * kClassCount;
    SyntheticDataset ds;
    ds.generator_seed = seed;
    ds.n_per_class = n_per_class;
    ds.images = Tensor4(total, 1, kImageSize, kImageSize);
    ds.labels.resize(static_cast<size_t>(total));

    Xoshiro256pp rng(seed);
    for (int label = 0; label < kClassCount; ++label) {
        for (int i = 0; i < n_per_class; ++i) {
            const int idx = label * n_per_class + i;
            ds.labels[static_cast<size_t>(idx)] = label;
            const PatternParams p = draw_params(label, rng, options.randomize);
            for (int y = 0; y < kImageSize; ++y) {
                for (int x = 0; x < kImageSize; ++x) {
                    double v = pattern_value(label, p, y, x);
                    if (options.noise_sigma > 0.0) {
                        v += options.noise_sigma * rng.gaussian();
                    }
                    ds.images.at(idx, 0, y, x) =
                        static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            }
        }
    }

    // stratified 3:1 split; membership is seed-dependent, counts are not
    const int test_per_class = n_per_class / 4;
    for (int label = 0; label < kClassCount; ++label) {
        std::vector<int> members(static_cast<size_t>(n_per_class));
        std::iota(members.begin(), members.end(), label * n_per_class);
        rng.shuffle(members);
        for (int i = 0; i < n_per_class; ++i) {
            if (i < test_per_class) {
                ds.test_indices.push_back(members[static_cast<size_t>(i)]);
            } else {
                ds.train_indices.push_back(members[static_cast<size_t>(i)]);
            }
        }
    }
    std::sort(ds.train_indices.begin(), ds.train_indices.end());
    std::sort(ds.test_indices.begin(), ds.test_indices.end());
    return ds;
}

Tensor4 gather_images(const Tensor4& images, const std::vector<int>& indices) {
    Tensor4 out(static_cast<int>(indices.size()), images.c, images.h, images.w);
    const size_t row = static_cast<size_t>(images.c) * images.h * images.w;
    for (size_t i = 0; i < indices.size(); ++i) {
        const float* src = &images.v[static_cast<size_t>(indices[i]) * row];
        std::copy(src, src + row, &out.v[i * row]);
    }
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& indices) {
    std::vector<int> out(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        out[i] = labels[static_cast<size_t>(indices[i])];
    }
    return out;
}

}  // namespace fmce

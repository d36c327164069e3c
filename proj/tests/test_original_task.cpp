#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fmce/checkpoint.hpp"
#include "fmce/errors.hpp"
#include "fmce/original_task.hpp"
#include "fmce/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fmce;

namespace {

std::string fresh_dir(const std::string& name) {
    const std::string dir = "/tmp/fmce_tests/" + name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<int> class_counts(const SyntheticDataset& ds, const std::vector<int>& indices) {
    std::vector<int> counts(kClassCount, 0);
    for (int idx : indices) counts[static_cast<size_t>(ds.labels[static_cast<size_t>(idx)])]++;
    return counts;
}

std::string file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return std::move(os).str();
}

}  // namespace

TEST_CASE("dataset generation is deterministic and balanced") {
    const auto a = generate_dataset(123, 500);
    const auto b = generate_dataset(123, 500);
    CHECK(a.images.v == b.images.v);
    CHECK(a.labels == b.labels);
    CHECK(a.train_indices == b.train_indices);
    CHECK(a.test_indices == b.test_indices);

    CHECK(a.images.n == 2000);
    CHECK(a.train_indices.size() == 1500);
    CHECK(a.test_indices.size() == 500);
    CHECK(class_counts(a, a.train_indices) == std::vector<int>{375, 375, 375, 375});
    CHECK(class_counts(a, a.test_indices) == std::vector<int>{125, 125, 125, 125});

    const auto c = generate_dataset(124, 500);
    CHECK(a.images.v != c.images.v);

    for (float v : a.images.v) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("canonical noiseless patterns are separated by class") {
    DatasetOptions options;
    options.noise_sigma = 0.0;
    options.randomize = false;
    const auto ds = generate_dataset(5, 50, options);

    // without noise or parameter jitter each class collapses to one point
    const size_t row = static_cast<size_t>(kImageSize) * kImageSize;
    for (int label = 0; label < kClassCount; ++label) {
        const size_t base = static_cast<size_t>(label) * 50 * row;
        for (int i = 1; i < 50; ++i) {
            for (size_t p = 0; p < row; ++p) {
                REQUIRE(ds.images.v[base + static_cast<size_t>(i) * row + p] ==
                        ds.images.v[base + p]);
            }
        }
    }

    // nearest-centroid classification is exact on the prototypes
    std::vector<std::vector<float>> centroids(kClassCount, std::vector<float>(row, 0.0f));
    for (int label = 0; label < kClassCount; ++label) {
        const size_t base = static_cast<size_t>(label) * 50 * row;
        for (size_t p = 0; p < row; ++p) centroids[static_cast<size_t>(label)][p] = ds.images.v[base + p];
    }
    int correct = 0;
    for (int n = 0; n < ds.images.n; ++n) {
        int best = -1;
        double best_d = 1e30;
        for (int label = 0; label < kClassCount; ++label) {
            double d = 0.0;
            for (size_t p = 0; p < row; ++p) {
                const double diff = ds.images.v[static_cast<size_t>(n) * row + p] -
                                    centroids[static_cast<size_t>(label)][p];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = label;
            }
        }
        if (best == ds.labels[static_cast<size_t>(n)]) correct++;
    }
    CHECK(correct == ds.images.n);
}

TEST_CASE("undersized datasets are rejected") {
    CHECK_THROWS_AS(generate_dataset(1, 49), std::invalid_argument);
}

TEST_CASE("backbone produces the documented feature shape") {
    const auto model = build_original_task_model(3);
    CHECK(model.feature_shape() == Shape3{16, 4, 4});
    CHECK(model.graph.layers.size() == 9);
    CHECK(model.graph.output_shapes.back() == Shape3{kClassCount, 1, 1});
}

TEST_CASE("training writes one checkpoint per epoch and reproduces bit-for-bit") {
    const auto ds = generate_dataset(77, 50);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 9;

    const std::string dir_a = fresh_dir("trace_a");
    const std::string dir_b = fresh_dir("trace_b");
    const auto trace_a = train_original(ds, cfg, dir_a);
    const auto trace_b = train_original(ds, cfg, dir_b);

    REQUIRE(trace_a.loss.values.size() == 3);
    REQUIRE(trace_a.checkpoint_paths.size() == 3);
    CHECK(trace_a.loss.values == trace_b.loss.values);
    for (size_t m = 0; m < 3; ++m) {
        CHECK(file_bytes(trace_a.checkpoint_paths[m]) == file_bytes(trace_b.checkpoint_paths[m]));
    }

    // the emitted loss log round-trips exactly
    const auto reread = read_loss_log(dir_a + "/loss.csv");
    CHECK(reread.values == trace_a.loss.values);

    // losses are admissible analysis input
    for (double v : trace_a.loss.values) {
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
    }

    const auto trace_c = read_trace(dir_a);
    CHECK(trace_c.loss.values == trace_a.loss.values);
    CHECK(trace_c.checkpoint_paths.size() == 3);
    CHECK(trace_c.config.at("training").at("epochs") == 3);
}

TEST_CASE("a single epoch yields a single checkpoint") {
    const auto ds = generate_dataset(78, 50);
    TrainConfig cfg;
    cfg.epochs = 1;
    const auto trace = train_original(ds, cfg, fresh_dir("trace_single"));
    CHECK(trace.loss.values.size() == 1);
    CHECK(trace.checkpoint_paths.size() == 1);
}

TEST_CASE("divergence aborts with a diagnostic") {
    // rig the loop directly: a confident fixed model sees correct labels
    // in epoch 1 (tiny loss) and flipped labels afterwards (huge loss)
    ModelGraph model = build_model({1, 1, 1}, {LayerSpec::fc(1, 2)}, 1);
    model.layers[0].weight.v = {10.0f, -10.0f};
    model.layers[0].bias.v = {0.0f, 0.0f};

    int epoch_nr = 1;
    const BatchFiller fill = [&](const std::vector<int>& ids, std::vector<int>& labels) {
        labels.assign(ids.size(), epoch_nr == 1 ? 0 : 1);
        Tensor4 x(static_cast<int>(ids.size()), 1, 1, 1);
        for (float& v : x.v) v = 1.0f;
        return x;
    };

    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.optimizer.kind = OptimizerKind::sgd;
    cfg.optimizer.learning_rate = 1e-9f;
    CHECK_THROWS_WITH_AS(run_training(model, 1, 8, fill, cfg, 1, "rigged",
                                      [&](int) { epoch_nr++; }),
                         doctest::Contains("diverged"), std::runtime_error);
}

TEST_CASE("feature extraction is deterministic and order-preserving") {
    const auto ds = generate_dataset(80, 50);
    TrainConfig cfg;
    cfg.epochs = 2;
    const auto trace = train_original(ds, cfg, fresh_dir("trace_extract"));

    const auto maps = extract_feature_maps(trace.checkpoint_paths[1], ds, ds.train_indices);
    CHECK(maps.shape() ==
          std::array<int, 4>{static_cast<int>(ds.train_indices.size()), 16, 4, 4});
    const auto again = extract_feature_maps(trace.checkpoint_paths[1], ds, ds.train_indices);
    CHECK(maps.v == again.v);

    // row i corresponds to train_indices[i]
    const std::vector<int> single{ds.train_indices[7]};
    const auto one = extract_feature_maps(trace.checkpoint_paths[1], ds, single);
    const size_t vol = 16 * 4 * 4;
    for (size_t p = 0; p < vol; ++p) {
        CHECK(one.v[p] == maps.v[7 * vol + p]);
    }
}

TEST_CASE("an all-zero image maps to the bias-propagated features") {
    // freshly initialized model: biases are zero, so a zero image must
    // produce an identically zero feature map
    const auto model = build_original_task_model(21);
    const std::string path = fresh_dir("ckpt_zero") + "/init.fmck";
    save_checkpoint(model.graph, path);

    SyntheticDataset ds;
    ds.images = Tensor4(1, 1, kImageSize, kImageSize);
    ds.labels = {0};
    ds.generator_seed = 0;
    ds.n_per_class = 1;
    const auto maps = extract_feature_maps(path, ds, {0});
    for (float v : maps.v) CHECK(v == 0.0f);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    const auto ds = generate_dataset(81, 50);
    TrainConfig cfg;
    cfg.epochs = 2;
    const auto trace = train_original(ds, cfg, fresh_dir("trace_roundtrip"));

    auto model = build_original_task_model(0);
    load_checkpoint_into(model.graph, trace.checkpoint_paths[1]);
    const std::string copy = fresh_dir("ckpt_copy") + "/copy.fmck";
    save_checkpoint(model.graph, copy);
    CHECK(file_bytes(copy) == file_bytes(trace.checkpoint_paths[1]));
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto model = build_original_task_model(4);
    const std::string dir = fresh_dir("ckpt_corrupt");
    const std::string path = dir + "/model.fmck";
    save_checkpoint(model.graph, path);

    auto mutate = [&](size_t offset, char value, const std::string& name) {
        std::string bytes = file_bytes(path);
        bytes[offset] = value;
        const std::string out = dir + "/" + name;
        std::ofstream os(out, std::ios::binary | std::ios::trunc);
        os << bytes;
        return out;
    };

    auto fresh = build_original_task_model(0);
    CHECK_THROWS_WITH_AS(load_checkpoint_into(fresh.graph, mutate(0, 'X', "magic.fmck")),
                         doctest::Contains("magic"), ParseError);
    CHECK_THROWS_WITH_AS(load_checkpoint_into(fresh.graph, mutate(4, 9, "version.fmck")),
                         doctest::Contains("version"), ParseError);

    std::string bytes = file_bytes(path);
    bytes.resize(bytes.size() / 2);
    std::ofstream os(dir + "/short.fmck", std::ios::binary | std::ios::trunc);
    os << bytes;
    os.close();
    CHECK_THROWS_AS(load_checkpoint_into(fresh.graph, dir + "/short.fmck"), ParseError);
    CHECK_THROWS_AS(load_checkpoint_into(fresh.graph, dir + "/missing.fmck"), ParseError);

    // architecture mismatch
    ModelGraph other = build_model({1, 8, 8}, {LayerSpec::conv(1, 2, 1)}, 0);
    CHECK_THROWS_AS(load_checkpoint_into(other, path), ParseError);
}

#include "fmce/original_task.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "fmce/checkpoint.hpp"
#include "fmce/errors.hpp"
#include "fmce/rng.hpp"

namespace fs = std::filesystem;

namespace fmce {

OriginalTaskModel build_original_task_model(uint64_t seed) {
    const std::vector<LayerSpec> specs = {
        LayerSpec::conv(1, 8, 1),  LayerSpec::relu(), LayerSpec::maxpool(),
        LayerSpec::conv(8, 16, 1), LayerSpec::relu(), LayerSpec::maxpool(),
        LayerSpec::gap(),          LayerSpec::fc(16, kClassCount),
        LayerSpec::softmax(),
    };
    OriginalTaskModel model;
    model.graph = build_model({1, kImageSize, kImageSize}, specs, seed);
    model.backbone_layer_count = 6;
    model.logits_layer_count = 8;
    if (model.feature_shape() != Shape3{16, 4, 4}) {
        throw std::logic_error("backbone output shape is " + model.feature_shape().str() +
                               ", expected (16, 4, 4)");
    }
    return model;
}

LossSeries run_training(ModelGraph& model, int logits_layer_count, int sample_count,
                        const BatchFiller& fill, const TrainConfig& cfg,
                        uint64_t shuffle_seed, const std::string& run_id,
                        const std::function<void(int epoch)>& after_epoch) {
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (sample_count < 1) throw std::invalid_argument("no training samples");

    OptimizerState opt = make_optimizer(cfg.optimizer, model);
    Xoshiro256pp shuffle_rng(shuffle_seed);
    std::vector<int> perm(static_cast<size_t>(sample_count));
    std::iota(perm.begin(), perm.end(), 0);

    LossSeries series;
    series.run_id = run_id;
    std::vector<int> batch_ids, labels;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(perm);
        double loss_sum = 0.0;
        for (int start = 0; start < sample_count; start += cfg.batch_size) {
            const int end = std::min(sample_count, start + cfg.batch_size);
            batch_ids.assign(perm.begin() + start, perm.begin() + end);
            const Tensor4 x = fill(batch_ids, labels);

            ActivationCache cache;
            const Tensor4 logits = forward_range(model, x, 0, logits_layer_count, &cache);
            const LossAndGrad lg = softmax_cross_entropy(logits, labels);
            loss_sum += lg.loss * static_cast<double>(end - start);

            Gradients grads = make_zero_gradients(model);
            backward_range(model, cache, lg.logit_grad, 0, logits_layer_count, &grads);
            optimizer_step(opt, model, grads);
        }
        const double epoch_loss = loss_sum / sample_count;
        if (!std::isfinite(epoch_loss) ||
            (!series.values.empty() && epoch_loss > 10.0 * series.values.front())) {
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                     ": loss " + std::to_string(epoch_loss));
        }
        series.values.push_back(epoch_loss);
        if (after_epoch) after_epoch(epoch);
    }
    return series;
}

namespace {

std::string checkpoint_name(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%04d.fmck", epoch);
    return buf;
}

void write_loss_csv(const LossSeries& series, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "epoch,loss\n";
    char buf[64];
    for (size_t i = 0; i < series.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, series.values[i]);
        os << buf;
    }
}

}  // namespace

const std::string& TrainingTrace::checkpoint_for_epoch(int epoch) const {
    if (epoch < 1 || static_cast<size_t>(epoch) > checkpoint_paths.size()) {
        throw std::out_of_range("no checkpoint for epoch " + std::to_string(epoch) +
                                " in trace " + trace_dir);
    }
    return checkpoint_paths[static_cast<size_t>(epoch) - 1];
}

TrainingTrace train_original(const SyntheticDataset& dataset, const TrainConfig& cfg,
                             const std::string& trace_dir,
                             const DatasetOptions& data_options) {
    fs::create_directories(fs::path(trace_dir) / "checkpoints");

    const uint64_t model_seed = derive_seed(cfg.seed, 0);
    const uint64_t shuffle_seed = derive_seed(cfg.seed, 1);
    OriginalTaskModel model = build_original_task_model(model_seed);

    // train on the training split only; losses are training losses
    const Tensor4 train_images = gather_images(dataset.images, dataset.train_indices);
    const std::vector<int> train_labels = gather_labels(dataset.labels, dataset.train_indices);

    TrainingTrace trace;
    trace.trace_dir = trace_dir;

    const BatchFiller fill = [&](const std::vector<int>& ids, std::vector<int>& labels) {
        labels.resize(ids.size());
        Tensor4 x(static_cast<int>(ids.size()), train_images.c, train_images.h, train_images.w);
        const size_t row = static_cast<size_t>(train_images.c) * train_images.h * train_images.w;
        for (size_t i = 0; i < ids.size(); ++i) {
            const float* src = &train_images.v[static_cast<size_t>(ids[i]) * row];
            std::copy(src, src + row, &x.v[i * row]);
            labels[i] = train_labels[static_cast<size_t>(ids[i])];
        }
        return x;
    };

    const auto save_epoch = [&](int epoch) {
        const std::string path = (fs::path(trace_dir) / "checkpoints" / checkpoint_name(epoch)).string();
        save_checkpoint(model.graph, path);
        trace.checkpoint_paths.push_back(path);
    };

    trace.loss = run_training(model.graph, model.logits_layer_count,
                              static_cast<int>(dataset.train_indices.size()), fill, cfg,
                              shuffle_seed, "original_task", save_epoch);

    trace.config = nlohmann::json{
        {"dataset",
         {{"seed", dataset.generator_seed},
          {"n_per_class", dataset.n_per_class},
          {"noise_sigma", data_options.noise_sigma},
          {"randomize", data_options.randomize}}},
        {"training",
         {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"optimizer",
           {{"kind", to_string(cfg.optimizer.kind)},
            {"learning_rate", cfg.optimizer.learning_rate},
            {"beta1", cfg.optimizer.beta1},
            {"beta2", cfg.optimizer.beta2},
            {"epsilon", cfg.optimizer.epsilon}}}}},
        {"derived_seeds", {{"model_init", model_seed}, {"shuffle", shuffle_seed}}},
        {"model", {{"kind", "original_task"}, {"backbone_layers", model.backbone_layer_count}}},
    };

    write_loss_csv(trace.loss, (fs::path(trace_dir) / "loss.csv").string());
    std::ofstream cfg_os(fs::path(trace_dir) / "config.json", std::ios::trunc);
    cfg_os << trace.config.dump(2) << "\n";
    if (!cfg_os) throw std::runtime_error("cannot write trace config");
    return trace;
}

TrainingTrace read_trace(const std::string& trace_dir) {
    TrainingTrace trace;
    trace.trace_dir = trace_dir;
    trace.loss = read_loss_log((fs::path(trace_dir) / "loss.csv").string());
    trace.loss.run_id = "original_task";

    std::ifstream cfg_is(fs::path(trace_dir) / "config.json");
    if (!cfg_is) throw ParseError("missing trace config: " + trace_dir + "/config.json");
    try {
        cfg_is >> trace.config;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(trace_dir + "/config.json: " + e.what());
    }

    for (size_t m = 1; m <= trace.loss.values.size(); ++m) {
        const fs::path p =
            fs::path(trace_dir) / "checkpoints" / checkpoint_name(static_cast<int>(m));
        if (fs::exists(p)) {
            trace.checkpoint_paths.push_back(p.string());
        } else {
            break;  // contiguity enforced by checkpoint_for_epoch at use
        }
    }
    return trace;
}

Tensor4 extract_feature_maps(const std::string& checkpoint_path, const SyntheticDataset& dataset,
                             const std::vector<int>& indices) {
    OriginalTaskModel model = build_original_task_model(0);
    load_checkpoint_into(model.graph, checkpoint_path);
    const Tensor4 batch = gather_images(dataset.images, indices);
    return forward_range(model.graph, batch, 0, model.backbone_layer_count, nullptr);
}

}  // namespace fmce

// Command-line front end: the full desk-scale pipeline plus each stage as
// a standalone subcommand with file-based inputs and outputs.

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fmce/errors.hpp"
#include "fmce/fmce_net.hpp"
#include "fmce/fmcs_dataset.hpp"
#include "fmce/hash.hpp"
#include "fmce/loss_analysis.hpp"
#include "fmce/original_task.hpp"
#include "fmce/phase_segmentation.hpp"
#include "fmce/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// exit codes: 0 ok, 1 unexpected, 2 parse, 3 not converged, 4 infeasible
// or degenerate segmentation, 10..16 pipeline stage failures
enum PipelineStage : int {
    kStageGenerate = 10,
    kStageTrainOriginal = 11,
    kStageAnalyze = 12,
    kStageDataset = 13,
    kStageTrainFmce = 14,
    kStageEvaluate = 15,
    kStageGradCam = 16,
};

struct AnalyzeOptions {
    double alpha = 0.85;
    std::string mode = "recursive";
    int window = 10;
    double mu = 1e-4;
    int k = 10;
};

void add_analyze_options(CLI::App* cmd, AnalyzeOptions& opt) {
    cmd->add_option("--alpha", opt.alpha, "smoothing parameter in (0, 1]")
        ->capture_default_str();
    cmd->add_option("--mode", opt.mode, "smoothing recurrence: recursive | paper-literal")
        ->check(CLI::IsMember({"recursive", "paper-literal"}))
        ->capture_default_str();
    cmd->add_option("--window", opt.window, "CQI moving-average window B")
        ->capture_default_str();
    cmd->add_option("--mu", opt.mu, "CQI convergence threshold")->capture_default_str();
    cmd->add_option("--k", opt.k, "number of convergence phases")->capture_default_str();
}

fmce::PhasePlan analyze_series(const fmce::LossSeries& series, const AnalyzeOptions& opt,
                               json* report) {
    const fmce::SmoothingConfig smoothing{opt.alpha,
                                          fmce::smoothing_mode_from_string(opt.mode)};
    const fmce::CqiConfig cqi_cfg{opt.window, opt.mu};
    const fmce::PhaseConfig phase_cfg{opt.k};

    const auto smoothed = fmce::smooth(series, smoothing);
    const auto cqi_series = fmce::cqi(smoothed, cqi_cfg);
    fmce::PhasePlan plan = fmce::plan_phases(series, smoothed, cqi_series, phase_cfg);
    if (report) {
        *report = fmce::phase_plan_report(plan, series.run_id, smoothing, cqi_cfg, phase_cfg);
    }
    return plan;
}

void write_json(const json& value, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << value.dump(2) << "\n";
}

void write_loss_csv(const std::vector<double>& values, const std::string& path,
                    int first_epoch = 1, const char* header = "epoch,loss") {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << header << "\n";
    char buf[64];
    for (size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + static_cast<size_t>(first_epoch),
                      values[i]);
        os << buf;
    }
}

void emit_curves(const fmce::LossSeries& series, const AnalyzeOptions& opt,
                 const std::string& dir) {
    fs::create_directories(dir);
    const fmce::SmoothingConfig smoothing{opt.alpha,
                                          fmce::smoothing_mode_from_string(opt.mode)};
    const auto smoothed = fmce::smooth(series, smoothing);
    const auto cqi_series = fmce::cqi(smoothed, {opt.window, opt.mu});
    write_loss_csv(series.values, dir + "/raw.csv", 1, "epoch,value");
    write_loss_csv(smoothed.values, dir + "/smoothed.csv", 1, "epoch,value");
    write_loss_csv(fmce::log_transform(smoothed), dir + "/log_smoothed.csv", 1, "epoch,value");
    write_loss_csv(cqi_series.cqi, dir + "/cqi.csv", 2, "epoch,value");
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::string file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    fmce::Fnv1a64 h;
    char buf[1 << 16];
    while (is.read(buf, sizeof buf) || is.gcount() > 0) {
        h.update(buf, static_cast<size_t>(is.gcount()));
    }
    return hex64(h.value());
}

std::string iso_timestamp() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

int run_analyze(const std::string& loss_path, const AnalyzeOptions& opt,
                const std::string& out_path, const std::string& curves_dir,
                const std::string& run_id) {
    try {
        fmce::LossSeries series = fmce::read_loss_log(loss_path);
        if (!run_id.empty()) series.run_id = run_id;
        json report;
        analyze_series(series, opt, &report);
        if (out_path.empty()) {
            std::cout << report.dump(2) << "\n";
        } else {
            write_json(report, out_path);
        }
        if (!curves_dir.empty()) emit_curves(series, opt, curves_dir);
        return 0;
    } catch (const fmce::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fmce::NotConvergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fmce::SegmentationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

struct PipelineOptions {
    uint64_t seed = 1;
    std::string out_dir;
    int epochs = 60;
    int n_per_class = 500;
    double noise_sigma = 0.1;
    int batch_size = 64;
    float learning_rate = 1e-3f;
    std::string optimizer = "adam";
    AnalyzeOptions analysis{0.85, "recursive", 10, 2e-3, 5};
    int fmce_epochs = 20;
    int fmce_batch = 64;
    float fmce_learning_rate = 1e-3f;
};

json pipeline_config_json(const PipelineOptions& opt) {
    return json{
        {"seed", opt.seed},
        {"k", opt.analysis.k},
        {"epochs", opt.epochs},
        {"n_per_class", opt.n_per_class},
        {"noise_sigma", opt.noise_sigma},
        {"batch_size", opt.batch_size},
        {"learning_rate", opt.learning_rate},
        {"optimizer", opt.optimizer},
        {"alpha", opt.analysis.alpha},
        {"mode", opt.analysis.mode},
        {"window", opt.analysis.window},
        {"mu", opt.analysis.mu},
        {"fmce_epochs", opt.fmce_epochs},
        {"fmce_batch", opt.fmce_batch},
        {"fmce_learning_rate", opt.fmce_learning_rate},
        {"derived_seeds",
         {{"dataset", fmce::derive_seed(opt.seed, 1)},
          {"train", fmce::derive_seed(opt.seed, 2)},
          {"split", fmce::derive_seed(opt.seed, 3)},
          {"fmce", fmce::derive_seed(opt.seed, 4)}}},
    };
}

int run_pipeline(const PipelineOptions& opt) {
    int stage = kStageGenerate;
    try {
        fs::create_directories(opt.out_dir);
        write_json(pipeline_config_json(opt), opt.out_dir + "/config.json");

        std::cerr << "[pipeline] generating dataset\n";
        fmce::DatasetOptions data_options;
        data_options.noise_sigma = opt.noise_sigma;
        const auto dataset = fmce::generate_dataset(fmce::derive_seed(opt.seed, 1),
                                                    opt.n_per_class, data_options);

        stage = kStageTrainOriginal;
        std::cerr << "[pipeline] training original task (" << opt.epochs << " epochs)\n";
        fmce::TrainConfig train_cfg;
        train_cfg.epochs = opt.epochs;
        train_cfg.batch_size = opt.batch_size;
        train_cfg.seed = fmce::derive_seed(opt.seed, 2);
        train_cfg.optimizer.kind = fmce::optimizer_kind_from_string(opt.optimizer);
        train_cfg.optimizer.learning_rate = opt.learning_rate;
        const std::string trace_dir = opt.out_dir + "/trace";
        const auto trace = fmce::train_original(dataset, train_cfg, trace_dir, data_options);

        stage = kStageAnalyze;
        std::cerr << "[pipeline] analyzing loss curve\n";
        json analysis_report;
        const auto plan = analyze_series(trace.loss, opt.analysis, &analysis_report);
        write_json(analysis_report, opt.out_dir + "/analysis.json");

        stage = kStageDataset;
        std::cerr << "[pipeline] building feature-map dataset\n";
        auto score_dataset = fmce::build_fmcs_dataset(trace, plan, dataset);
        const uint64_t split_seed = fmce::derive_seed(opt.seed, 3);
        fmce::split_dataset(score_dataset, split_seed);
        fs::create_directories(opt.out_dir + "/fmcs");
        const std::string dataset_path = opt.out_dir + "/fmcs/dataset.fmcs";
        fmce::save_dataset(score_dataset, dataset_path);
        const std::string digest = fmce::dataset_digest(score_dataset);

        stage = kStageTrainFmce;
        std::cerr << "[pipeline] training score network (" << opt.fmce_epochs << " epochs)\n";
        fmce::TrainConfig fmce_cfg;
        fmce_cfg.epochs = opt.fmce_epochs;
        fmce_cfg.batch_size = opt.fmce_batch;
        fmce_cfg.seed = fmce::derive_seed(opt.seed, 4);
        fmce_cfg.optimizer.learning_rate = opt.fmce_learning_rate;
        auto trained = fmce::train_fmce(score_dataset, fmce_cfg);
        trained.model.split_seed = split_seed;
        const std::string model_dir = opt.out_dir + "/fmce";
        fmce::save_fmce_model(trained.model, model_dir);
        write_loss_csv(trained.loss.values, model_dir + "/loss.csv");

        stage = kStageEvaluate;
        std::cerr << "[pipeline] evaluating\n";
        const auto metrics = fmce::evaluate(trained.model, score_dataset);
        json metrics_report = fmce::metrics_to_json(metrics);
        metrics_report["seed"] = opt.seed;
        metrics_report["dataset_digest"] = digest;
        write_json(metrics_report, opt.out_dir + "/metrics.json");

        stage = kStageGradCam;
        std::cerr << "[pipeline] rendering heatmaps\n";
        fs::create_directories(opt.out_dir + "/gradcam");
        json index = json::array();
        for (int score = 1; score <= score_dataset.k; ++score) {
            int sample = -1;  // first test-split sample carrying this score
            for (int idx : score_dataset.test_indices) {
                if (score_dataset.meta[static_cast<size_t>(idx)].label == score) {
                    sample = idx;
                    break;
                }
            }
            if (sample < 0) continue;
            const auto map = fmce::grad_cam(
                trained.model, score_dataset.sample_features(static_cast<size_t>(sample)),
                score);
            char name[32];
            std::snprintf(name, sizeof name, "score_%02d.pgm", score);
            fmce::write_pgm(map, opt.out_dir + "/gradcam/" + name);
            const auto pred = fmce::predict(trained.model, score_dataset.gather({sample}));
            index.push_back(json{{"file", name},
                                 {"sample_index", sample},
                                 {"label", score},
                                 {"target", score},
                                 {"predicted", pred[0] + 1}});
        }
        write_json(json{{"samples", index}}, opt.out_dir + "/gradcam/index.json");

        const json summary{
            {"seed", opt.seed},
            {"k", score_dataset.k},
            {"paths",
             {{"trace", "trace"},
              {"analysis", "analysis.json"},
              {"dataset", "fmcs/dataset.fmcs"},
              {"model", "fmce"},
              {"metrics", "metrics.json"},
              {"gradcam", "gradcam"}}},
            {"digests",
             {{"dataset", digest},
              {"trace_loss", file_digest(trace_dir + "/loss.csv")},
              {"config", file_digest(trace_dir + "/config.json")}}},
            {"markers", plan.markers},
            {"convergence_epoch", plan.convergence_epoch},
            {"metrics", fmce::metrics_to_json(metrics)},
            {"generated_at", iso_timestamp()},
        };
        write_json(summary, opt.out_dir + "/summary.json");
        std::cout << opt.out_dir + "/summary.json" << "\n";
        return 0;
    } catch (const fmce::NotConvergedError& e) {
        std::cerr << "error: pipeline stage " << stage << " failed: " << e.what() << "\n";
        return stage;
    } catch (const std::exception& e) {
        std::cerr << "error: pipeline stage " << stage << " failed: " << e.what() << "\n";
        return stage;
    }
}

fmce::SyntheticDataset dataset_from_trace(const fmce::TrainingTrace& trace) {
    const auto& ds_cfg = trace.config.at("dataset");
    fmce::DatasetOptions options;
    options.noise_sigma = ds_cfg.at("noise_sigma").get<double>();
    options.randomize = ds_cfg.value("randomize", true);
    return fmce::generate_dataset(ds_cfg.at("seed").get<uint64_t>(),
                                  ds_cfg.at("n_per_class").get<int>(), options);
}

int run_dataset(const std::string& trace_dir, const std::string& plan_path,
                const std::string& out_path, uint64_t split_seed) {
    try {
        const auto trace = fmce::read_trace(trace_dir);
        std::ifstream plan_is(plan_path);
        if (!plan_is) throw fmce::ParseError("cannot open plan: " + plan_path);
        json plan_json;
        plan_is >> plan_json;
        const auto plan = fmce::phase_plan_from_report(plan_json);

        const auto dataset = dataset_from_trace(trace);
        auto score_dataset = fmce::build_fmcs_dataset(trace, plan, dataset);
        fmce::split_dataset(score_dataset, split_seed);
        if (fs::path(out_path).has_parent_path()) {
            fs::create_directories(fs::path(out_path).parent_path());
        }
        fmce::save_dataset(score_dataset, out_path);
        std::cout << fmce::dataset_digest(score_dataset) << "\n";
        return 0;
    } catch (const fmce::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_train_fmce(const std::string& dataset_path, const std::string& out_dir, int epochs,
                   int batch, float lr, uint64_t seed, uint64_t split_seed) {
    try {
        auto dataset = fmce::load_dataset(dataset_path);
        fmce::split_dataset(dataset, split_seed);
        fmce::TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch;
        cfg.seed = seed;
        cfg.optimizer.learning_rate = lr;
        auto result = fmce::train_fmce(dataset, cfg);
        result.model.split_seed = split_seed;
        fmce::save_fmce_model(result.model, out_dir);
        write_loss_csv(result.loss.values, out_dir + "/loss.csv");
        return 0;
    } catch (const fmce::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_eval_fmce(const std::string& model_dir, const std::string& dataset_path,
                  const std::string& out_path) {
    try {
        const auto model = fmce::load_fmce_model(model_dir);
        auto dataset = fmce::load_dataset(dataset_path);
        fmce::split_dataset(dataset, model.split_seed);
        const auto metrics = fmce::evaluate(model, dataset);
        json report = fmce::metrics_to_json(metrics);
        report["seed"] = model.graph.rng_seed;
        report["dataset_digest"] = fmce::dataset_digest(dataset);
        if (out_path.empty()) {
            std::cout << report.dump(2) << "\n";
        } else {
            write_json(report, out_path);
        }
        return 0;
    } catch (const fmce::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_gradcam(const std::string& model_dir, const std::string& dataset_path,
                const std::vector<int>& samples, int target, const std::string& out_dir) {
    try {
        const auto model = fmce::load_fmce_model(model_dir);
        const auto dataset = fmce::load_dataset(dataset_path);
        fs::create_directories(out_dir);
        json index = json::array();
        for (int sample : samples) {
            if (sample < 0 || static_cast<size_t>(sample) >= dataset.sample_count()) {
                throw std::out_of_range("sample index " + std::to_string(sample) +
                                        " outside the dataset");
            }
            const int label = dataset.meta[static_cast<size_t>(sample)].label;
            const int score = target > 0 ? target : label;
            const auto map = fmce::grad_cam(
                model, dataset.sample_features(static_cast<size_t>(sample)), score);
            char name[32];
            std::snprintf(name, sizeof name, "sample_%06d.pgm", sample);
            fmce::write_pgm(map, out_dir + "/" + name);
            index.push_back(json{{"file", name},
                                 {"sample_index", sample},
                                 {"label", label},
                                 {"target", score}});
        }
        write_json(json{{"samples", index}}, out_dir + "/index.json");
        return 0;
    } catch (const fmce::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feature-map convergence evaluation toolkit"};
    app.require_subcommand(1);

    auto* analyze = app.add_subcommand("analyze", "segment a loss log into convergence phases");
    std::string loss_path, out_path, curves_dir, run_id;
    AnalyzeOptions analyze_opt;
    analyze->add_option("--loss", loss_path, "loss log (epoch,loss csv or jsonl)")->required();
    add_analyze_options(analyze, analyze_opt);
    analyze->add_option("--out", out_path, "report destination (stdout if omitted)");
    analyze->add_option("--emit-curves", curves_dir,
                        "also write raw/smoothed/log/cqi series under this directory");
    analyze->add_option("--run-id", run_id, "override the run id (default: file stem)");

    auto* pipeline = app.add_subcommand("pipeline", "run the full desk-scale experiment");
    PipelineOptions pipe;
    pipeline->add_option("--seed", pipe.seed, "master seed")->capture_default_str();
    pipeline->add_option("--out", pipe.out_dir, "run directory")->required();
    pipeline->add_option("--k", pipe.analysis.k, "number of convergence phases")
        ->capture_default_str();
    pipeline->add_option("--epochs", pipe.epochs, "original-task training epochs")
        ->capture_default_str();
    pipeline->add_option("--n-per-class", pipe.n_per_class, "images per class")
        ->capture_default_str();
    pipeline->add_option("--noise", pipe.noise_sigma, "dataset noise sigma")
        ->capture_default_str();
    pipeline->add_option("--batch", pipe.batch_size, "original-task batch size")
        ->capture_default_str();
    pipeline->add_option("--lr", pipe.learning_rate, "original-task learning rate")
        ->capture_default_str();
    pipeline->add_option("--optimizer", pipe.optimizer, "adam | sgd")
        ->check(CLI::IsMember({"adam", "sgd"}))
        ->capture_default_str();
    pipeline->add_option("--alpha", pipe.analysis.alpha, "smoothing parameter")
        ->capture_default_str();
    pipeline->add_option("--mode", pipe.analysis.mode, "smoothing recurrence")
        ->check(CLI::IsMember({"recursive", "paper-literal"}))
        ->capture_default_str();
    pipeline->add_option("--window", pipe.analysis.window, "CQI window")->capture_default_str();
    pipeline->add_option("--mu", pipe.analysis.mu, "CQI convergence threshold")
        ->capture_default_str();
    pipeline->add_option("--fmce-epochs", pipe.fmce_epochs, "score-network epochs")
        ->capture_default_str();
    pipeline->add_option("--fmce-batch", pipe.fmce_batch, "score-network batch size")
        ->capture_default_str();
    pipeline->add_option("--fmce-lr", pipe.fmce_learning_rate, "score-network learning rate")
        ->capture_default_str();

    auto* dataset_cmd = app.add_subcommand("dataset", "build the labeled feature-map dataset");
    std::string trace_dir, plan_path, dataset_out;
    uint64_t split_seed = 1;
    dataset_cmd->add_option("--trace", trace_dir, "training trace directory")->required();
    dataset_cmd->add_option("--plan", plan_path, "analysis report json")->required();
    dataset_cmd->add_option("--out", dataset_out, "output .fmcs path")->required();
    dataset_cmd->add_option("--split-seed", split_seed, "3:1 split seed")->capture_default_str();

    auto* train_cmd = app.add_subcommand("train-fmce", "train the score-prediction network");
    std::string train_dataset, train_out;
    int train_epochs = 20, train_batch = 64;
    float train_lr = 1e-3f;
    uint64_t train_seed = 1, train_split_seed = 1;
    train_cmd->add_option("--dataset", train_dataset, ".fmcs dataset")->required();
    train_cmd->add_option("--out", train_out, "model output directory")->required();
    train_cmd->add_option("--epochs", train_epochs, "training epochs")->capture_default_str();
    train_cmd->add_option("--batch", train_batch, "batch size")->capture_default_str();
    train_cmd->add_option("--lr", train_lr, "learning rate")->capture_default_str();
    train_cmd->add_option("--seed", train_seed, "training seed")->capture_default_str();
    train_cmd->add_option("--split-seed", train_split_seed, "3:1 split seed")
        ->capture_default_str();

    auto* eval_cmd = app.add_subcommand("eval-fmce", "evaluate a trained score network");
    std::string eval_model, eval_dataset, eval_out;
    eval_cmd->add_option("--model", eval_model, "model directory")->required();
    eval_cmd->add_option("--dataset", eval_dataset, ".fmcs dataset")->required();
    eval_cmd->add_option("--out", eval_out, "metrics destination (stdout if omitted)");

    auto* cam_cmd = app.add_subcommand("gradcam", "render class-activation heatmaps");
    std::string cam_model, cam_dataset, cam_out;
    std::vector<int> cam_samples;
    int cam_target = 0;
    cam_cmd->add_option("--model", cam_model, "model directory")->required();
    cam_cmd->add_option("--dataset", cam_dataset, ".fmcs dataset")->required();
    cam_cmd->add_option("--samples", cam_samples, "sample indices")
        ->required()
        ->delimiter(',');
    cam_cmd->add_option("--target", cam_target,
                        "target score (default: each sample's own label)");
    cam_cmd->add_option("--out", cam_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (*analyze) return run_analyze(loss_path, analyze_opt, out_path, curves_dir, run_id);
    if (*pipeline) return run_pipeline(pipe);
    if (*dataset_cmd) return run_dataset(trace_dir, plan_path, dataset_out, split_seed);
    if (*train_cmd) {
        return run_train_fmce(train_dataset, train_out, train_epochs, train_batch, train_lr,
                              train_seed, train_split_seed);
    }
    if (*eval_cmd) return run_eval_fmce(eval_model, eval_dataset, eval_out);
    if (*cam_cmd) return run_gradcam(cam_model, cam_dataset, cam_samples, cam_target, cam_out);
    return 1;
}

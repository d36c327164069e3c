#include "fmce/loss_analysis.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fmce/errors.hpp"

namespace fmce {

void validate_loss_series(const LossSeries& series) {
    if (series.values.size() < 2) {
        throw ParseError("loss series '" + series.run_id + "' has " +
                         std::to_string(series.values.size()) +
                         " epochs; need at least 2");
    }
    for (size_t i = 0; i < series.values.size(); ++i) {
        const double v = series.values[i];
        if (!std::isfinite(v) || v < 0.0) {
            throw ParseError("loss series '" + series.run_id + "': epoch " +
                             std::to_string(i + 1) + " has invalid loss " +
                             std::to_string(v));
        }
    }
}

SmoothedSeries smooth(const LossSeries& series, const SmoothingConfig& cfg) {
    validate_loss_series(series);
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
        throw std::invalid_argument("smoothing alpha must be in (0, 1]");
    }
    const auto& raw = series.values;
    SmoothedSeries out;
    out.values.resize(raw.size());
    out.values[0] = raw[0];
    for (size_t m = 1; m < raw.size(); ++m) {
        const double prev =
            cfg.mode == SmoothingMode::recursive ? out.values[m - 1] : raw[m - 1];
        out.values[m] = cfg.alpha * prev + (1.0 - cfg.alpha) * raw[m];
    }
    return out;
}

std::vector<double> first_difference(const SmoothedSeries& series) {
    if (series.values.size() < 2) {
        throw std::invalid_argument("first_difference needs at least 2 epochs");
    }
    std::vector<double> diffs(series.values.size() - 1);
    for (size_t i = 0; i + 1 < series.values.size(); ++i) {
        diffs[i] = series.values[i + 1] - series.values[i];
    }
    return diffs;
}

CqiSeries cqi(const SmoothedSeries& series, const CqiConfig& cfg) {
    if (cfg.window < 1) throw std::invalid_argument("cqi window must be >= 1");
    if (!(cfg.threshold > 0.0)) throw std::invalid_argument("cqi threshold must be > 0");

    CqiSeries out;
    out.diffs = first_difference(series);
    out.cqi.resize(out.diffs.size());

    // Each window sum is formed afresh in ascending index order rather than
    // by a sliding add/subtract: incremental updates drift in the last ulp
    // and the convergence epoch must not depend on summation tactics.
    for (size_t i = 0; i < out.diffs.size(); ++i) {
        const size_t w = std::min<size_t>(static_cast<size_t>(cfg.window), i + 1);
        double total = 0.0;
        for (size_t j = i + 1 - w; j <= i; ++j) total += std::abs(out.diffs[j]);
        out.cqi[i] = total / static_cast<double>(w);
        if (!out.converged_epoch && out.cqi[i] <= cfg.threshold) {
            out.converged_epoch = static_cast<int>(i) + 2;
        }
    }
    return out;
}

namespace {

LossSeries finish_series(std::vector<std::pair<long, double>> records,
                         const std::string& path, const std::string& run_id) {
    if (records.empty()) throw ParseError(path + ": no loss records");
    LossSeries series;
    series.run_id = run_id;
    series.values.reserve(records.size());
    long expected = 1;
    for (const auto& [epoch, loss] : records) {
        if (epoch != expected) {
            throw ParseError(path + ": epochs must be 1..M contiguous ascending; saw " +
                             std::to_string(epoch) + " where " +
                             std::to_string(expected) + " was expected");
        }
        series.values.push_back(loss);
        ++expected;
    }
    validate_loss_series(series);
    return series;
}

LossSeries read_csv_log(std::ifstream& in, const std::string& path,
                        const std::string& run_id) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    // header line required; tolerate surrounding whitespace
    std::vector<std::pair<long, double>> records;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'epoch,loss'");
        }
        try {
            size_t used = 0;
            const long epoch = std::stol(line.substr(0, comma), &used);
            const double loss = std::stod(line.substr(comma + 1));
            records.emplace_back(epoch, loss);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed record '" +
                             line + "'");
        }
    }
    return finish_series(std::move(records), path, run_id);
}

LossSeries read_jsonl_log(std::ifstream& in, const std::string& path,
                          const std::string& run_id) {
    std::vector<std::pair<long, double>> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!obj.is_object() || !obj.contains("epoch") || !obj.contains("loss") ||
            !obj["epoch"].is_number_integer() || !obj["loss"].is_number()) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected {\"epoch\": int, \"loss\": number}");
        }
        records.emplace_back(obj["epoch"].get<long>(), obj["loss"].get<double>());
    }
    return finish_series(std::move(records), path, run_id);
}

}  // namespace

LossSeries read_loss_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open loss log: " + path);
    const std::string run_id = std::filesystem::path(path).stem().string();

    // JSONL when the first non-space character is '{', CSV otherwise
    const int first = [&] {
        int c;
        while ((c = in.peek()) != EOF && (c == ' ' || c == '\t' || c == '\n' || c == '\r')) {
            in.get();
        }
        return c;
    }();
    if (first == '{') return read_jsonl_log(in, path, run_id);
    return read_csv_log(in, path, run_id);
}

const char* to_string(SmoothingMode mode) {
    return mode == SmoothingMode::recursive ? "recursive" : "paper-literal";
}

SmoothingMode smoothing_mode_from_string(const std::string& name) {
    if (name == "recursive") return SmoothingMode::recursive;
    if (name == "paper-literal" || name == "paper_literal") return SmoothingMode::paper_literal;
    throw std::invalid_argument("unknown smoothing mode: " + name);
}

}  // namespace fmce

#include "fmce/fmcs_dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fmce/binio.hpp"
#include "fmce/errors.hpp"
#include "fmce/hash.hpp"
#include "fmce/rng.hpp"

namespace fs = std::filesystem;

namespace fmce {

Tensor4 FmcsDataset::gather(const std::vector<int>& indices) const {
    Tensor4 out(static_cast<int>(indices.size()), feature_shape.c, feature_shape.h,
                feature_shape.w);
    const size_t vol = static_cast<size_t>(feature_shape.volume());
    for (size_t i = 0; i < indices.size(); ++i) {
        const float* src = &features[static_cast<size_t>(indices[i]) * vol];
        std::copy(src, src + vol, &out.v[i * vol]);
    }
    return out;
}

std::vector<int> FmcsDataset::per_label_counts() const {
    std::vector<int> counts(static_cast<size_t>(k), 0);
    for (const auto& s : meta) {
        if (s.label < 1 || s.label > k) {
            throw std::logic_error("sample label " + std::to_string(s.label) +
                                   " outside [1, " + std::to_string(k) + "]");
        }
        counts[static_cast<size_t>(s.label) - 1]++;
    }
    return counts;
}

FmcsDataset build_fmcs_dataset(const TrainingTrace& trace, const PhasePlan& plan,
                               const SyntheticDataset& dataset) {
    FmcsDataset out;
    out.k = static_cast<int>(plan.markers.size());
    if (out.k < 2) throw std::invalid_argument("phase plan has fewer than 2 markers");

    for (int score = 1; score <= out.k; ++score) {
        const int epoch = plan.markers[static_cast<size_t>(score) - 1];
        if (epoch < 1 || static_cast<size_t>(epoch) > trace.checkpoint_paths.size()) {
            throw std::runtime_error("missing checkpoint for marker epoch " +
                                     std::to_string(epoch) + " (score " +
                                     std::to_string(score) + ")");
        }
        const Tensor4 maps = extract_feature_maps(trace.checkpoint_paths[static_cast<size_t>(epoch) - 1],
                                                  dataset, dataset.train_indices);
        const Shape3 shape{maps.c, maps.h, maps.w};
        if (score == 1) {
            out.feature_shape = shape;
            out.features.reserve(static_cast<size_t>(out.k) * maps.size());
            out.meta.reserve(static_cast<size_t>(out.k) * static_cast<size_t>(maps.n));
        } else if (shape != out.feature_shape) {
            throw std::runtime_error("feature shape drift at marker epoch " +
                                     std::to_string(epoch) + ": " + shape.str() + " vs " +
                                     out.feature_shape.str());
        }
        for (int i = 0; i < maps.n; ++i) {
            out.meta.push_back(FmcsSample{
                static_cast<uint8_t>(score),
                static_cast<uint32_t>(dataset.train_indices[static_cast<size_t>(i)]),
                static_cast<uint32_t>(epoch)});
        }
        out.features.insert(out.features.end(), maps.v.begin(), maps.v.end());
    }

    Fnv1a64 config_hash;
    const std::string config_bytes = trace.config.dump();
    config_hash.update(config_bytes.data(), config_bytes.size());

    out.provenance = nlohmann::json{
        {"plan",
         {{"baseline_epoch", plan.baseline_epoch},
          {"convergence_epoch", plan.convergence_epoch},
          {"markers", plan.markers},
          {"total_drop", plan.total_drop},
          {"per_phase_drop", plan.per_phase_drop}}},
        {"config_digest", config_hash.hex()},
        {"samples_per_score", dataset.train_indices.size()},
    };
    return out;
}

void split_dataset(FmcsDataset& dataset, uint64_t seed) {
    dataset.train_indices.clear();
    dataset.test_indices.clear();
    Xoshiro256pp rng(seed);
    for (int score = 1; score <= dataset.k; ++score) {
        std::vector<int> members;
        for (size_t i = 0; i < dataset.meta.size(); ++i) {
            if (dataset.meta[i].label == score) members.push_back(static_cast<int>(i));
        }
        if (members.size() < 4) {
            throw std::invalid_argument("label " + std::to_string(score) + " has only " +
                                        std::to_string(members.size()) +
                                        " samples; need at least 4 for a 3:1 split");
        }
        rng.shuffle(members);
        const size_t n_test = members.size() / 4;  // remainder stays in train
        for (size_t i = 0; i < members.size(); ++i) {
            (i < n_test ? dataset.test_indices : dataset.train_indices).push_back(members[i]);
        }
    }
    std::sort(dataset.train_indices.begin(), dataset.train_indices.end());
    std::sort(dataset.test_indices.begin(), dataset.test_indices.end());
}

namespace {

std::string serialize_payload(const FmcsDataset& dataset) {
    if (dataset.meta.empty()) {
        throw std::invalid_argument("refusing to save an empty dataset");
    }
    const size_t vol = static_cast<size_t>(dataset.feature_shape.volume());
    if (dataset.features.size() != dataset.meta.size() * vol) {
        throw std::logic_error("dataset feature buffer size mismatch");
    }
    std::ostringstream os(std::ios::binary);
    os.write("FMCS", 4);
    put_u32(os, kFmcsVersion);
    put_u32(os, static_cast<uint32_t>(dataset.k));
    put_u64(os, dataset.meta.size());
    put_u32(os, static_cast<uint32_t>(dataset.feature_shape.c));
    put_u32(os, static_cast<uint32_t>(dataset.feature_shape.h));
    put_u32(os, static_cast<uint32_t>(dataset.feature_shape.w));
    for (size_t i = 0; i < dataset.meta.size(); ++i) {
        const FmcsSample& s = dataset.meta[i];
        put_u8(os, s.label);
        put_u32(os, s.source_index);
        put_u32(os, s.marker_epoch);
        const float* row = &dataset.features[i * vol];
        for (size_t j = 0; j < vol; ++j) put_f32(os, row[j]);
    }
    return std::move(os).str();
}

}  // namespace

void save_dataset(const FmcsDataset& dataset, const std::string& path) {
    const std::string payload = serialize_payload(dataset);
    const uint64_t checksum = fnv1a64(payload.data(), payload.size());

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write dataset: " + path);
    os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    put_u64(os, checksum);
    if (!os) throw std::runtime_error("short write on dataset: " + path);

    std::ofstream manifest(fs::path(path).parent_path() / "manifest.json", std::ios::trunc);
    if (!manifest) throw std::runtime_error("cannot write dataset manifest next to " + path);
    manifest << dataset_manifest(dataset).dump(2) << "\n";
}

FmcsDataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open dataset: " + path);
    std::ostringstream buffer(std::ios::binary);
    buffer << is.rdbuf();
    const std::string bytes = std::move(buffer).str();
    if (bytes.size() < 31 + 8) throw ParseError(path + ": truncated dataset file");

    if (bytes.compare(0, 4, "FMCS") != 0) throw ParseError(path + ": bad dataset magic");

    std::istringstream in(bytes.substr(4, bytes.size() - 4 - 8), std::ios::binary);
    const uint32_t version = get_u32(in);
    if (version != kFmcsVersion) {
        throw ParseError(path + ": unsupported dataset version " + std::to_string(version));
    }

    FmcsDataset out;
    out.k = static_cast<int>(get_u32(in));
    const uint64_t count = get_u64(in);
    out.feature_shape.c = static_cast<int>(get_u32(in));
    out.feature_shape.h = static_cast<int>(get_u32(in));
    out.feature_shape.w = static_cast<int>(get_u32(in));
    if (out.k < 1 || count == 0 || out.feature_shape.volume() < 1) {
        throw ParseError(path + ": invalid dataset header");
    }

    const size_t vol = static_cast<size_t>(out.feature_shape.volume());
    const size_t record = 1 + 4 + 4 + vol * 4;
    const size_t want = 4 + 4 + 4 + 8 + 12 + count * record + 8;
    if (bytes.size() != want) {
        throw ParseError(path + ": file size " + std::to_string(bytes.size()) +
                         " does not match header (expected " + std::to_string(want) + ")");
    }

    // checksum covers everything before the trailing u64
    const uint64_t stored = [&] {
        std::istringstream tail(bytes.substr(bytes.size() - 8), std::ios::binary);
        return get_u64(tail);
    }();
    const uint64_t computed = fnv1a64(bytes.data(), bytes.size() - 8);
    if (stored != computed) {
        throw ParseError(path + ": checksum mismatch (corrupt payload)");
    }

    out.meta.resize(count);
    out.features.resize(count * vol);
    for (size_t i = 0; i < count; ++i) {
        out.meta[i].label = get_u8(in);
        out.meta[i].source_index = get_u32(in);
        out.meta[i].marker_epoch = get_u32(in);
        if (out.meta[i].label < 1 || out.meta[i].label > out.k) {
            throw ParseError(path + ": sample " + std::to_string(i) + " has label " +
                             std::to_string(out.meta[i].label) + " outside [1, " +
                             std::to_string(out.k) + "]");
        }
        float* row = &out.features[i * vol];
        for (size_t j = 0; j < vol; ++j) row[j] = get_f32(in);
    }

    const fs::path manifest_path = fs::path(path).parent_path() / "manifest.json";
    if (fs::exists(manifest_path)) {
        std::ifstream ms(manifest_path);
        nlohmann::json manifest;
        ms >> manifest;
        if (manifest.contains("provenance")) out.provenance = manifest["provenance"];
    }
    return out;
}

std::string dataset_digest(const FmcsDataset& dataset) {
    const std::string payload = serialize_payload(dataset);
    Fnv1a64 h;
    h.update(payload.data(), payload.size());
    return h.hex();
}

nlohmann::json dataset_manifest(const FmcsDataset& dataset) {
    return nlohmann::json{
        {"k", dataset.k},
        {"feature_shape",
         {dataset.feature_shape.c, dataset.feature_shape.h, dataset.feature_shape.w}},
        {"sample_count", dataset.meta.size()},
        {"per_label_counts", dataset.per_label_counts()},
        {"content_hash", dataset_digest(dataset)},
        {"provenance", dataset.provenance},
    };
}

}  // namespace fmce

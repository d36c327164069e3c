#include "fmce/checkpoint.hpp"

#include <fstream>

#include "fmce/binio.hpp"
#include "fmce/errors.hpp"

namespace fmce {

namespace {

void put_tensor(std::ostream& os, const Tensor4& t) {
    put_u32(os, static_cast<uint32_t>(t.n));
    put_u32(os, static_cast<uint32_t>(t.c));
    put_u32(os, static_cast<uint32_t>(t.h));
    put_u32(os, static_cast<uint32_t>(t.w));
    for (float x : t.v) put_f32(os, x);
}

void get_tensor_into(std::istream& is, Tensor4& t, const std::string& path, size_t layer) {
    const uint32_t n = get_u32(is), c = get_u32(is), h = get_u32(is), w = get_u32(is);
    if (static_cast<int>(n) != t.n || static_cast<int>(c) != t.c ||
        static_cast<int>(h) != t.h || static_cast<int>(w) != t.w) {
        throw ParseError(path + ": layer " + std::to_string(layer) +
                         " parameter shape mismatch: file has (" + std::to_string(n) + ", " +
                         std::to_string(c) + ", " + std::to_string(h) + ", " +
                         std::to_string(w) + "), model wants " + t.shape_str());
    }
    for (float& x : t.v) x = get_f32(is);
}

}  // namespace

void save_checkpoint(const ModelGraph& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    os.write("FMCK", 4);
    put_u32(os, kCheckpointVersion);
    put_u32(os, static_cast<uint32_t>(model.layers.size()));
    for (const auto& layer : model.layers) {
        put_u8(os, static_cast<uint8_t>(layer.spec.kind));
        put_u8(os, layer.spec.has_params() ? 1 : 0);
        if (layer.spec.has_params()) {
            put_tensor(os, layer.weight);
            put_tensor(os, layer.bias);
        }
    }
    if (!os) throw std::runtime_error("short write on checkpoint: " + path);
}

void load_checkpoint_into(ModelGraph& model, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open checkpoint: " + path);

    char magic[4];
    if (!is.read(magic, 4) || std::string(magic, 4) != "FMCK") {
        throw ParseError(path + ": bad checkpoint magic");
    }
    const uint32_t version = get_u32(is);
    if (version != kCheckpointVersion) {
        throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    const uint32_t count = get_u32(is);
    if (count != model.layers.size()) {
        throw ParseError(path + ": file has " + std::to_string(count) + " layers, model has " +
                         std::to_string(model.layers.size()));
    }
    for (size_t i = 0; i < model.layers.size(); ++i) {
        Layer& layer = model.layers[i];
        const uint8_t kind = get_u8(is);
        if (kind != static_cast<uint8_t>(layer.spec.kind)) {
            throw ParseError(path + ": layer " + std::to_string(i) + " kind mismatch: file " +
                             std::to_string(kind) + ", model " + to_string(layer.spec.kind));
        }
        const uint8_t has_params = get_u8(is);
        if ((has_params != 0) != layer.spec.has_params()) {
            throw ParseError(path + ": layer " + std::to_string(i) + " parameter flag mismatch");
        }
        if (has_params) {
            get_tensor_into(is, layer.weight, path, i);
            get_tensor_into(is, layer.bias, path, i);
        }
    }
}

}  // namespace fmce

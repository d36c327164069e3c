#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmce {

// Dense (count, channels, height, width) tensor, row-major by (n, c, h, w),
// 32-bit floats.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor4() = default;

    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0f) {
        if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0) {
            throw std::invalid_argument("negative tensor dimension");
        }
    }

    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }

    size_t index(int i, int j, int y, int x) const {
        return ((static_cast<size_t>(i) * c + j) * h + y) * w + x;
    }

    float& at(int i, int j, int y, int x) { return v[index(i, j, y, x)]; }
    float at(int i, int j, int y, int x) const { return v[index(i, j, y, x)]; }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::array<int, 4> shape() const { return {n, c, h, w}; }

    std::string shape_str() const {
        return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
               std::to_string(h) + ", " + std::to_string(w) + ")";
    }

    static Tensor4 zeros_like(const Tensor4& o) { return Tensor4(o.n, o.c, o.h, o.w); }

    bool all_finite() const {
        for (float x : v) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }
};

// (channels, height, width) of a single sample; the batch axis is added
// where tensors are formed.
struct Shape3 {
    int c = 0, h = 0, w = 0;

    bool operator==(const Shape3&) const = default;

    int volume() const { return c * h * w; }

    std::string str() const {
        return "(" + std::to_string(c) + ", " + std::to_string(h) + ", " +
               std::to_string(w) + ")";
    }
};

}  // namespace fmce

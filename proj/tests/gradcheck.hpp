#pragma once

// Central finite-difference gradient checker for layer graphs. The
// objective is J = sum(c .* out) with fixed random coefficients, so
// dJ/d(out) = c is an exact upstream gradient and every analytic
// derivative can be compared coordinate-by-coordinate against
// (J(x+h) - J(x-h)) / 2h. J is accumulated in double on top of the
// engine's 32-bit forward.
//
// relu and maxpool are piecewise linear; a finite difference that
// straddles a kink measures the wrong slope. Each evaluation therefore
// records the active linear region (relu sign pattern + pool argmaxes)
// and coordinates whose two probes land in different regions are skipped.

#include <cmath>
#include <cstdint>
#include <vector>

#include "fmce/nn.hpp"
#include "fmce/rng.hpp"

namespace gradcheck {

inline double objective(const fmce::Tensor4& out, const fmce::Tensor4& coeff) {
    double j = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        j += static_cast<double>(out.v[i]) * static_cast<double>(coeff.v[i]);
    }
    return j;
}

inline double relative_error(double analytic, double numeric) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) / scale;
}

inline std::vector<uint32_t> piecewise_signature(const fmce::ModelGraph& model,
                                                 const fmce::ActivationCache& cache) {
    std::vector<uint32_t> sig;
    const size_t first = static_cast<size_t>(cache.first_layer);
    for (size_t i = first; i < first + cache.acts.size() - 1; ++i) {
        const auto kind = model.layers[i].spec.kind;
        if (kind == fmce::LayerKind::relu) {
            const fmce::Tensor4& in = cache.acts[i - first];
            uint32_t word = 0;
            int bits = 0;
            for (float x : in.v) {
                word = (word << 1) | (x > 0.0f ? 1u : 0u);
                if (++bits == 32) {
                    sig.push_back(word);
                    word = 0;
                    bits = 0;
                }
            }
            if (bits > 0) sig.push_back(word);
        } else if (kind == fmce::LayerKind::maxpool2x2) {
            sig.insert(sig.end(), cache.pool_argmax[i].begin(), cache.pool_argmax[i].end());
        }
    }
    return sig;
}

// picks every coordinate of small tensors, a random subset of large ones
inline std::vector<size_t> sample_coords(size_t count, fmce::Xoshiro256pp& rng,
                                         size_t cap = 16) {
    std::vector<size_t> coords;
    if (count <= 4 * cap) {
        for (size_t i = 0; i < count; ++i) coords.push_back(i);
    } else {
        for (size_t i = 0; i < cap; ++i) coords.push_back(rng.next_below(count));
    }
    return coords;
}

struct CheckStats {
    double worst = 0.0;
    int checked = 0;
    int skipped = 0;
};

// Checks dJ/d(tensor[coord]). `tensor` must feed the forward pass: either
// `input` itself or parameter storage inside `model`.
inline void check_coords(const fmce::ModelGraph& model, const fmce::Tensor4& input,
                         fmce::Tensor4& tensor, const std::vector<size_t>& coords,
                         const fmce::Tensor4& analytic_grad, const fmce::Tensor4& coeff,
                         CheckStats& stats, float step = 1e-2f) {
    const auto probe = [&](std::vector<uint32_t>& sig) {
        fmce::ActivationCache cache;
        const fmce::Tensor4 out = fmce::forward(model, input, &cache);
        sig = piecewise_signature(model, cache);
        return objective(out, coeff);
    };

    for (size_t coord : coords) {
        const float original = tensor.v[coord];
        std::vector<uint32_t> sig_plus, sig_minus;

        tensor.v[coord] = original + step;
        const double j_plus = probe(sig_plus);
        tensor.v[coord] = original - step;
        const double j_minus = probe(sig_minus);
        tensor.v[coord] = original;

        if (sig_plus != sig_minus) {
            stats.skipped++;  // probes fell in different linear regions
            continue;
        }
        const double numeric = (j_plus - j_minus) / (2.0 * static_cast<double>(step));
        const double analytic = static_cast<double>(analytic_grad.v[coord]);
        stats.worst = std::max(stats.worst, relative_error(analytic, numeric));
        stats.checked++;
    }
}

inline fmce::Tensor4 random_tensor(int n, int c, int h, int w, fmce::Xoshiro256pp& rng,
                                   float lo = -1.0f, float hi = 1.0f) {
    fmce::Tensor4 t(n, c, h, w);
    for (float& x : t.v) x = rng.uniform_float(lo, hi);
    return t;
}

}  // namespace gradcheck

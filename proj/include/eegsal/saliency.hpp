#ifndef EEGSAL_SALIENCY_HPP
#define EEGSAL_SALIENCY_HPP

#include "eegsal/tensor.hpp"

namespace eegsal {

enum class SalNorm { raw, max1, sum1 };

// Non-negative 2-D attention map. Doubles as the spatial conditioning signal
// and as an evaluation target.
struct SaliencyMap {
    Tensor data;  // [H, W]
    SalNorm norm = SalNorm::raw;

    int height() const { return data.shape[0]; }
    int width() const { return data.shape[1]; }
};

SaliencyMap normalize(const SaliencyMap& map, SalNorm mode);

// Bottom-up fallback predictor (spectral residual of the log-amplitude
// spectrum). Input image is [3,H,W] in [0,1]; output is max1-normalized,
// or raw all-zero for featureless images.
SaliencyMap spectral_residual(const Tensor& image);

SaliencyMap resize_map(const SaliencyMap& map, int new_h, int new_w);

// sum1 epsilon; also used by the KL metric so numbers stay bit-reproducible
inline constexpr double kSalEps = 1e-7;

}  // namespace eegsal

#endif

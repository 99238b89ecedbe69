#ifndef EEGSAL_IMAGE_IO_HPP
#define EEGSAL_IMAGE_IO_HPP

#include <string>

#include "eegsal/saliency.hpp"
#include "eegsal/tensor.hpp"

namespace eegsal {

// 8-bit PNG, value/255 scaling. Color tensors are [3,H,W] in [0,1].
void save_image_png(const std::string& path, const Tensor& image);
Tensor load_image_png(const std::string& path);

void save_gray_png(const std::string& path, const Tensor& map);  // [H,W] in [0,1]
Tensor load_gray_png(const std::string& path);

// Round a value in [0,1] onto the 8-bit grid used by the PNG codec.
inline double quant8(double x) {
    double c = std::min(1.0, std::max(0.0, x));
    return std::round(c * 255.0) / 255.0;
}

// Bilinear resize of a [3,H,W] image.
Tensor resize_image(const Tensor& image, int new_h, int new_w);

}  // namespace eegsal

#endif

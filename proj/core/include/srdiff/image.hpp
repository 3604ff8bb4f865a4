#pragma once

#include <string>

#include "srdiff/tensor.hpp"

namespace srdiff {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 3-channel CHW float image with values in [0, 1].
struct ImagePlane {
    int height = 0, width = 0;
    std::vector<float> data;  // 3 * height * width, CHW

    ImagePlane() = default;
    ImagePlane(int h, int w) : height(h), width(w), data(static_cast<size_t>(3) * h * w, 0.0f) {}

    float& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }

    Tensor to_tensor() const { return Tensor({3, height, width}, {data.begin(), data.end()}); }
    static ImagePlane from_tensor(const Tensor& t);

    void clamp01();
};

/// 8-bit RGB PNG load; values scaled to [0,1].
ImagePlane load_png(const std::string& path);

/// 8-bit RGB PNG save; values clamped to [0,1] and rounded half away from
/// zero.
void save_png(const ImagePlane& img, const std::string& path);

/// Keys bicubic (a = -0.5) resampling with the MATLAB convention: the kernel
/// is widened by the inverse scale factor when downscaling with antialias on;
/// source coordinates are clamped at the edges; output is clamped to [0,1].
ImagePlane bicubic_resize(const ImagePlane& img, int out_h, int out_w, bool antialias);

/// up(x_L): bicubic upsample without antialiasing, the one upsampling
/// operator shared by the trainer, sampler and metrics.
ImagePlane upsample_lr(const ImagePlane& x_l, int scale);

/// x_r = x_H - up(x_L), as a (3,H,W) tensor in [-1, 1].
Tensor residual(const ImagePlane& x_h, const ImagePlane& x_l, int scale);

}  // namespace srdiff

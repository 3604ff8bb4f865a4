#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srdiff/image.hpp"

namespace srdiff {

/// 10*log10(1/MSE) on [0,1]-scaled RGB over all channels and pixels;
/// +infinity for identical images.
double psnr(const ImagePlane& a, const ImagePlane& b);

/// Mean local SSIM, 11x11 Gaussian window sigma 1.5, C1=(0.01)^2,
/// C2=(0.03)^2 on the [0,1] range, computed per channel and averaged.
/// Requires dims >= 11.
double ssim(const ImagePlane& a, const ImagePlane& b);

/// PSNR between the antialias-downsampled SR image and the LR input.
double lr_psnr(const ImagePlane& sr, const ImagePlane& x_l, int scale);

/// Mean per-pixel, per-channel population standard deviation across samples,
/// on the 0-255 scale. Requires at least two samples.
double pixel_sigma(const std::vector<ImagePlane>& samples);

struct ImageMetrics {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
    std::optional<double> lr_psnr;
};

struct MetricsReport {
    std::vector<ImageMetrics> per_image;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    std::optional<double> mean_lr_psnr;
    std::optional<double> sigma;  // only meaningful for multi-sample runs
    int count = 0;
    int scale = 0;

    std::string to_tsv() const;
    std::string to_json() const;
};

}  // namespace srdiff

#pragma once

// Shared test utilities: the central-difference gradient oracle (double
// precision re-evaluation of the recorded graph) and small data generators.

#include <algorithm>
#include <cmath>
#include <vector>

#include "srdiff/autograd.hpp"
#include "srdiff/image.hpp"

namespace testutil {

using srdiff::ImagePlane;
using srdiff::Parameter;
using srdiff::Tensor;

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

/// Backprops through `loss` and compares each parameter's gradient against a
/// central finite difference of the graph re-evaluated in double precision.
/// Checks up to max_checks spread-out indices per parameter; returns the
/// worst relative error seen.
inline double fd_worst_error(const srdiff::ag::Value& loss, std::vector<Parameter*> params,
                             int max_checks = 6, double h = 1e-3) {
    for (Parameter* p : params) p->zero_grad();
    srdiff::ag::backward(loss);

    double worst = 0.0;
    for (Parameter* p : params) {
        std::vector<double> base(p->value.data.begin(), p->value.data.end());
        const int64_t n = static_cast<int64_t>(base.size());
        const int64_t stride = std::max<int64_t>(1, n / max_checks);
        for (int64_t i = 0; i < n; i += stride) {
            std::vector<double> plus = base, minus = base;
            plus[static_cast<size_t>(i)] += h;
            minus[static_cast<size_t>(i)] -= h;
            srdiff::ag::F64Overrides ov;
            ov[p] = &plus;
            const double f_plus = srdiff::ag::eval_scalar_f64(loss, ov);
            ov[p] = &minus;
            const double f_minus = srdiff::ag::eval_scalar_f64(loss, ov);
            const double g_fd = (f_plus - f_minus) / (2.0 * h);
            const double g_bp = static_cast<double>(p->grad.data[static_cast<size_t>(i)]);
            worst = std::max(worst, rel_err(g_fd, g_bp));
        }
    }
    return worst;
}

/// Smooth, colorful synthetic image: learnable by a small model yet far from
/// constant, so PSNR comparisons are meaningful.
inline ImagePlane make_test_image(int h, int w, double phase = 0.0) {
    ImagePlane img(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double fy = static_cast<double>(y) / h, fx = static_cast<double>(x) / w;
            img.at(0, y, x) =
                static_cast<float>(0.5 + 0.45 * std::sin(6.0 * fx + 2.0 * fy + phase));
            img.at(1, y, x) =
                static_cast<float>(0.5 + 0.45 * std::cos(4.0 * fy - 3.0 * fx + phase));
            img.at(2, y, x) = static_cast<float>(0.5 + 0.4 * std::sin(8.0 * fx * fy + phase));
        }
    img.clamp01();
    return img;
}

}  // namespace testutil

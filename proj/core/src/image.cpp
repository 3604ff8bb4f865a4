#include "srdiff/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace srdiff {

ImagePlane ImagePlane::from_tensor(const Tensor& t) {
    if (t.ndim() != 3 || t.shape[0] != 3)
        throw ShapeError("ImagePlane: expected (3,H,W) tensor, got " + shape_str(t.shape));
    ImagePlane img(t.shape[1], t.shape[2]);
    std::copy(t.data.begin(), t.data.end(), img.data.begin());
    return img;
}

void ImagePlane::clamp01() {
    for (auto& v : data) v = std::clamp(v, 0.0f, 1.0f);
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImagePlane load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open PNG file '" + path + "'");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize everything to 8-bit RGB.
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
        png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
    ImagePlane img(h, w);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) = row[static_cast<size_t>(x) * 3 + c] / 255.0f;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    img.clamp01();
    return img;
}

void save_png(const ImagePlane& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write PNG file '" + path + "'");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(img.at(c, y, x), 0.0f, 1.0f);
                row[static_cast<size_t>(x) * 3 + c] =
                    static_cast<uint8_t>(std::floor(v * 255.0f + 0.5f));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

namespace {

// Keys cubic kernel, a = -0.5.
double cubic(double x) {
    x = std::fabs(x);
    if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
    if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
    return 0.0;
}

struct ResampleTap {
    int first;                    // first (clamped) source index
    std::vector<double> weights;  // normalized
};

std::vector<ResampleTap> plan_1d(int in, int out, bool antialias, std::vector<int>& idx) {
    const double step = static_cast<double>(in) / out;
    const double kscale = (antialias && out < in) ? static_cast<double>(out) / in : 1.0;
    const double half = 2.0 / kscale;
    std::vector<ResampleTap> taps(static_cast<size_t>(out));
    idx.clear();
    for (int j = 0; j < out; ++j) {
        const double u = (j + 0.5) * step - 0.5;
        const int lo = static_cast<int>(std::floor(u - half)) + 1;
        const int hi = static_cast<int>(std::floor(u + half));
        auto& tap = taps[static_cast<size_t>(j)];
        tap.first = static_cast<int>(idx.size());
        double wsum = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double w = cubic((u - i) * kscale);
            if (w == 0.0) continue;
            idx.push_back(std::clamp(i, 0, in - 1));
            tap.weights.push_back(w);
            wsum += w;
        }
        for (auto& w : tap.weights) w /= wsum;
    }
    return taps;
}

}  // namespace

ImagePlane bicubic_resize(const ImagePlane& img, int out_h, int out_w, bool antialias) {
    if (out_h < 1 || out_w < 1) throw ShapeError("bicubic_resize: output dims must be >= 1");

    std::vector<int> xidx, yidx;
    const auto xt = plan_1d(img.width, out_w, antialias, xidx);
    const auto yt = plan_1d(img.height, out_h, antialias, yidx);

    // Horizontal pass (double accumulation), then vertical.
    std::vector<double> mid(static_cast<size_t>(3) * img.height * out_w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < out_w; ++x) {
                const auto& tap = xt[static_cast<size_t>(x)];
                double acc = 0.0;
                for (size_t k = 0; k < tap.weights.size(); ++k)
                    acc += tap.weights[k] * img.at(c, y, xidx[tap.first + k]);
                mid[(static_cast<size_t>(c) * img.height + y) * out_w + x] = acc;
            }

    ImagePlane out(out_h, out_w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < out_h; ++y) {
            const auto& tap = yt[static_cast<size_t>(y)];
            for (int x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (size_t k = 0; k < tap.weights.size(); ++k)
                    acc += tap.weights[k] *
                           mid[(static_cast<size_t>(c) * img.height + yidx[tap.first + k]) *
                                   out_w +
                               x];
                out.at(c, y, x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
            }
        }
    return out;
}

ImagePlane upsample_lr(const ImagePlane& x_l, int scale) {
    return bicubic_resize(x_l, x_l.height * scale, x_l.width * scale, /*antialias=*/false);
}

Tensor residual(const ImagePlane& x_h, const ImagePlane& x_l, int scale) {
    if (x_h.height != x_l.height * scale || x_h.width != x_l.width * scale)
        throw ShapeError("residual: HR " + std::to_string(x_h.height) + "x" +
                         std::to_string(x_h.width) + " is not " + std::to_string(scale) +
                         "x the LR " + std::to_string(x_l.height) + "x" +
                         std::to_string(x_l.width));
    const ImagePlane up = upsample_lr(x_l, scale);
    Tensor r({3, x_h.height, x_h.width});
    for (size_t i = 0; i < x_h.data.size(); ++i) r[static_cast<int64_t>(i)] = x_h.data[i] - up.data[i];
    return r;
}

}  // namespace srdiff

#include "srdiff/metrics.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace srdiff {

namespace {

void check_dims(const ImagePlane& a, const ImagePlane& b, const char* what) {
    if (a.height != b.height || a.width != b.width)
        throw ShapeError(std::string(what) + ": image dims " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                         std::to_string(b.width));
}

std::string fmt_db(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

double psnr(const ImagePlane& a, const ImagePlane& b) {
    check_dims(a, b, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImagePlane& a, const ImagePlane& b) {
    check_dims(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    if (a.height < kWin || a.width < kWin)
        throw ShapeError("ssim: images must be at least 11x11");

    double win[kWin][kWin];
    double wsum = 0.0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            const double dy = i - kWin / 2, dx = j - kWin / 2;
            win[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
            wsum += win[i][j];
        }
    for (auto& row : win)
        for (auto& w : row) w /= wsum;

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        int64_t count = 0;
        for (int y = 0; y + kWin <= a.height; ++y)
            for (int x = 0; x + kWin <= a.width; ++x) {
                double ma = 0.0, mb = 0.0, va = 0.0, vb = 0.0, cov = 0.0;
                for (int i = 0; i < kWin; ++i)
                    for (int j = 0; j < kWin; ++j) {
                        const double pa = a.at(c, y + i, x + j);
                        const double pb = b.at(c, y + i, x + j);
                        const double w = win[i][j];
                        ma += w * pa;
                        mb += w * pb;
                        va += w * pa * pa;
                        vb += w * pb * pb;
                        cov += w * pa * pb;
                    }
                va -= ma * ma;
                vb -= mb * mb;
                cov -= ma * mb;
                const double num = (2.0 * ma * mb + kC1) * (2.0 * cov + kC2);
                const double den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
                acc += num / den;
                ++count;
            }
        total += acc / static_cast<double>(count);
    }
    return total / 3.0;
}

double lr_psnr(const ImagePlane& sr, const ImagePlane& x_l, int scale) {
    if (sr.height != x_l.height * scale || sr.width != x_l.width * scale)
        throw ShapeError("lr_psnr: SR dims are not scale x LR dims");
    const ImagePlane down = bicubic_resize(sr, x_l.height, x_l.width, /*antialias=*/true);
    return psnr(down, x_l);
}

double pixel_sigma(const std::vector<ImagePlane>& samples) {
    if (samples.size() < 2) throw std::runtime_error("pixel_sigma: need at least 2 samples");
    for (const auto& s : samples) check_dims(samples[0], s, "pixel_sigma");
    const size_t npix = samples[0].data.size();
    const double n = static_cast<double>(samples.size());
    double acc = 0.0;
    for (size_t i = 0; i < npix; ++i) {
        double m = 0.0, m2 = 0.0;
        for (const auto& s : samples) {
            const double v = s.data[i] * 255.0;
            m += v;
            m2 += v * v;
        }
        m /= n;
        acc += std::sqrt(std::max(0.0, m2 / n - m * m));
    }
    return acc / static_cast<double>(npix);
}

std::string MetricsReport::to_tsv() const {
    std::string out = "name\tpsnr\tssim";
    if (mean_lr_psnr) out += "\tlr_psnr";
    out += '\n';
    for (const auto& m : per_image) {
        out += m.name + '\t' + fmt_db(m.psnr) + '\t' + fmt_db(m.ssim);
        if (mean_lr_psnr) out += '\t' + fmt_db(m.lr_psnr.value_or(0.0));
        out += '\n';
    }
    out += "mean\t" + fmt_db(mean_psnr) + '\t' + fmt_db(mean_ssim);
    if (mean_lr_psnr) out += '\t' + fmt_db(*mean_lr_psnr);
    out += '\n';
    return out;
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    auto num_or_inf = [](double v) -> nlohmann::ordered_json {
        if (std::isinf(v)) return "inf";
        return v;
    };
    j["count"] = count;
    j["scale"] = scale;
    j["mean_psnr"] = num_or_inf(mean_psnr);
    j["mean_ssim"] = mean_ssim;
    if (mean_lr_psnr) j["mean_lr_psnr"] = num_or_inf(*mean_lr_psnr);
    if (sigma) j["sigma"] = *sigma;
    auto& arr = j["per_image"] = nlohmann::ordered_json::array();
    for (const auto& m : per_image) {
        nlohmann::ordered_json e;
        e["name"] = m.name;
        e["psnr"] = num_or_inf(m.psnr);
        e["ssim"] = m.ssim;
        if (m.lr_psnr) e["lr_psnr"] = num_or_inf(*m.lr_psnr);
        arr.push_back(std::move(e));
    }
    return j.dump(2);
}

}  // namespace srdiff

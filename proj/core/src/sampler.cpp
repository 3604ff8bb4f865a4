#include "srdiff/sampler.hpp"

#include <cmath>

#include "srdiff/metrics.hpp"

namespace srdiff {

namespace {

void check_hr_dims(int h, int w) {
    if (h % 16 != 0 || w % 16 != 0)
        throw ShapeError("sampler: HR dimensions " + std::to_string(h) + "x" + std::to_string(w) +
                         " must be divisible by 16");
}

void check_region(const Region& r, int h, int w) {
    if (r.height <= 0 || r.width <= 0 || r.top < 0 || r.left < 0 || r.top + r.height > h ||
        r.left + r.width > w)
        throw ShapeError("sampler: region outside the " + std::to_string(h) + "x" +
                         std::to_string(w) + " image");
}

ImagePlane paste(const ImagePlane& base, const ImagePlane& patch_src, const Region& r) {
    ImagePlane out = base;
    for (int c = 0; c < 3; ++c)
        for (int y = r.top; y < r.top + r.height; ++y)
            for (int x = r.left; x < r.left + r.width; ++x)
                out.at(c, y, x) = patch_src.at(c, y, x);
    return out;
}

/// clamp(x0 [+ up(x_L)]) depending on the model's residual flag.
ImagePlane compose_sr(const Tensor& x0, const ImagePlane& x_l, const ModelBundle& model) {
    ImagePlane out = ImagePlane::from_tensor(x0);
    if (model.cfg.train.residual_prediction) {
        ImagePlane up = upsample_lr(x_l, model.scale());
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += up.data[i];
    }
    out.clamp01();
    return out;
}

}  // namespace

Tensor run_reverse_chain(Tensor x_start, int t_bar, const Tensor& x_e, Rng& z_rng,
                         const ModelBundle& model, SampleTrace* trace) {
    if (t_bar < 1 || t_bar > model.schedule.T)
        throw ShapeError("sampler: t_bar " + std::to_string(t_bar) + " outside [1, " +
                         std::to_string(model.schedule.T) + "]");
    if (trace) {
        trace->timesteps.push_back(t_bar);
        trace->x.push_back(x_start);
    }
    for (int t = t_bar; t >= 1; --t) {
        Tensor eps_hat = model.predictor->predict(x_start, x_e, t);
        if (t > 1) {
            Tensor z = z_rng.normal_tensor(x_start.shape);
            x_start = reverse_step(x_start, eps_hat, t, &z, model.schedule);
        } else {
            x_start = reverse_step(x_start, eps_hat, t, nullptr, model.schedule);
        }
        if (trace) {
            trace->timesteps.push_back(t - 1);
            trace->x.push_back(x_start);
        }
    }
    return x_start;
}

SampleResult super_resolve(const SampleRequest& req, const ModelBundle& model) {
    const int scale = model.scale();
    const int H = req.x_l.height * scale, W = req.x_l.width * scale;
    check_hr_dims(H, W);

    SampleResult res;
    Tensor x_e = model.encoder->encode(req.x_l.to_tensor());
    res.encoder_calls = 1;

    Rng rng(req.seed);
    Tensor x_t = rng.normal_tensor({3, H, W});
    res.x0 = run_reverse_chain(std::move(x_t), model.schedule.T, x_e, rng, model,
                               req.record_trace ? &res.trace : nullptr);
    res.sr = compose_sr(res.x0, req.x_l, model);
    return res;
}

DiverseResult sample_diverse(const ImagePlane& x_l, int n, uint64_t base_seed,
                             const ModelBundle& model) {
    if (n < 2) throw ShapeError("sample_diverse: need at least 2 samples");
    DiverseResult out;
    out.samples.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        SampleRequest req{x_l, base_seed + static_cast<uint64_t>(i), false};
        out.samples.push_back(super_resolve(req, model).sr);
    }
    const ImagePlane& first = out.samples.front();
    out.sigma_map = ImagePlane(first.height, first.width);
    for (size_t k = 0; k < out.sigma_map.data.size(); ++k) {
        double mean = 0.0;
        for (const auto& s : out.samples) mean += s.data[k];
        mean /= n;
        double var = 0.0;
        for (const auto& s : out.samples) {
            const double d = s.data[k] - mean;
            var += d * d;
        }
        out.sigma_map.data[k] = static_cast<float>(std::sqrt(var / n));
    }
    out.mean_sigma = pixel_sigma(out.samples);
    return out;
}

ImagePlane content_fuse(const ImagePlane& x_face, const ImagePlane& x_eye, const Region& region,
                        int t_bar, uint64_t seed, const ModelBundle& model) {
    if (x_face.height != x_eye.height || x_face.width != x_eye.width)
        throw ShapeError("content_fuse: face and eye images must share dimensions");
    check_region(region, x_face.height, x_face.width);
    if (t_bar < 0 || t_bar > model.schedule.T)
        throw ShapeError("content_fuse: t_bar " + std::to_string(t_bar) + " outside [0, " +
                         std::to_string(model.schedule.T) + "]");

    ImagePlane x_f = paste(x_face, x_eye, region);
    if (t_bar == 0) return x_f;  // empty chain: the verbatim paste

    const int scale = model.scale();
    check_hr_dims(x_face.height, x_face.width);
    if (x_face.height % scale != 0 || x_face.width % scale != 0)
        throw ShapeError("content_fuse: image dimensions must be divisible by the scale");
    ImagePlane x_l =
        bicubic_resize(x_face, x_face.height / scale, x_face.width / scale, /*antialias=*/true);

    Tensor x0_target = model.cfg.train.residual_prediction ? residual(x_f, x_l, scale)
                                                           : x_f.to_tensor();
    Rng rng(seed);
    Tensor eps = rng.normal_tensor(x0_target.shape);
    Tensor x_t = q_sample(x0_target, t_bar, eps, model.schedule);

    Tensor x_e = model.encoder->encode(x_l.to_tensor());
    Tensor x0 = run_reverse_chain(std::move(x_t), t_bar, x_e, rng, model);
    ImagePlane sr = compose_sr(x0, x_l, model);
    return paste(x_face, sr, region);  // keep the non-manipulated pixels untouched
}

ImagePlane latent_interpolate(const ImagePlane& x_l, uint64_t seed_a, uint64_t seed_b,
                              float lambda, int t_bar, const ModelBundle& model) {
    if (!(lambda >= 0.0f && lambda <= 1.0f))
        throw ShapeError("latent_interpolate: lambda must lie in [0, 1]");
    const int scale = model.scale();
    const int H = x_l.height * scale, W = x_l.width * scale;
    check_hr_dims(H, W);

    Rng rng_a(seed_a);
    Rng rng_b(seed_b);
    Tensor xa = rng_a.normal_tensor({3, H, W});
    Tensor xb = rng_b.normal_tensor({3, H, W});
    Tensor x_t({3, H, W});
    if (lambda == 1.0f) {
        x_t = std::move(xa);
    } else if (lambda == 0.0f) {
        x_t = std::move(xb);
    } else {
        for (size_t i = 0; i < x_t.data.size(); ++i)
            x_t.data[i] = lambda * xa.data[i] + (1.0f - lambda) * xb.data[i];
    }

    Tensor x_e = model.encoder->encode(x_l.to_tensor());
    // z continues seed_a's stream: the sweep varies only the starting latent,
    // and lambda = 1 with t_bar = T reproduces super_resolve(seed_a) exactly.
    Tensor x0 = run_reverse_chain(std::move(x_t), t_bar, x_e, rng_a, model);
    return compose_sr(x0, x_l, model);
}

}  // namespace srdiff

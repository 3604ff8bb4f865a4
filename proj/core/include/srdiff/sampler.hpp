#pragma once

#include <vector>

#include "srdiff/image.hpp"
#include "srdiff/model.hpp"

namespace srdiff {

struct SampleRequest {
    ImagePlane x_l;
    uint64_t seed = 0;
    bool record_trace = false;
};

/// Snapshot of the reverse chain: x at t_bar, then after every step down to
/// the final x_0. timesteps[i] is the t that state x[i] still carries
/// (timesteps.back() == 0).
struct SampleTrace {
    std::vector<int> timesteps;
    std::vector<Tensor> x;
};

/// HR-pixel rectangle, used by content fusion.
struct Region {
    int top = 0, left = 0, height = 0, width = 0;
};

struct SampleResult {
    ImagePlane sr;
    Tensor x0;  // pre-clamp chain output (the residual when residual prediction is on)
    SampleTrace trace;
    int encoder_calls = 0;
};

/// Reverse-iterates from x_start (carrying timestep t_bar) down to x_0,
/// conditioned on the encoder features x_e; z for each step t > 1 comes from
/// z_rng. The chain is unclamped.
Tensor run_reverse_chain(Tensor x_start, int t_bar, const Tensor& x_e, Rng& z_rng,
                         const ModelBundle& model, SampleTrace* trace = nullptr);

/// Full inference: x_T ~ N(0,I) from the request seed, encoder invoked once,
/// reverse chain with z from the same stream, output clamp(x_0 + up(x_L))
/// (or clamp(x_0) when the model diffuses x_H directly).
SampleResult super_resolve(const SampleRequest& req, const ModelBundle& model);

struct DiverseResult {
    std::vector<ImagePlane> samples;
    ImagePlane sigma_map;  // per-pixel std across samples, [0,1] scale
    double mean_sigma = 0.0;  // mean of the map on the 0..255 scale
};

/// n >= 2 independent super_resolve calls with seeds base_seed .. base_seed+n-1.
DiverseResult sample_diverse(const ImagePlane& x_l, int n, uint64_t base_seed,
                             const ModelBundle& model);

/// Content fusion: paste x_eye's region into x_face, diffuse the combined
/// residual to t_bar, reverse back conditioned on x_face's LR encoding, then
/// paste the re-generated region back into the untouched x_face. t_bar == 0
/// is the verbatim paste.
ImagePlane content_fuse(const ImagePlane& x_face, const ImagePlane& x_eye, const Region& region,
                        int t_bar, uint64_t seed, const ModelBundle& model);

/// Latent interpolation: start the reverse chain at t_bar from
/// lambda * latent(seed_a) + (1-lambda) * latent(seed_b). The per-step z
/// stream continues seed_a's generator, so lambda = 1 with t_bar = T is
/// bit-identical to super_resolve(seed_a). Exact endpoints bypass the blend
/// arithmetic.
ImagePlane latent_interpolate(const ImagePlane& x_l, uint64_t seed_a, uint64_t seed_b,
                              float lambda, int t_bar, const ModelBundle& model);

}  // namespace srdiff

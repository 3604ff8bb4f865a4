#pragma once

// Conditional U-Net noise predictor: four contracting and four expansive
// steps of two residual blocks each, a two-block middle, stride-2 conv
// downsampling, transposed-conv upsampling, skip concatenation, sinusoidal
// timestep embedding injected into every residual block, and LR-encoder
// features fused at the entrance.

#include <array>
#include <memory>
#include <vector>

#include "srdiff/layers.hpp"
#include "srdiff/tensor.hpp"

namespace srdiff {

struct PredictorConfig {
    int base_channels = 64;                     // c
    std::array<int, 4> channel_mults{1, 2, 2, 4};
    int res_blocks_per_step = 2;
    int cond_channels = 32;                     // LR-encoder feature channels
    int image_channels = 3;

    int time_embed_dim() const { return base_channels; }
};

/// Sinusoidal embedding: slot 2i = sin(t * w_i), slot 2i+1 = cos(t * w_i),
/// w_i = 10000^(-2i/dim). dim must be even.
Tensor timestep_embedding(int t, int dim);

class NoisePredictor {
public:
    NoisePredictor(const PredictorConfig& cfg, Rng& rng);

    /// Builds the differentiable graph; x_t is (N,3,H,W), x_e is
    /// (N,cond,H,W), t has one timestep per batch element. H and W must be
    /// divisible by 16.
    ag::Value forward(const ag::Value& x_t, const ag::Value& x_e, const std::vector<int>& t) const;

    /// Grad-free convenience for sampling (single image, leading N dim 1).
    Tensor predict(const Tensor& x_t, const Tensor& x_e, int t) const;

    std::vector<Parameter*> params();
    std::vector<const Parameter*> params() const;
    int64_t param_count() const;
    const PredictorConfig& config() const { return cfg_; }

private:
    struct ResBlock {
        Conv2dLayer conv1, conv2;
        DenseLayer time_proj;
        std::optional<Conv2dLayer> shortcut;

        ResBlock() = default;
        ResBlock(const std::string& name, int in_ch, int out_ch, int time_dim, Rng& rng);
        ag::Value operator()(const ag::Value& x, const ag::Value& temb) const;
        void collect(std::vector<Parameter*>& out);
    };

    PredictorConfig cfg_;
    Conv2dLayer conv_in_, fuse_;
    DenseLayer time1_, time2_;
    struct ContractStep {
        ResBlock res1, res2;
        Conv2dLayer down;
    };
    struct ExpandStep {
        ConvT2dLayer up;
        ResBlock res1, res2;
    };
    std::array<ContractStep, 4> contracting_;
    ResBlock mid1_, mid2_;
    std::array<ExpandStep, 4> expansive_;
    Conv2dLayer conv_out_;
};

}  // namespace srdiff

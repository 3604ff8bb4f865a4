#pragma once

// Small parameterized layer wrappers shared by the noise predictor and the
// LR encoder. Each layer owns its Parameters and builds graph nodes on call.

#include <optional>
#include <string>
#include <vector>

#include "srdiff/autograd.hpp"
#include "srdiff/optim.hpp"
#include "srdiff/rng.hpp"

namespace srdiff {

struct Conv2dLayer {
    Parameter weight, bias;
    int stride = 1, padding = 0;

    Conv2dLayer() = default;
    Conv2dLayer(const std::string& name, int in_ch, int out_ch, int k, int stride, int padding,
                Rng& rng, bool zero_init = false)
        : weight(name + ".weight", Tensor({out_ch, in_ch, k, k})),
          bias(name + ".bias", Tensor({out_ch})),
          stride(stride),
          padding(padding) {
        if (!zero_init) init_normal(weight, in_ch * k * k, rng);
    }

    ag::Value operator()(const ag::Value& x) const {
        return ag::conv2d(x, ag::leaf(const_cast<Parameter&>(weight)),
                          ag::leaf(const_cast<Parameter&>(bias)), stride, padding);
    }
    void collect(std::vector<Parameter*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }
};

struct ConvT2dLayer {
    Parameter weight, bias;
    int stride = 1, padding = 0;

    ConvT2dLayer() = default;
    // weight is stored in conv (adjoint) layout: (in_ch, out_ch, k, k).
    ConvT2dLayer(const std::string& name, int in_ch, int out_ch, int k, int stride, int padding,
                 Rng& rng)
        : weight(name + ".weight", Tensor({in_ch, out_ch, k, k})),
          bias(name + ".bias", Tensor({out_ch})),
          stride(stride),
          padding(padding) {
        init_normal(weight, in_ch * k * k, rng);
    }

    ag::Value operator()(const ag::Value& x) const {
        return ag::conv2d_transpose(x, ag::leaf(const_cast<Parameter&>(weight)),
                                    ag::leaf(const_cast<Parameter&>(bias)), stride, padding);
    }
    void collect(std::vector<Parameter*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }
};

struct DenseLayer {
    Parameter weight, bias;

    DenseLayer() = default;
    DenseLayer(const std::string& name, int in_dim, int out_dim, Rng& rng)
        : weight(name + ".weight", Tensor({out_dim, in_dim})),
          bias(name + ".bias", Tensor({out_dim})) {
        init_normal(weight, in_dim, rng);
    }

    ag::Value operator()(const ag::Value& x) const {
        return ag::dense(x, ag::leaf(const_cast<Parameter&>(weight)),
                         ag::leaf(const_cast<Parameter&>(bias)));
    }
    void collect(std::vector<Parameter*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }
};

}  // namespace srdiff

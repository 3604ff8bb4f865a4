#pragma once

#include <string>
#include <vector>

#include "srdiff/rng.hpp"
#include "srdiff/tensor.hpp"

namespace srdiff {

/// A trainable tensor with its gradient accumulator and Adam state.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
    int64_t step_count = 0;

    Parameter() = default;
    Parameter(std::string n, Tensor v)
        : name(std::move(n)),
          value(std::move(v)),
          grad(value.shape),
          adam_m(value.shape),
          adam_v(value.shape) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0f); }
};

/// Fills a parameter with N(0, gain^2 / fan_in) entries.
void init_normal(Parameter& p, int fan_in, Rng& rng, float gain = 1.0f);

/// Scales all gradients so their joint L2 norm is at most max_norm.
/// Returns the pre-clip norm.
double clip_global_norm(const std::vector<Parameter*>& params, double max_norm);

void zero_grads(const std::vector<Parameter*>& params);

/// One bias-corrected Adam update on every parameter; increments each
/// step_count and clears the gradients. A non-finite gradient aborts the
/// whole step (no parameter is touched) with the offending name.
void adam_step(const std::vector<Parameter*>& params, float lr, float beta1 = 0.9f,
               float beta2 = 0.999f, float eps = 1e-8f);

}  // namespace srdiff

#include "srdiff/optim.hpp"

#include <cmath>

namespace srdiff {

void init_normal(Parameter& p, int fan_in, Rng& rng, float gain) {
    const float std = gain / std::sqrt(static_cast<float>(fan_in));
    for (auto& v : p.value.data) v = std * rng.normal();
}

double clip_global_norm(const std::vector<Parameter*>& params, double max_norm) {
    double sq = 0.0;
    for (const Parameter* p : params)
        for (float g : p->grad.data) sq += static_cast<double>(g) * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const float scale = static_cast<float>(max_norm / norm);
        for (Parameter* p : params)
            for (float& g : p->grad.data) g *= scale;
    }
    return norm;
}

void zero_grads(const std::vector<Parameter*>& params) {
    for (Parameter* p : params) p->zero_grad();
}

void adam_step(const std::vector<Parameter*>& params, float lr, float beta1, float beta2,
               float eps) {
    for (const Parameter* p : params)
        if (!p->grad.all_finite())
            throw NumericError("non-finite gradient in parameter '" + p->name + "'");

    for (Parameter* p : params) {
        p->step_count += 1;
        const double bc1 = 1.0 - std::pow(static_cast<double>(beta1), p->step_count);
        const double bc2 = 1.0 - std::pow(static_cast<double>(beta2), p->step_count);
        for (int64_t i = 0; i < p->value.numel(); ++i) {
            const float g = p->grad[i];
            float& m = p->adam_m[i];
            float& v = p->adam_v[i];
            m = beta1 * m + (1.0f - beta1) * g;
            v = beta2 * v + (1.0f - beta2) * g * g;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p->value[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps));
        }
        p->zero_grad();
    }
}

}  // namespace srdiff

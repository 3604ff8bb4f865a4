#include "srdiff/schedule.hpp"

#include <cmath>

namespace srdiff {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "cosine") return ScheduleKind::Cosine;
    if (s == "linear") return ScheduleKind::Linear;
    throw std::runtime_error("unknown schedule kind '" + s + "'");
}

std::string to_string(ScheduleKind k) {
    return k == ScheduleKind::Cosine ? "cosine" : "linear";
}

namespace {

Schedule from_betas(int T, std::vector<double> betas) {
    Schedule s;
    s.T = T;
    s.beta = std::move(betas);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    s.alpha_bar_prev.resize(T);
    s.beta_tilde.resize(T);
    s.sqrt_alpha_bar.resize(T);
    s.sqrt_one_minus_alpha_bar.resize(T);
    double cum = 1.0;
    for (int i = 0; i < T; ++i) {
        const double b = s.beta[i];
        if (!(b > 0.0 && b < 1.0))
            throw std::runtime_error("schedule: beta_" + std::to_string(i + 1) + " = " +
                                     std::to_string(b) + " outside (0, 1)");
        s.alpha[i] = 1.0 - b;
        s.alpha_bar_prev[i] = cum;
        cum *= s.alpha[i];
        s.alpha_bar[i] = cum;
        s.beta_tilde[i] =
            i == 0 ? b : (1.0 - s.alpha_bar_prev[i]) / (1.0 - s.alpha_bar[i]) * b;
        s.sqrt_alpha_bar[i] = std::sqrt(s.alpha_bar[i]);
        s.sqrt_one_minus_alpha_bar[i] = std::sqrt(1.0 - s.alpha_bar[i]);
    }
    return s;
}

}  // namespace

Schedule make_cosine_schedule(int T) {
    if (T < 1) throw std::runtime_error("schedule: T must be >= 1");
    const double offset = 0.008;
    auto f = [&](double u) {
        const double c = std::cos((u + offset) / (1.0 + offset) * M_PI / 2.0);
        return c * c;
    };
    const double f0 = f(0.0);
    std::vector<double> betas(T);
    double prev_abar = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double abar = f(static_cast<double>(t) / T) / f0;
        double b = 1.0 - abar / prev_abar;
        if (b > 0.999) b = 0.999;
        betas[t - 1] = b;
        prev_abar = abar;
    }
    Schedule s = from_betas(T, std::move(betas));
    s.kind = ScheduleKind::Cosine;
    return s;
}

Schedule make_linear_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw std::runtime_error("schedule: T must be >= 1");
    std::vector<double> betas(T);
    for (int t = 0; t < T; ++t)
        betas[t] = T == 1 ? beta_start
                          : beta_start + (beta_end - beta_start) * t / static_cast<double>(T - 1);
    Schedule s = from_betas(T, std::move(betas));
    s.kind = ScheduleKind::Linear;
    s.linear_beta_start = beta_start;
    s.linear_beta_end = beta_end;
    return s;
}

Schedule make_schedule(ScheduleKind kind, int T, double beta_start, double beta_end) {
    return kind == ScheduleKind::Cosine ? make_cosine_schedule(T)
                                        : make_linear_schedule(T, beta_start, beta_end);
}

Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const Schedule& s) {
    check_same_shape(x0, eps, "q_sample");
    (void)s.alpha_bar_at(t);  // range check
    const float a = static_cast<float>(s.sqrt_alpha_bar[static_cast<size_t>(t - 1)]);
    const float b = static_cast<float>(s.sqrt_one_minus_alpha_bar[static_cast<size_t>(t - 1)]);
    Tensor out(x0.shape);
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

std::pair<Tensor, double> posterior_mean_var(const Tensor& x_t, const Tensor& x0, int t,
                                             const Schedule& s) {
    check_same_shape(x_t, x0, "posterior_mean_var");
    const double abar = s.alpha_bar_at(t);
    const double abar_prev = s.alpha_bar_prev_at(t);
    const double c0 = std::sqrt(abar_prev) * s.beta_at(t) / (1.0 - abar);
    const double ct = std::sqrt(s.alpha_at(t)) * (1.0 - abar_prev) / (1.0 - abar);
    Tensor mean(x_t.shape);
    for (int64_t i = 0; i < mean.numel(); ++i)
        mean[i] = static_cast<float>(c0 * x0[i] + ct * x_t[i]);
    return {std::move(mean), s.beta_tilde_at(t)};
}

Tensor reverse_step(const Tensor& x_t, const Tensor& eps_hat, int t, const Tensor* z,
                    const Schedule& s) {
    check_same_shape(x_t, eps_hat, "reverse_step");
    if (t == 1 && z) {
        for (float v : z->data)
            if (v != 0.0f)
                throw ShapeError("reverse_step: z must be zero at t = 1");
    }
    if (z) check_same_shape(x_t, *z, "reverse_step z");
    const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha_at(t));
    const double eps_coef = (1.0 - s.alpha_at(t)) / std::sqrt(1.0 - s.alpha_bar_at(t));
    const double sigma = std::sqrt(s.beta_tilde_at(t));
    Tensor out(x_t.shape);
    for (int64_t i = 0; i < out.numel(); ++i) {
        double v = inv_sqrt_alpha * (x_t[i] - eps_coef * eps_hat[i]);
        if (z && t > 1) v += sigma * (*z)[i];
        out[i] = static_cast<float>(v);
    }
    return out;
}

float noise_loss(const Tensor& eps, const Tensor& eps_hat) {
    check_same_shape(eps, eps_hat, "noise_loss");
    double acc = 0.0;
    for (int64_t i = 0; i < eps.numel(); ++i) acc += std::fabs(eps[i] - eps_hat[i]);
    return static_cast<float>(acc / eps.numel());
}

double kl_step_diagnostic(const Tensor& x0, const Tensor& x_t, const Tensor& eps_hat, int t,
                          const Schedule& s) {
    if (t <= 1) throw ShapeError("kl_step_diagnostic: requires t > 1");
    check_same_shape(x0, x_t, "kl_step_diagnostic");
    check_same_shape(x0, eps_hat, "kl_step_diagnostic");
    const double abar = s.alpha_bar_at(t);
    const double abar_prev = s.alpha_bar_prev_at(t);
    const double c0 = std::sqrt(abar_prev) * s.beta_at(t) / (1.0 - abar);
    const double ct = std::sqrt(s.alpha_at(t)) * (1.0 - abar_prev) / (1.0 - abar);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha_at(t));
    const double eps_coef = (1.0 - s.alpha_at(t)) / std::sqrt(1.0 - abar);
    const double bt = s.beta_tilde_at(t);
    double acc = 0.0;
    for (int64_t i = 0; i < x0.numel(); ++i) {
        const double mu_tilde = c0 * x0[i] + ct * x_t[i];
        const double mu_theta = inv_sqrt_alpha * (x_t[i] - eps_coef * eps_hat[i]);
        const double d = mu_tilde - mu_theta;
        acc += d * d;
    }
    return acc / (2.0 * bt * static_cast<double>(x0.numel()));
}

}  // namespace srdiff

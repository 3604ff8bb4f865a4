#pragma once

#include <string>
#include <utility>
#include <vector>

#include "srdiff/tensor.hpp"

namespace srdiff {

enum class ScheduleKind { Cosine, Linear };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

/// Precomputed noise-schedule tables for a T-step chain. All arrays are
/// indexed by timestep t in [1, T] via the at() helpers; stored in double so
/// the algebraic recurrences hold to ~1e-15.
struct Schedule {
    int T = 0;
    ScheduleKind kind = ScheduleKind::Cosine;
    double linear_beta_start = 0.0, linear_beta_end = 0.0;
    std::vector<double> beta, alpha, alpha_bar, alpha_bar_prev, beta_tilde;
    std::vector<double> sqrt_alpha_bar, sqrt_one_minus_alpha_bar;

    double beta_at(int t) const { return beta[check(t)]; }
    double alpha_at(int t) const { return alpha[check(t)]; }
    double alpha_bar_at(int t) const { return alpha_bar[check(t)]; }
    double alpha_bar_prev_at(int t) const { return alpha_bar_prev[check(t)]; }
    double beta_tilde_at(int t) const { return beta_tilde[check(t)]; }

private:
    size_t check(int t) const {
        if (t < 1 || t > T)
            throw ShapeError("schedule: timestep " + std::to_string(t) + " outside [1, " +
                             std::to_string(T) + "]");
        return static_cast<size_t>(t - 1);
    }
};

/// Cosine schedule with offset 0.008 and betas clipped at 0.999; alpha_bar is
/// recomputed from the clipped betas so the cumulative-product invariant is
/// exact.
Schedule make_cosine_schedule(int T);

/// Betas linearly spaced between the two endpoints (analytically convenient
/// for tests).
Schedule make_linear_schedule(int T, double beta_start, double beta_end);

Schedule make_schedule(ScheduleKind kind, int T, double beta_start = 1e-4,
                       double beta_end = 2e-2);

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const Schedule& s);

/// Mean and variance of q(x_{t-1} | x_t, x_0).
std::pair<Tensor, double> posterior_mean_var(const Tensor& x_t, const Tensor& x0, int t,
                                             const Schedule& s);

/// One reverse transition; z must be null (treated as zero) when t == 1.
Tensor reverse_step(const Tensor& x_t, const Tensor& eps_hat, int t, const Tensor* z,
                    const Schedule& s);

/// Mean absolute error between the true and predicted noise.
float noise_loss(const Tensor& eps, const Tensor& eps_hat);

/// Per-element Gaussian KL between the forward posterior and the reverse
/// transition implied by eps_hat (both variances beta_tilde_t). Diagnostic
/// only; requires t > 1.
double kl_step_diagnostic(const Tensor& x0, const Tensor& x_t, const Tensor& eps_hat, int t,
                          const Schedule& s);

}  // namespace srdiff

#include "srdiff/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "srdiff/autograd.hpp"

namespace srdiff {

namespace {

// Pretraining draws from its own stream so the diffusion stream always starts
// at counter 0 and resume math never depends on the pretraining length.
constexpr uint64_t kPretrainSeedSalt = 0x9e3779b97f4a7c15ull;

std::string loss_line(int64_t step, float loss, float lr) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%lld\t%.6f\t%.6g", static_cast<long long>(step),
                  static_cast<double>(loss), static_cast<double>(lr));
    return buf;
}

// Stacks per-item CHW images into one (N,3,h,w) batch.
Tensor stack_lr(const PairSet& pairs, const std::vector<int>& idx) {
    const ImagePlane& first = pairs.items[static_cast<size_t>(idx[0])].lr;
    Tensor out({static_cast<int>(idx.size()), 3, first.height, first.width});
    const size_t per = first.data.size();
    for (size_t i = 0; i < idx.size(); ++i) {
        const auto& img = pairs.items[static_cast<size_t>(idx[i])].lr;
        std::copy(img.data.begin(), img.data.end(), out.data.begin() + i * per);
    }
    return out;
}

Tensor stack_hr(const PairSet& pairs, const std::vector<int>& idx) {
    const ImagePlane& first = pairs.items[static_cast<size_t>(idx[0])].hr;
    Tensor out({static_cast<int>(idx.size()), 3, first.height, first.width});
    const size_t per = first.data.size();
    for (size_t i = 0; i < idx.size(); ++i) {
        const auto& img = pairs.items[static_cast<size_t>(idx[i])].hr;
        std::copy(img.data.begin(), img.data.end(), out.data.begin() + i * per);
    }
    return out;
}

std::string batch_manifest(const PairSet& pairs, const std::vector<int>& idx) {
    std::ostringstream os;
    for (int i : idx) {
        const auto& it = pairs.items[static_cast<size_t>(i)];
        os << "\n  " << it.hr_path << "\t" << it.crop_y << "\t" << it.crop_x;
    }
    return os.str();
}

}  // namespace

Trainer::Trainer(const RunConfig& cfg)
    : bundle_(ModelBundle::create(cfg)),
      train_rng_(cfg.train.seed),
      pretrain_rng_(cfg.train.seed ^ kPretrainSeedSalt) {}

Trainer::Trainer(ModelBundle bundle)
    : bundle_(std::move(bundle)),
      train_rng_(Rng::restore(bundle_.rng_seed, bundle_.rng_counter)),
      pretrain_rng_(bundle_.rng_seed ^ kPretrainSeedSalt) {}

float Trainer::lr_at(int64_t step) const {
    const int64_t halvings = step / bundle_.cfg.train.lr_halve_every;
    return bundle_.cfg.train.lr * std::pow(0.5f, static_cast<float>(halvings));
}

std::vector<float> Trainer::pretrain(const PairSet& pairs, std::ostream* log) {
    const auto& tc = bundle_.cfg.train;
    if (pairs.items.empty()) throw IoError("pretrain: empty pair set");
    std::vector<float> curve;
    curve.reserve(static_cast<size_t>(tc.pretrain_steps));
    auto enc_params = bundle_.encoder->params();

    for (int64_t step = 0; step < tc.pretrain_steps; ++step) {
        std::vector<int> idx(static_cast<size_t>(tc.batch_size));
        for (auto& i : idx)
            i = pretrain_rng_.uniform_int(0, static_cast<int>(pairs.items.size()) - 1);

        ag::Value pred = bundle_.encoder->sr(ag::constant(stack_lr(pairs, idx)));
        ag::Value loss = ag::l1_loss(pred, ag::constant(stack_hr(pairs, idx)));
        const float loss_val = loss->value.data[0];
        if (!std::isfinite(loss_val))
            throw NumericError("pretrain: non-finite loss at step " + std::to_string(step + 1) +
                               "; batch:" + batch_manifest(pairs, idx));
        ag::backward(loss);
        if (tc.grad_clip > 0.0f) clip_global_norm(enc_params, tc.grad_clip);
        const float lr = lr_at(step);
        adam_step(enc_params, lr);

        curve.push_back(loss_val);
        if (log) *log << loss_line(step + 1, loss_val, lr) << "\n";
    }
    bundle_.encoder_pretrained = true;
    return curve;
}

void Trainer::adopt_pretrained_encoder(const std::string& checkpoint_path) {
    ModelBundle donor = load_checkpoint(checkpoint_path);
    const auto& a = donor.cfg.encoder;
    const auto& b = bundle_.cfg.encoder;
    if (a.num_rrdb_blocks != b.num_rrdb_blocks || a.feature_channels != b.feature_channels ||
        a.growth_channels != b.growth_channels || a.scale != b.scale)
        throw ConfigError("pretrained encoder in '" + checkpoint_path +
                          "' has a different encoder configuration");
    auto src = donor.encoder->params();
    auto dst = bundle_.encoder->params();
    for (size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
    bundle_.encoder_pretrained = true;
}

float Trainer::diffusion_step(const PairSet& pairs, const TrainHooks& hooks, bool update) {
    const auto& tc = bundle_.cfg.train;
    if (pairs.items.empty()) throw IoError("train: empty pair set");
    const Schedule& sched = bundle_.schedule;
    const int64_t step = bundle_.global_step;

    std::vector<int> idx(static_cast<size_t>(tc.batch_size));
    for (auto& i : idx) i = train_rng_.uniform_int(0, static_cast<int>(pairs.items.size()) - 1);

    // x_0 per item: the upsampling residual, or the HR patch directly.
    const PairItem& p0 = pairs.items[static_cast<size_t>(idx[0])];
    Tensor x0({tc.batch_size, 3, p0.hr.height, p0.hr.width});
    for (int i = 0; i < tc.batch_size; ++i) {
        const PairItem& it = pairs.items[static_cast<size_t>(idx[i])];
        Tensor one = tc.residual_prediction ? residual(it.hr, it.lr, pairs.scale)
                                            : it.hr.to_tensor();
        std::copy(one.data.begin(), one.data.end(),
                  x0.data.begin() + static_cast<size_t>(i) * one.data.size());
    }

    // Per element: timestep draw, then that element's noise.
    std::vector<int> ts(static_cast<size_t>(tc.batch_size));
    Tensor eps(x0.shape);
    Tensor x_t(x0.shape);
    const size_t per = static_cast<size_t>(3) * p0.hr.height * p0.hr.width;
    for (int i = 0; i < tc.batch_size; ++i) {
        ts[static_cast<size_t>(i)] = train_rng_.uniform_int(1, sched.T);
        const int t = ts[static_cast<size_t>(i)];
        const float sab = static_cast<float>(sched.sqrt_alpha_bar[static_cast<size_t>(t - 1)]);
        const float somab =
            static_cast<float>(sched.sqrt_one_minus_alpha_bar[static_cast<size_t>(t - 1)]);
        for (size_t k = i * per; k < (i + 1) * per; ++k) {
            eps.data[k] = train_rng_.normal();
            x_t.data[k] = sab * x0.data[k] + somab * eps.data[k];
        }
    }

    ag::Value x_e;
    if (tc.train_encoder) {
        x_e = bundle_.encoder->features(ag::constant(stack_lr(pairs, idx)));
    } else {
        ag::NoGradGuard guard;
        x_e = bundle_.encoder->features(ag::constant(stack_lr(pairs, idx)));
    }

    ag::Value pred = bundle_.predictor->forward(ag::constant(x_t), x_e, ts);
    ag::Value loss = ag::l1_loss(pred, ag::constant(eps));
    const float loss_val = loss->value.data[0];

    if (hooks.on_diffusion_x0) hooks.on_diffusion_x0(step + 1, x0);

    if (update) {
        auto params = bundle_.trainable_params();
        if (!std::isfinite(loss_val)) {
            zero_grads(params);
            if (++consecutive_skips_ >= 10)
                throw NumericError("train: 10 consecutive non-finite losses, last at step " +
                                   std::to_string(step + 1) +
                                   "; batch:" + batch_manifest(pairs, idx));
        } else {
            ag::backward(loss);
            if (tc.grad_clip > 0.0f) clip_global_norm(params, tc.grad_clip);
            adam_step(params, lr_at(step));
            consecutive_skips_ = 0;
        }
        bundle_.global_step = step + 1;
        bundle_.rng_counter = train_rng_.counter();
    }
    return loss_val;
}

void Trainer::fit(const PairSet& pairs, const std::string& out_dir, const TrainHooks& hooks) {
    const auto& tc = bundle_.cfg.train;
    namespace fs = std::filesystem;
    const bool persist = !out_dir.empty();
    if (persist) fs::create_directories(out_dir);
    const auto t_start = std::chrono::steady_clock::now();

    if (!bundle_.encoder_pretrained) {
        if (!tc.pretrained_encoder.empty()) {
            adopt_pretrained_encoder(tc.pretrained_encoder);
        } else if (tc.pretrain_steps > 0) {
            std::ofstream plog;
            if (persist) plog.open(fs::path(out_dir) / "pretrain_loss.txt");
            pretrain(pairs, persist ? &plog : nullptr);
        } else {
            bundle_.encoder_pretrained = true;
        }
        if (persist) save_checkpoint(bundle_, (fs::path(out_dir) / "encoder.ckpt").string());
    }

    std::ofstream log;
    if (persist)
        log.open(fs::path(out_dir) / "loss.txt",
                 bundle_.global_step > 0 ? std::ios::app : std::ios::out);

    float last_loss = 0.0f;
    while (bundle_.global_step < tc.total_steps) {
        last_loss = diffusion_step(pairs, hooks);
        const int64_t step = bundle_.global_step;
        if (persist) {
            log << loss_line(step, last_loss, lr_at(step - 1)) << "\n";
            if (tc.checkpoint_every > 0 && step % tc.checkpoint_every == 0)
                save_checkpoint(bundle_,
                                (fs::path(out_dir) / ("ckpt_" + std::to_string(step) + ".ckpt"))
                                    .string());
        }
    }

    if (persist) {
        save_checkpoint(bundle_, (fs::path(out_dir) / "last.ckpt").string());
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        nlohmann::ordered_json summary;
        summary["steps"] = bundle_.global_step;
        summary["final_loss"] = last_loss;
        summary["wall_seconds"] = wall;
        std::ofstream s(fs::path(out_dir) / "summary.json");
        s << summary.dump(2) << "\n";
    }
}

}  // namespace srdiff

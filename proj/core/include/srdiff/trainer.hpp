#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "srdiff/model.hpp"
#include "srdiff/pairs.hpp"

namespace srdiff {

struct TrainHooks {
    /// Called each diffusion step with the batch actually diffused as x_0
    /// (the residual, or x_H when residual prediction is off).
    std::function<void(int64_t step, const Tensor& x0_batch)> on_diffusion_x0;
};

/// Owns one ModelBundle and drives encoder pretraining plus the diffusion
/// training loop. All randomness flows through two streams serialized in the
/// checkpoint, so a resumed run reproduces an uninterrupted one exactly.
class Trainer {
public:
    explicit Trainer(const RunConfig& cfg);
    explicit Trainer(ModelBundle bundle);

    ModelBundle& bundle() { return bundle_; }
    const ModelBundle& bundle() const { return bundle_; }

    /// lr halved every lr_halve_every steps; applies to both phases.
    float lr_at(int64_t step) const;

    /// L1 pretraining of the encoder head against the HR patches; returns the
    /// loss curve and logs "step<tab>loss<tab>lr" lines when log is given.
    std::vector<float> pretrain(const PairSet& pairs, std::ostream* log = nullptr);

    /// Loads encoder weights (and marks the encoder pretrained) from another
    /// checkpoint with an identical encoder configuration.
    void adopt_pretrained_encoder(const std::string& checkpoint_path);

    /// One diffusion training step on a freshly sampled batch; returns the
    /// loss. With update=false the batch is evaluated but no weights move.
    float diffusion_step(const PairSet& pairs, const TrainHooks& hooks = {}, bool update = true);

    /// Algorithm-1 end to end: pretraining (unless already done), then
    /// diffusion steps up to total_steps with periodic checkpoints. Writes
    /// pretrain_loss.txt, loss.txt, summary.json and last.ckpt under out_dir
    /// when non-empty.
    void fit(const PairSet& pairs, const std::string& out_dir, const TrainHooks& hooks = {});

private:
    ModelBundle bundle_;
    Rng train_rng_;    // diffusion stream, serialized
    Rng pretrain_rng_; // separate stream; pretraining is never resumed mid-way
    int consecutive_skips_ = 0;
};

}  // namespace srdiff

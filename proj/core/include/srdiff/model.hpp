#pragma once

#include <memory>
#include <string>
#include <vector>

#include "srdiff/config.hpp"
#include "srdiff/rrdb.hpp"
#include "srdiff/schedule.hpp"
#include "srdiff/unet.hpp"

namespace srdiff {

/// Everything a sampler or trainer needs: both networks, the schedule, and
/// the run configuration. Serializes as a JSON manifest at `path` plus a raw
/// little-endian float32 blob at `path + ".bin"` (value, adam_m, adam_v per
/// tensor, in manifest order).
struct ModelBundle {
    RunConfig cfg;
    Schedule schedule;
    std::shared_ptr<NoisePredictor> predictor;
    std::shared_ptr<LrEncoder> encoder;
    int64_t global_step = 0;
    bool encoder_pretrained = false;
    uint64_t rng_seed = 0;
    uint64_t rng_counter = 0;

    static ModelBundle create(const RunConfig& cfg);

    std::vector<Parameter*> checkpoint_params() const;  // predictor then encoder
    std::vector<Parameter*> trainable_params() const;   // honors train_encoder
    int64_t param_count() const;
    int scale() const { return cfg.data.scale; }
};

void save_checkpoint(const ModelBundle& bundle, const std::string& path);
ModelBundle load_checkpoint(const std::string& path);

}  // namespace srdiff

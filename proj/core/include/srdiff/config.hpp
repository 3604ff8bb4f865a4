#pragma once

#include <cstdint>
#include <string>

#include "srdiff/rrdb.hpp"
#include "srdiff/schedule.hpp"
#include "srdiff/unet.hpp"

namespace srdiff {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataConfig {
    std::string hr_dir;
    int patch = 160;
    int scale = 4;
};

struct TrainConfig {
    int T = 100;
    int c = 64;
    int batch_size = 16;
    float lr = 2e-4f;
    int64_t lr_halve_every = 100000;
    int64_t pretrain_steps = 100000;
    int64_t total_steps = 300000;
    bool residual_prediction = true;
    uint64_t seed = 0;
    bool train_encoder = false;
    float grad_clip = 1.0f;
    int64_t checkpoint_every = 10000;
    std::string schedule_kind = "cosine";
    std::string pretrained_encoder;  // optional checkpoint to load instead of pretraining
};

/// Full run configuration; mirrors the JSON config file. Unknown keys are
/// rejected during parsing.
struct RunConfig {
    DataConfig data;
    TrainConfig train;
    EncoderConfig encoder;

    PredictorConfig predictor_config() const {
        PredictorConfig p;
        p.base_channels = train.c;
        p.cond_channels = encoder.feature_channels;
        return p;
    }
    Schedule make_run_schedule() const {
        return make_schedule(schedule_kind_from_string(train.schedule_kind), train.T);
    }

    void validate() const;
    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig from_file(const std::string& path);
};

}  // namespace srdiff

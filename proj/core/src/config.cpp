#include "srdiff/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace srdiff {

namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!known.count(key))
            throw ConfigError("unknown key '" + key + "' in config section '" + where + "'");
}

template <typename T>
void get_opt(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

}  // namespace

void RunConfig::validate() const {
    auto positive = [](int64_t v, const char* what) {
        if (v <= 0) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(train.T, "train.T");
    positive(train.c, "train.c");
    positive(train.batch_size, "train.batch_size");
    positive(train.lr_halve_every, "train.lr_halve_every");
    positive(data.patch, "data.patch");
    positive(data.scale, "data.scale");
    positive(encoder.num_rrdb_blocks, "encoder.num_rrdb_blocks");
    positive(encoder.feature_channels, "encoder.feature_channels");
    positive(encoder.growth_channels, "encoder.growth_channels");
    if (train.lr <= 0.0f) throw ConfigError("train.lr must be positive");
    if (train.pretrain_steps < 0 || train.total_steps < 0)
        throw ConfigError("step counts must be non-negative");
    if (data.patch % 16 != 0 || data.patch % data.scale != 0)
        throw ConfigError("data.patch must be divisible by 16 and by data.scale");
    if (data.scale < 2 || (data.scale & (data.scale - 1)) != 0)
        throw ConfigError("data.scale must be a power of two >= 2");
    if (train.c % 2 != 0) throw ConfigError("train.c must be even");
    try {
        schedule_kind_from_string(train.schedule_kind);
    } catch (const std::exception&) {
        throw ConfigError("train.schedule_kind must be 'cosine' or 'linear', got '" +
                          train.schedule_kind + "'");
    }
}

std::string RunConfig::to_json() const {
    json j;
    j["data"]["hr_dir"] = data.hr_dir;
    j["data"]["patch"] = data.patch;
    j["data"]["scale"] = data.scale;
    auto& t = j["train"];
    t["T"] = train.T;
    t["c"] = train.c;
    t["batch_size"] = train.batch_size;
    t["lr"] = train.lr;
    t["lr_halve_every"] = train.lr_halve_every;
    t["pretrain_steps"] = train.pretrain_steps;
    t["total_steps"] = train.total_steps;
    t["residual_prediction"] = train.residual_prediction;
    t["seed"] = train.seed;
    t["train_encoder"] = train.train_encoder;
    t["grad_clip"] = train.grad_clip;
    t["checkpoint_every"] = train.checkpoint_every;
    t["schedule_kind"] = train.schedule_kind;
    t["pretrained_encoder"] = train.pretrained_encoder;
    auto& e = j["encoder"];
    e["num_rrdb_blocks"] = encoder.num_rrdb_blocks;
    e["feature_channels"] = encoder.feature_channels;
    e["growth_channels"] = encoder.growth_channels;
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON config: ") + e.what());
    }
    reject_unknown(j, {"data", "train", "encoder"}, "<root>");

    RunConfig cfg;
    if (j.contains("data")) {
        const auto& d = j["data"];
        reject_unknown(d, {"hr_dir", "patch", "scale"}, "data");
        get_opt(d, "hr_dir", cfg.data.hr_dir);
        get_opt(d, "patch", cfg.data.patch);
        get_opt(d, "scale", cfg.data.scale);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        reject_unknown(t,
                       {"T", "c", "batch_size", "lr", "lr_halve_every", "pretrain_steps",
                        "total_steps", "residual_prediction", "seed", "train_encoder",
                        "grad_clip", "checkpoint_every", "schedule_kind", "pretrained_encoder"},
                       "train");
        get_opt(t, "T", cfg.train.T);
        get_opt(t, "c", cfg.train.c);
        get_opt(t, "batch_size", cfg.train.batch_size);
        get_opt(t, "lr", cfg.train.lr);
        get_opt(t, "lr_halve_every", cfg.train.lr_halve_every);
        get_opt(t, "pretrain_steps", cfg.train.pretrain_steps);
        get_opt(t, "total_steps", cfg.train.total_steps);
        get_opt(t, "residual_prediction", cfg.train.residual_prediction);
        get_opt(t, "seed", cfg.train.seed);
        get_opt(t, "train_encoder", cfg.train.train_encoder);
        get_opt(t, "grad_clip", cfg.train.grad_clip);
        get_opt(t, "checkpoint_every", cfg.train.checkpoint_every);
        get_opt(t, "schedule_kind", cfg.train.schedule_kind);
        get_opt(t, "pretrained_encoder", cfg.train.pretrained_encoder);
    }
    if (j.contains("encoder")) {
        const auto& e = j["encoder"];
        reject_unknown(e, {"num_rrdb_blocks", "feature_channels", "growth_channels"}, "encoder");
        get_opt(e, "num_rrdb_blocks", cfg.encoder.num_rrdb_blocks);
        get_opt(e, "feature_channels", cfg.encoder.feature_channels);
        get_opt(e, "growth_channels", cfg.encoder.growth_channels);
    }
    cfg.encoder.scale = cfg.data.scale;
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace srdiff

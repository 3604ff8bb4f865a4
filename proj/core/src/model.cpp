#include "srdiff/model.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "srdiff/image.hpp"

namespace srdiff {

namespace {
constexpr int kFormatVersion = 1;
using json = nlohmann::ordered_json;
}  // namespace

ModelBundle ModelBundle::create(const RunConfig& cfg) {
    cfg.validate();
    ModelBundle b;
    b.cfg = cfg;
    b.schedule = cfg.make_run_schedule();
    // Weight init draws come from a dedicated stream so the training stream
    // starts at counter 0 regardless of model size.
    Rng init_rng(cfg.train.seed ^ 0x5eedface12345678ull);
    b.predictor = std::make_shared<NoisePredictor>(cfg.predictor_config(), init_rng);
    b.encoder = std::make_shared<LrEncoder>(cfg.encoder, init_rng);
    b.rng_seed = cfg.train.seed;
    b.rng_counter = 0;
    return b;
}

std::vector<Parameter*> ModelBundle::checkpoint_params() const {
    std::vector<Parameter*> out = predictor->params();
    auto enc = encoder->params();
    out.insert(out.end(), enc.begin(), enc.end());
    return out;
}

std::vector<Parameter*> ModelBundle::trainable_params() const {
    if (cfg.train.train_encoder) return checkpoint_params();
    return predictor->params();
}

int64_t ModelBundle::param_count() const {
    return predictor->param_count() + encoder->param_count();
}

namespace {

void write_file_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write '" + tmp + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

void append_floats(std::string& blob, const Tensor& t) {
    // Little-endian float32; byte order matches the host on every supported
    // target.
    static_assert(sizeof(float) == 4);
    blob.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * 4);
}

void read_floats(std::ifstream& in, Tensor& t, const std::string& name) {
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * 4));
    if (in.gcount() != static_cast<std::streamsize>(t.data.size() * 4))
        throw IoError("checkpoint blob truncated while reading tensor '" + name + "'");
}

}  // namespace

void save_checkpoint(const ModelBundle& bundle, const std::string& path) {
    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["config"] = json::parse(bundle.cfg.to_json());
    manifest["global_step"] = bundle.global_step;
    manifest["encoder_pretrained"] = bundle.encoder_pretrained;
    manifest["rng"]["seed"] = bundle.rng_seed;
    manifest["rng"]["counter"] = bundle.rng_counter;

    auto params = bundle.checkpoint_params();
    std::string blob;
    auto& tensors = manifest["tensors"] = json::array();
    for (const Parameter* p : params) {
        json e;
        e["name"] = p->name;
        e["shape"] = p->value.shape;
        e["step_count"] = p->step_count;
        tensors.push_back(std::move(e));
        blob.reserve(blob.size() + p->value.data.size() * 12);
        append_floats(blob, p->value);
        append_floats(blob, p->adam_m);
        append_floats(blob, p->adam_v);
    }

    write_file_atomic(path, manifest.dump(2) + "\n");
    write_file_atomic(path + ".bin", blob);
}

ModelBundle load_checkpoint(const std::string& path) {
    std::ifstream mf(path);
    if (!mf) throw IoError("cannot open checkpoint manifest '" + path + "'");
    json manifest;
    try {
        manifest = json::parse(mf);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid checkpoint manifest '" + path + "': " + e.what());
    }

    const int version = manifest.value("format_version", -1);
    if (version != kFormatVersion)
        throw IoError("checkpoint format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kFormatVersion) + ")");

    ModelBundle bundle = ModelBundle::create(RunConfig::from_json(manifest.at("config").dump()));
    bundle.global_step = manifest.at("global_step").get<int64_t>();
    bundle.encoder_pretrained = manifest.value("encoder_pretrained", false);
    bundle.rng_seed = manifest.at("rng").at("seed").get<uint64_t>();
    bundle.rng_counter = manifest.at("rng").at("counter").get<uint64_t>();

    auto params = bundle.checkpoint_params();
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != params.size())
        throw IoError("checkpoint lists " + std::to_string(tensors.size()) +
                      " tensors, model has " + std::to_string(params.size()));

    std::ifstream blob(path + ".bin", std::ios::binary);
    if (!blob) throw IoError("cannot open checkpoint blob '" + path + ".bin'");
    for (size_t i = 0; i < params.size(); ++i) {
        Parameter* p = params[i];
        const auto& e = tensors[i];
        if (e.at("name").get<std::string>() != p->name)
            throw IoError("checkpoint tensor '" + e.at("name").get<std::string>() +
                          "' does not match expected '" + p->name + "'");
        const auto shape = e.at("shape").get<std::vector<int>>();
        if (shape != p->value.shape)
            throw IoError("shape mismatch for tensor '" + p->name + "': checkpoint has " +
                          shape_str(shape) + ", model expects " + shape_str(p->value.shape));
        p->step_count = e.at("step_count").get<int64_t>();
        read_floats(blob, p->value, p->name);
        read_floats(blob, p->adam_m, p->name);
        read_floats(blob, p->adam_v, p->name);
    }
    char extra;
    if (blob.read(&extra, 1))
        throw IoError("checkpoint blob '" + path + ".bin' has trailing bytes");
    return bundle;
}

}  // namespace srdiff

// srdiff command line: train / sr / fuse / interp / eval.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 data errors
// (missing or unreadable images, empty pairings), 4 numeric abort during
// training, 5 dimension-divisibility violations. Diagnostics go to stderr;
// stdout carries only the paths of files written.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "srdiff/metrics.hpp"
#include "srdiff/pairs.hpp"
#include "srdiff/sampler.hpp"
#include "srdiff/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace srdiff;

namespace {

template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

void announce(const std::string& cmd, const json& resolved) {
    std::cerr << "[" << cmd << "] resolved configuration:\n" << resolved.dump(2) << "\n";
}

void emit(const std::string& path) { std::cout << path << "\n"; }

Region parse_region(const std::string& text, int h, int w) {
    Region r;
    char c1, c2, c3;
    std::istringstream is(text);
    if (!(is >> r.top >> c1 >> r.left >> c2 >> r.height >> c3 >> r.width) || c1 != ',' ||
        c2 != ',' || c3 != ',' || !(is >> std::ws).eof())
        throw ConfigError("malformed region '" + text + "', expected \"top,left,height,width\"");
    (void)h;
    (void)w;
    return r;
}

std::vector<float> parse_lambdas(const std::string& text) {
    std::vector<float> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        try {
            size_t pos = 0;
            const float v = std::stof(item, &pos);
            if (pos != item.size()) throw std::invalid_argument(item);
            if (v < 0.0f || v > 1.0f)
                throw ConfigError("lambda " + item + " outside [0, 1]");
            out.push_back(v);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("malformed lambda list '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty lambda list");
    return out;
}

/// x_t snapshots live on the residual scale; map to a viewable [0,1] image.
ImagePlane visualize_state(const Tensor& x) {
    ImagePlane img = ImagePlane::from_tensor(x);
    for (auto& v : img.data) v = 0.5f * v + 0.5f;
    img.clamp01();
    return img;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::string& resume) {
    ModelBundle bundle = resume.empty() ? ModelBundle::create(RunConfig::from_file(config_path))
                                        : load_checkpoint(resume);
    announce("train", json::parse(bundle.cfg.to_json()));
    if (bundle.cfg.data.hr_dir.empty()) throw ConfigError("data.hr_dir is not set");

    Rng crop_rng(bundle.cfg.train.seed ^ 0xc509a11edull);
    PairSet pairs = make_pairs(bundle.cfg.data.hr_dir, bundle.cfg.data.scale,
                               bundle.cfg.data.patch, crop_rng);
    if (pairs.items.empty())
        throw IoError("no usable PNGs in '" + bundle.cfg.data.hr_dir + "' (" +
                      std::to_string(pairs.skipped) + " skipped as too small)");
    std::cerr << "[train] " << pairs.items.size() << " patch pairs, " << pairs.skipped
              << " images skipped\n";

    Trainer trainer(std::move(bundle));
    trainer.fit(pairs, out_dir);
    emit((fs::path(out_dir) / "last.ckpt").string());
    return 0;
}

int cmd_sr(const std::string& ckpt, const std::string& input, const std::string& out_dir,
           uint64_t seed, int num_samples, bool trace) {
    if (num_samples < 1) throw ConfigError("--num-samples must be >= 1");
    ModelBundle model = load_checkpoint(ckpt);
    announce("sr", {{"checkpoint", ckpt},
                    {"input", input},
                    {"output", out_dir},
                    {"seed", seed},
                    {"num_samples", num_samples},
                    {"trace", trace}});
    ImagePlane x_l = load_png(input);
    fs::create_directories(out_dir);

    std::vector<ImagePlane> samples;
    for (int i = 0; i < num_samples; ++i) {
        SampleRequest req{x_l, seed + static_cast<uint64_t>(i), trace && i == 0};
        SampleResult res = super_resolve(req, model);
        const std::string path =
            (fs::path(out_dir) / ("sr_" + std::to_string(seed + i) + ".png")).string();
        save_png(res.sr, path);
        emit(path);
        samples.push_back(std::move(res.sr));

        if (req.record_trace) {
            const int T = model.schedule.T;
            for (int want : {T, T / 2, 1})
                for (size_t k = 0; k < res.trace.timesteps.size(); ++k)
                    if (res.trace.timesteps[k] == want) {
                        const std::string tp =
                            (fs::path(out_dir) / ("trace_t" + std::to_string(want) + ".png"))
                                .string();
                        save_png(visualize_state(res.trace.x[k]), tp);
                        emit(tp);
                    }
        }
    }

    if (num_samples >= 2) {
        ImagePlane sigma_map(samples[0].height, samples[0].width);
        double max_v = 0.0;
        for (size_t k = 0; k < sigma_map.data.size(); ++k) {
            double mean = 0.0;
            for (const auto& s : samples) mean += s.data[k];
            mean /= num_samples;
            double var = 0.0;
            for (const auto& s : samples) {
                const double dv = s.data[k] - mean;
                var += dv * dv;
            }
            sigma_map.data[k] = static_cast<float>(std::sqrt(var / num_samples));
            max_v = std::max(max_v, static_cast<double>(sigma_map.data[k]));
        }
        if (max_v > 0.0)
            for (auto& v : sigma_map.data) v = static_cast<float>(v / max_v);
        const std::string sp = (fs::path(out_dir) / "sigma.png").string();
        save_png(sigma_map, sp);
        emit(sp);

        json sidecar;
        sidecar["base_seed"] = seed;
        sidecar["num_samples"] = num_samples;
        sidecar["mean_sigma"] = pixel_sigma(samples);
        const std::string jp = (fs::path(out_dir) / "sigma.json").string();
        std::ofstream(jp) << sidecar.dump(2) << "\n";
        emit(jp);
    }
    return 0;
}

int cmd_fuse(const std::string& ckpt, const std::string& face_path, const std::string& eye_path,
             const std::string& region_text, int t_bar, uint64_t seed, const std::string& out) {
    ModelBundle model = load_checkpoint(ckpt);
    announce("fuse", {{"checkpoint", ckpt},
                      {"face", face_path},
                      {"eye", eye_path},
                      {"region", region_text},
                      {"tbar", t_bar},
                      {"seed", seed},
                      {"out", out}});
    ImagePlane face = load_png(face_path);
    ImagePlane eye = load_png(eye_path);
    Region region = parse_region(region_text, face.height, face.width);

    ImagePlane fused = content_fuse(face, eye, region, t_bar, seed, model);
    if (out.find('/') != std::string::npos) fs::create_directories(fs::path(out).parent_path());
    save_png(fused, out);
    emit(out);

    // face | eye | fused strip for visual comparison
    ImagePlane strip(face.height, 3 * face.width);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < face.height; ++y)
            for (int x = 0; x < face.width; ++x) {
                strip.at(c, y, x) = face.at(c, y, x);
                strip.at(c, y, x + face.width) = eye.at(c, y, x);
                strip.at(c, y, x + 2 * face.width) = fused.at(c, y, x);
            }
    fs::path sp(out);
    sp.replace_extension();
    const std::string strip_path = sp.string() + "_strip.png";
    save_png(strip, strip_path);
    emit(strip_path);
    return 0;
}

int cmd_interp(const std::string& ckpt, const std::string& input, uint64_t seed_a, uint64_t seed_b,
               const std::string& lambda_list, int t_bar, const std::string& out_dir) {
    std::vector<float> lambdas = parse_lambdas(lambda_list);
    ModelBundle model = load_checkpoint(ckpt);
    announce("interp", {{"checkpoint", ckpt},
                        {"input", input},
                        {"seed_a", seed_a},
                        {"seed_b", seed_b},
                        {"lambda", lambda_list},
                        {"tbar", t_bar},
                        {"out", out_dir}});
    ImagePlane x_l = load_png(input);
    fs::create_directories(out_dir);

    for (float lam : lambdas) {
        ImagePlane img = latent_interpolate(x_l, seed_a, seed_b, lam, t_bar, model);
        char name[64];
        std::snprintf(name, sizeof(name), "interp_lambda%.2f.png", static_cast<double>(lam));
        const std::string path = (fs::path(out_dir) / name).string();
        save_png(img, path);
        emit(path);
    }
    return 0;
}

int cmd_eval(const std::string& sr_dir, const std::string& hr_dir, const std::string& lr_dir,
             int scale, const std::string& out) {
    announce("eval", {{"sr_dir", sr_dir},
                      {"hr_dir", hr_dir},
                      {"lr_dir", lr_dir},
                      {"scale", scale},
                      {"out", out}});
    auto list_pngs = [](const std::string& dir) {
        std::set<std::string> names;
        if (!fs::is_directory(dir)) throw IoError("'" + dir + "' is not a directory");
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".png") names.insert(e.path().filename().string());
        return names;
    };
    const auto sr_names = list_pngs(sr_dir);
    const auto hr_names = list_pngs(hr_dir);

    std::vector<std::string> matched;
    for (const auto& n : sr_names)
        if (hr_names.count(n)) matched.push_back(n);
    for (const auto& n : sr_names)
        if (!hr_names.count(n)) std::cerr << "[eval] unmatched SR file: " << n << "\n";
    for (const auto& n : hr_names)
        if (!sr_names.count(n)) std::cerr << "[eval] unmatched HR file: " << n << "\n";
    if (matched.empty()) throw IoError("no filenames common to '" + sr_dir + "' and '" + hr_dir + "'");

    const bool with_lr = !lr_dir.empty();
    if (with_lr && scale <= 0) throw ConfigError("--scale is required with --lr-dir");

    MetricsReport report;
    report.scale = scale;
    double sum_psnr = 0.0, sum_ssim = 0.0, sum_lr = 0.0;
    for (const auto& name : matched) {
        ImagePlane sr = load_png((fs::path(sr_dir) / name).string());
        ImagePlane hr = load_png((fs::path(hr_dir) / name).string());
        if (sr.height != hr.height || sr.width != hr.width)
            throw ShapeError("eval: '" + name + "' differs in size between SR and HR");
        ImageMetrics m;
        m.name = name;
        m.psnr = psnr(sr, hr);
        m.ssim = ssim(sr, hr);
        if (with_lr) {
            ImagePlane lr = load_png((fs::path(lr_dir) / name).string());
            m.lr_psnr = lr_psnr(sr, lr, scale);
            sum_lr += *m.lr_psnr;
        }
        sum_psnr += m.psnr;
        sum_ssim += m.ssim;
        report.per_image.push_back(std::move(m));
    }
    report.count = static_cast<int>(matched.size());
    report.mean_psnr = sum_psnr / report.count;
    report.mean_ssim = sum_ssim / report.count;
    if (with_lr) report.mean_lr_psnr = sum_lr / report.count;

    std::ofstream(out) << report.to_json() << "\n";
    emit(out);
    fs::path tsv(out);
    tsv.replace_extension(".tsv");
    std::ofstream(tsv) << report.to_tsv();
    emit(tsv.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"srdiff: diffusion-based single-image super-resolution"};
    app.require_subcommand(1);

    std::string config_path, out_dir, resume;
    auto* train = app.add_subcommand("train", "Train a model from a JSON config");
    train->add_option("--config", config_path, "JSON run configuration")->required();
    train->add_option("--out", out_dir, "Output directory for checkpoints and logs")->required();
    train->add_option("--resume", resume, "Checkpoint to resume from");

    std::string ckpt, input;
    uint64_t seed = 0, seed_b = 0;
    int num_samples = 1, t_bar = 50, scale = 0;
    bool trace = false;
    auto* sr = app.add_subcommand("sr", "Super-resolve one LR image");
    sr->add_option("--checkpoint", ckpt, "Model checkpoint")->required();
    sr->add_option("--input", input, "LR input PNG")->required();
    sr->add_option("--output", out_dir, "Output directory")->required();
    sr->add_option("--seed", seed, "Sampling seed")->required();
    sr->add_option("--num-samples", num_samples, "Number of samples (seeds seed..seed+k-1)");
    sr->add_flag("--trace", trace, "Also write reverse-chain snapshots for the first sample");

    std::string face_path, eye_path, region_text, out_path;
    auto* fuse = app.add_subcommand("fuse", "Content fusion between two HR images");
    fuse->add_option("--checkpoint", ckpt, "Model checkpoint")->required();
    fuse->add_option("--face", face_path, "Target HR image")->required();
    fuse->add_option("--eye", eye_path, "Source HR image for the region")->required();
    fuse->add_option("--region", region_text, "HR-space region \"top,left,height,width\"")
        ->required();
    fuse->add_option("--tbar", t_bar, "Diffuse-to timestep (0 = verbatim paste)")->required();
    fuse->add_option("--seed", seed, "Sampling seed")->required();
    fuse->add_option("--out", out_path, "Fused output PNG")->required();

    std::string lambda_list;
    auto* interp = app.add_subcommand("interp", "Latent interpolation between two seeds");
    interp->add_option("--checkpoint", ckpt, "Model checkpoint")->required();
    interp->add_option("--input", input, "LR input PNG")->required();
    interp->add_option("--seed-a", seed, "First latent seed")->required();
    interp->add_option("--seed-b", seed_b, "Second latent seed")->required();
    interp->add_option("--lambda", lambda_list, "Comma list of blend weights in [0,1]")
        ->required();
    interp->add_option("--tbar", t_bar, "Starting timestep")->default_val(50);
    interp->add_option("--out", out_dir, "Output directory")->required();

    std::string sr_dir, hr_dir, lr_dir;
    auto* eval = app.add_subcommand("eval", "Compute metrics over paired directories");
    eval->add_option("--sr-dir", sr_dir, "Directory of SR outputs")->required();
    eval->add_option("--hr-dir", hr_dir, "Directory of HR references")->required();
    eval->add_option("--lr-dir", lr_dir, "Directory of LR inputs (enables LR-PSNR)");
    eval->add_option("--scale", scale, "Upscaling factor (required with --lr-dir)");
    eval->add_option("--out", out_path, "Report JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    if (train->parsed()) return guarded([&] { return cmd_train(config_path, out_dir, resume); });
    if (sr->parsed())
        return guarded([&] { return cmd_sr(ckpt, input, out_dir, seed, num_samples, trace); });
    if (fuse->parsed())
        return guarded(
            [&] { return cmd_fuse(ckpt, face_path, eye_path, region_text, t_bar, seed, out_path); });
    if (interp->parsed())
        return guarded(
            [&] { return cmd_interp(ckpt, input, seed, seed_b, lambda_list, t_bar, out_dir); });
    if (eval->parsed())
        return guarded([&] { return cmd_eval(sr_dir, hr_dir, lr_dir, scale, out_path); });
    return 2;
}

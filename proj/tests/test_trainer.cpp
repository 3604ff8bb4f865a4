#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "srdiff/trainer.hpp"

using namespace srdiff;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
    RunConfig cfg;
    cfg.data.patch = 16;
    cfg.data.scale = 2;
    cfg.train.T = 8;
    cfg.train.c = 4;
    cfg.train.batch_size = 2;
    cfg.train.lr = 1e-3f;
    cfg.train.seed = 5;
    cfg.train.pretrain_steps = 3;
    cfg.train.total_steps = 5;
    cfg.train.checkpoint_every = 100;
    cfg.encoder.num_rrdb_blocks = 1;
    cfg.encoder.feature_channels = 8;
    cfg.encoder.growth_channels = 4;
    cfg.encoder.scale = 2;
    return cfg;
}

PairSet one_pair_set(int patch = 16, int scale = 2) {
    PairSet set;
    set.patch = patch;
    set.scale = scale;
    ImagePlane hr = testutil::make_test_image(patch, patch);
    set.items.push_back(make_pair(hr, "synthetic.png", scale, patch, nullptr));
    return set;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    TempDir(const char* tag) : path(fs::temp_directory_path() / tag) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("lr halving schedule") {
    RunConfig cfg = tiny_config();
    cfg.train.lr = 8e-4f;
    cfg.train.lr_halve_every = 10;
    Trainer t(cfg);
    CHECK(t.lr_at(0) == doctest::Approx(8e-4f));
    CHECK(t.lr_at(9) == doctest::Approx(8e-4f));
    CHECK(t.lr_at(10) == doctest::Approx(4e-4f));
    CHECK(t.lr_at(25) == doctest::Approx(2e-4f));
}

TEST_CASE("encoder pretraining reduces the L1 loss") {
    RunConfig cfg = tiny_config();
    cfg.train.pretrain_steps = 60;
    Trainer t(cfg);
    PairSet pairs = one_pair_set();
    auto curve = t.pretrain(pairs);
    REQUIRE(curve.size() == 60);
    CHECK(curve.back() < curve.front());
    CHECK(t.bundle().encoder_pretrained);
}

TEST_CASE("first diffusion loss is E|N(0,1)| with the zero-initialized head") {
    Trainer t(tiny_config());
    PairSet pairs = one_pair_set();
    double acc = 0.0;
    for (int i = 0; i < 20; ++i) acc += t.diffusion_step(pairs, {}, /*update=*/false);
    CHECK(acc / 20.0 == doctest::Approx(0.7979).epsilon(0.05));
}

TEST_CASE("update moves the predictor but never the frozen encoder") {
    Trainer t(tiny_config());
    PairSet pairs = one_pair_set();
    auto enc_before = t.bundle().encoder->params();
    std::vector<std::vector<float>> enc_copy;
    for (auto* p : enc_before) enc_copy.push_back(p->value.data);
    auto pred_first = t.bundle().predictor->params().front()->value.data;

    for (int i = 0; i < 3; ++i) (void)t.diffusion_step(pairs);
    CHECK(t.bundle().global_step == 3);

    auto enc_after = t.bundle().encoder->params();
    for (size_t i = 0; i < enc_after.size(); ++i) CHECK(enc_after[i]->value.data == enc_copy[i]);
    CHECK(t.bundle().predictor->params().front()->value.data != pred_first);
}

TEST_CASE("instrumentation hook sees exactly what is diffused") {
    PairSet pairs = one_pair_set();
    const PairItem& item = pairs.items[0];

    SUBCASE("residual prediction on: x0 is x_H - up(x_L)") {
        Trainer t(tiny_config());
        Tensor want = residual(item.hr, item.lr, pairs.scale);
        TrainHooks hooks;
        bool called = false;
        hooks.on_diffusion_x0 = [&](int64_t step, const Tensor& x0) {
            called = true;
            CHECK(step == 1);
            REQUIRE(x0.shape == std::vector<int>{2, 3, 16, 16});
            for (int n = 0; n < 2; ++n)
                for (int64_t i = 0; i < want.numel(); ++i)
                    REQUIRE(x0.data[static_cast<size_t>(n * want.numel() + i)] == want[i]);
        };
        (void)t.diffusion_step(pairs, hooks);
        CHECK(called);
    }
    SUBCASE("residual prediction off: x0 is x_H itself") {
        RunConfig cfg = tiny_config();
        cfg.train.residual_prediction = false;
        Trainer t(cfg);
        Tensor want = item.hr.to_tensor();
        TrainHooks hooks;
        hooks.on_diffusion_x0 = [&](int64_t, const Tensor& x0) {
            for (int64_t i = 0; i < want.numel(); ++i)
                REQUIRE(x0.data[static_cast<size_t>(i)] == want[i]);
        };
        (void)t.diffusion_step(pairs, hooks);
    }
}

TEST_CASE("resume reproduces the uninterrupted loss sequence exactly") {
    TempDir dir("srdiff_trainer_resume");
    PairSet pairs = one_pair_set();
    RunConfig cfg = tiny_config();

    std::vector<float> uninterrupted;
    {
        Trainer t(cfg);
        for (int i = 0; i < 6; ++i) uninterrupted.push_back(t.diffusion_step(pairs));
    }

    std::vector<float> split;
    const std::string ckpt = (dir.path / "mid.ckpt").string();
    {
        Trainer t(cfg);
        for (int i = 0; i < 3; ++i) split.push_back(t.diffusion_step(pairs));
        save_checkpoint(t.bundle(), ckpt);
    }
    {
        Trainer t(load_checkpoint(ckpt));
        CHECK(t.bundle().global_step == 3);
        for (int i = 0; i < 3; ++i) split.push_back(t.diffusion_step(pairs));
    }
    REQUIRE(split.size() == uninterrupted.size());
    for (size_t i = 0; i < split.size(); ++i) CHECK(split[i] == uninterrupted[i]);
}

TEST_CASE("fit writes logs, checkpoints and a summary; reruns are byte-identical") {
    TempDir d1("srdiff_fit_1"), d2("srdiff_fit_2");
    PairSet pairs = one_pair_set();
    RunConfig cfg = tiny_config();

    Trainer(cfg).fit(pairs, d1.path.string());
    Trainer(cfg).fit(pairs, d2.path.string());

    CHECK(fs::exists(d1.path / "loss.txt"));
    CHECK(fs::exists(d1.path / "pretrain_loss.txt"));
    CHECK(fs::exists(d1.path / "last.ckpt"));
    CHECK(fs::exists(d1.path / "last.ckpt.bin"));
    CHECK(fs::exists(d1.path / "summary.json"));

    CHECK(slurp((d1.path / "loss.txt").string()) == slurp((d2.path / "loss.txt").string()));
    CHECK(slurp((d1.path / "pretrain_loss.txt").string()) ==
          slurp((d2.path / "pretrain_loss.txt").string()));

    // The loss log has one "step<tab>loss<tab>lr" line per diffusion step.
    std::istringstream log(slurp((d1.path / "loss.txt").string()));
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) {
        ++lines;
        CHECK(std::count(line.begin(), line.end(), '\t') == 2);
    }
    CHECK(lines == cfg.train.total_steps);

    ModelBundle done = load_checkpoint((d1.path / "last.ckpt").string());
    CHECK(done.global_step == cfg.train.total_steps);
    CHECK(done.encoder_pretrained);
}

TEST_CASE("a shared pretrained encoder can be adopted from a checkpoint") {
    TempDir dir("srdiff_trainer_adopt");
    PairSet pairs = one_pair_set();
    RunConfig cfg = tiny_config();
    cfg.train.pretrain_steps = 10;

    Trainer donor(cfg);
    donor.pretrain(pairs);
    const std::string ckpt = (dir.path / "enc.ckpt").string();
    save_checkpoint(donor.bundle(), ckpt);

    RunConfig cfg2 = cfg;
    cfg2.train.c = 8;  // different predictor, same encoder shape
    Trainer t(cfg2);
    t.adopt_pretrained_encoder(ckpt);
    CHECK(t.bundle().encoder_pretrained);
    auto a = donor.bundle().encoder->params();
    auto b = t.bundle().encoder->params();
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i]->value.data == b[i]->value.data);

    RunConfig bad = cfg;
    bad.encoder.feature_channels = 16;
    bad.encoder.growth_channels = 8;
    Trainer mismatch(bad);
    CHECK_THROWS_AS(mismatch.adopt_pretrained_encoder(ckpt), ConfigError);
}

TEST_CASE("empty pair set is a data error") {
    Trainer t(tiny_config());
    PairSet empty;
    CHECK_THROWS_AS(t.diffusion_step(empty), IoError);
    CHECK_THROWS_AS(t.pretrain(empty), IoError);
}

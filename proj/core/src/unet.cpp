#include "srdiff/unet.hpp"

#include <cmath>

namespace srdiff {

Tensor timestep_embedding(int t, int dim) {
    if (dim % 2 != 0) throw ShapeError("timestep_embedding: dim must be even");
    if (t < 0) throw std::runtime_error("timestep_embedding: t must be >= 0");
    Tensor e({dim});
    for (int i = 0; i < dim / 2; ++i) {
        const double w = std::pow(10000.0, -2.0 * i / dim);
        e[2 * i] = static_cast<float>(std::sin(t * w));
        e[2 * i + 1] = static_cast<float>(std::cos(t * w));
    }
    return e;
}

NoisePredictor::ResBlock::ResBlock(const std::string& name, int in_ch, int out_ch, int time_dim,
                                   Rng& rng)
    : conv1(name + ".conv1", in_ch, out_ch, 3, 1, 1, rng),
      conv2(name + ".conv2", out_ch, out_ch, 3, 1, 1, rng),
      time_proj(name + ".time_proj", time_dim, out_ch, rng) {
    if (in_ch != out_ch) shortcut.emplace(name + ".shortcut", in_ch, out_ch, 1, 1, 0, rng);
}

ag::Value NoisePredictor::ResBlock::operator()(const ag::Value& x, const ag::Value& temb) const {
    auto h = ag::mish(conv1(x));
    h = ag::add_chan_bias(h, time_proj(temb));
    h = ag::mish(conv2(h));
    auto s = shortcut ? (*shortcut)(x) : x;
    return ag::add(h, s);
}

void NoisePredictor::ResBlock::collect(std::vector<Parameter*>& out) {
    conv1.collect(out);
    conv2.collect(out);
    time_proj.collect(out);
    if (shortcut) shortcut->collect(out);
}

NoisePredictor::NoisePredictor(const PredictorConfig& cfg, Rng& rng) : cfg_(cfg) {
    const int c = cfg.base_channels;
    const int tdim = 4 * c;
    // Widths entering/leaving each contracting step; channels double only
    // where the multiplier grows (steps 2 and 4 for the default config).
    std::array<int, 5> w{};
    w[0] = c;
    for (int i = 0; i < 4; ++i) w[i + 1] = c * cfg.channel_mults[static_cast<size_t>(i)];

    conv_in_ = Conv2dLayer("unet.conv_in", cfg.image_channels, c, 3, 1, 1, rng);
    fuse_ = Conv2dLayer("unet.fuse", c + cfg.cond_channels, c, 1, 1, 0, rng);
    time1_ = DenseLayer("unet.time1", cfg.time_embed_dim(), tdim, rng);
    time2_ = DenseLayer("unet.time2", tdim, tdim, rng);

    for (int i = 0; i < 4; ++i) {
        const std::string base = "unet.cs" + std::to_string(i + 1);
        contracting_[i].res1 = ResBlock(base + ".res1", w[i], w[i + 1], tdim, rng);
        contracting_[i].res2 = ResBlock(base + ".res2", w[i + 1], w[i + 1], tdim, rng);
        contracting_[i].down = Conv2dLayer(base + ".down", w[i + 1], w[i + 1], 3, 2, 1, rng);
    }
    mid1_ = ResBlock("unet.mid1", w[4], w[4], tdim, rng);
    mid2_ = ResBlock("unet.mid2", w[4], w[4], tdim, rng);
    for (int i = 0; i < 4; ++i) {
        // Expansive step i mirrors contracting step 4-i: it upsamples the
        // incoming w[4-i] features, concatenates the matching skip (also
        // w[4-i] channels), and narrows to w[3-i].
        const std::string base = "unet.es" + std::to_string(i + 1);
        const int win = w[4 - i];
        const int wout = w[3 - i];
        expansive_[i].up = ConvT2dLayer(base + ".up", win, win, 2, 2, 0, rng);
        expansive_[i].res1 = ResBlock(base + ".res1", 2 * win, wout, tdim, rng);
        expansive_[i].res2 = ResBlock(base + ".res2", wout, wout, tdim, rng);
    }
    conv_out_ = Conv2dLayer("unet.conv_out", c, cfg.image_channels, 3, 1, 1, rng,
                            /*zero_init=*/true);
}

ag::Value NoisePredictor::forward(const ag::Value& x_t, const ag::Value& x_e,
                                  const std::vector<int>& t) const {
    const auto& xs = x_t->value.shape;
    if (xs.size() != 4 || xs[1] != cfg_.image_channels)
        throw ShapeError("noise predictor: expected (N," + std::to_string(cfg_.image_channels) +
                         ",H,W) input, got " + shape_str(xs));
    if (xs[2] % 16 != 0 || xs[3] % 16 != 0)
        throw ShapeError("noise predictor: spatial dims " + shape_str(xs) +
                         " must be divisible by 16");
    const auto& es = x_e->value.shape;
    if (es.size() != 4 || es[0] != xs[0] || es[1] != cfg_.cond_channels || es[2] != xs[2] ||
        es[3] != xs[3])
        throw ShapeError("noise predictor: condition features " + shape_str(es) +
                         " misaligned with input " + shape_str(xs));
    if (static_cast<int>(t.size()) != xs[0])
        throw ShapeError("noise predictor: need one timestep per batch element");

    const int n = xs[0];
    const int edim = cfg_.time_embed_dim();
    Tensor temb0({n, edim});
    for (int i = 0; i < n; ++i) {
        Tensor e = timestep_embedding(t[static_cast<size_t>(i)], edim);
        std::copy(e.data.begin(), e.data.end(), temb0.data.begin() + i * edim);
    }
    auto temb = ag::mish(time2_(ag::mish(time1_(ag::constant(std::move(temb0))))));

    auto h = ag::mish(conv_in_(x_t));
    h = fuse_(ag::concat_channels({h, x_e}));

    std::vector<ag::Value> skips;
    for (const auto& step : contracting_) {
        h = step.res1(h, temb);
        h = step.res2(h, temb);
        skips.push_back(h);
        h = step.down(h);
    }
    h = mid1_(h, temb);
    h = mid2_(h, temb);
    for (const auto& step : expansive_) {
        h = step.up(h);
        h = ag::concat_channels({h, skips.back()});
        skips.pop_back();
        h = step.res1(h, temb);
        h = step.res2(h, temb);
    }
    return conv_out_(ag::mish(h));
}

Tensor NoisePredictor::predict(const Tensor& x_t, const Tensor& x_e, int t) const {
    ag::NoGradGuard ng;
    auto lift = [](const Tensor& t3) {
        if (t3.ndim() == 4) return t3;
        if (t3.ndim() != 3) throw ShapeError("predict: expected a 3-d CHW tensor");
        return Tensor({1, t3.shape[0], t3.shape[1], t3.shape[2]}, t3.data);
    };
    Tensor out4 = forward(ag::constant(lift(x_t)), ag::constant(lift(x_e)), {t})->value;
    if (x_t.ndim() == 3)
        return Tensor({out4.shape[1], out4.shape[2], out4.shape[3]}, std::move(out4.data));
    return out4;
}

std::vector<Parameter*> NoisePredictor::params() {
    std::vector<Parameter*> out;
    conv_in_.collect(out);
    fuse_.collect(out);
    time1_.collect(out);
    time2_.collect(out);
    for (auto& s : contracting_) {
        s.res1.collect(out);
        s.res2.collect(out);
        s.down.collect(out);
    }
    mid1_.collect(out);
    mid2_.collect(out);
    for (auto& s : expansive_) {
        s.up.collect(out);
        s.res1.collect(out);
        s.res2.collect(out);
    }
    conv_out_.collect(out);
    return out;
}

std::vector<const Parameter*> NoisePredictor::params() const {
    auto ps = const_cast<NoisePredictor*>(this)->params();
    return {ps.begin(), ps.end()};
}

int64_t NoisePredictor::param_count() const {
    int64_t n = 0;
    for (const Parameter* p : params()) n += p->value.numel();
    return n;
}

}  // namespace srdiff

#include "srdiff/rrdb.hpp"

#include <cmath>

namespace srdiff {

namespace {
constexpr float kResidualScale = 0.2f;
constexpr float kLreluSlope = 0.2f;
}  // namespace

LrEncoder::DenseBlock::DenseBlock(const std::string& name, int nf, int gc, Rng& rng) {
    for (int i = 0; i < 5; ++i) {
        const int in_ch = nf + i * gc;
        const int out_ch = i == 4 ? nf : gc;
        convs.emplace_back(name + ".conv" + std::to_string(i + 1), in_ch, out_ch, 3, 1, 1, rng);
    }
}

ag::Value LrEncoder::DenseBlock::operator()(const ag::Value& x) const {
    std::vector<ag::Value> feats{x};
    for (size_t i = 0; i + 1 < convs.size(); ++i)
        feats.push_back(ag::leaky_relu(convs[i](ag::concat_channels(feats)), kLreluSlope));
    auto out = convs.back()(ag::concat_channels(feats));
    return ag::add(x, ag::scale(out, kResidualScale));
}

void LrEncoder::DenseBlock::collect(std::vector<Parameter*>& out) {
    for (auto& c : convs) c.collect(out);
}

LrEncoder::Rrdb::Rrdb(const std::string& name, int nf, int gc, Rng& rng)
    : db1(name + ".db1", nf, gc, rng),
      db2(name + ".db2", nf, gc, rng),
      db3(name + ".db3", nf, gc, rng) {}

ag::Value LrEncoder::Rrdb::operator()(const ag::Value& x) const {
    auto h = db3(db2(db1(x)));
    return ag::add(x, ag::scale(h, kResidualScale));
}

void LrEncoder::Rrdb::collect(std::vector<Parameter*>& out) {
    db1.collect(out);
    db2.collect(out);
    db3.collect(out);
}

LrEncoder::LrEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
    if (cfg.num_rrdb_blocks < 1)
        throw std::runtime_error("lr encoder: need at least one RRDB block");
    if (cfg.scale < 2 || (cfg.scale & (cfg.scale - 1)) != 0)
        throw std::runtime_error("lr encoder: scale must be a power of two >= 2");
    const int nf = cfg.feature_channels;
    conv_first_ = Conv2dLayer("enc.conv_first", cfg.image_channels, nf, 3, 1, 1, rng);
    for (int i = 0; i < cfg.num_rrdb_blocks; ++i)
        blocks_.emplace_back("enc.rrdb" + std::to_string(i + 1), nf, cfg.growth_channels, rng);
    trunk_conv_ = Conv2dLayer("enc.trunk_conv", nf, nf, 3, 1, 1, rng);
    for (int s = cfg.scale; s > 1; s /= 2) {
        const auto idx = std::to_string(up_convs_.size() + 1);
        up_convs_.emplace_back("enc.up_conv" + idx, nf, nf, 3, 1, 1, rng);
    }
    conv_hr_ = Conv2dLayer("enc.conv_hr", nf, nf, 3, 1, 1, rng);
    conv_last_ = Conv2dLayer("enc.conv_last", nf, cfg.image_channels, 3, 1, 1, rng);
}

ag::Value LrEncoder::features(const ag::Value& x) const {
    auto fea = conv_first_(x);
    auto trunk = fea;
    for (const auto& b : blocks_) trunk = b(trunk);
    fea = ag::add(fea, trunk_conv_(trunk));
    for (const auto& up : up_convs_)
        fea = ag::leaky_relu(up(ag::nearest_upsample(fea, 2)), kLreluSlope);
    return ag::leaky_relu(conv_hr_(fea), kLreluSlope);
}

ag::Value LrEncoder::sr(const ag::Value& x) const { return conv_last_(features(x)); }

namespace {
Tensor lift3(const Tensor& t) {
    if (t.ndim() == 4) return t;
    if (t.ndim() != 3) throw ShapeError("lr encoder: expected a 3-d CHW tensor");
    return Tensor({1, t.shape[0], t.shape[1], t.shape[2]}, t.data);
}
Tensor drop_batch(Tensor t4, bool had_batch) {
    if (had_batch) return t4;
    return Tensor({t4.shape[1], t4.shape[2], t4.shape[3]}, std::move(t4.data));
}
}  // namespace

Tensor LrEncoder::encode(const Tensor& x_l) const {
    ag::NoGradGuard ng;
    return drop_batch(features(ag::constant(lift3(x_l)))->value, x_l.ndim() == 4);
}

Tensor LrEncoder::sr_head(const Tensor& x_l) const {
    ag::NoGradGuard ng;
    return drop_batch(sr(ag::constant(lift3(x_l)))->value, x_l.ndim() == 4);
}

std::vector<Parameter*> LrEncoder::params() {
    std::vector<Parameter*> out;
    conv_first_.collect(out);
    for (auto& b : blocks_) b.collect(out);
    trunk_conv_.collect(out);
    for (auto& u : up_convs_) u.collect(out);
    conv_hr_.collect(out);
    conv_last_.collect(out);
    return out;
}

std::vector<const Parameter*> LrEncoder::params() const {
    auto ps = const_cast<LrEncoder*>(this)->params();
    return {ps.begin(), ps.end()};
}

int64_t LrEncoder::param_count() const {
    int64_t n = 0;
    for (const Parameter* p : params()) n += p->value.numel();
    return n;
}

}  // namespace srdiff

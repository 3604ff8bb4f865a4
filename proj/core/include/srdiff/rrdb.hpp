#pragma once

// RRDB-based LR encoder: residual-in-residual dense blocks without batch
// normalization, a global trunk residual, and nearest-neighbor + conv
// upsampling stages. encode() returns the 32-channel HR-aligned features
// just before the 3-channel head; sr_head() applies the head (used only for
// L1 pretraining).

#include <memory>
#include <vector>

#include "srdiff/layers.hpp"
#include "srdiff/tensor.hpp"

namespace srdiff {

struct EncoderConfig {
    int num_rrdb_blocks = 8;
    int feature_channels = 32;  // nf
    int growth_channels = 16;   // gc
    int scale = 4;              // power of two
    int image_channels = 3;
};

class LrEncoder {
public:
    LrEncoder(const EncoderConfig& cfg, Rng& rng);

    /// Graph-building forward of everything except the final head conv.
    ag::Value features(const ag::Value& x) const;
    /// features() plus the final 3-channel conv.
    ag::Value sr(const ag::Value& x) const;

    /// Grad-free forwards; accept (3,h,w) or (N,3,h,w).
    Tensor encode(const Tensor& x_l) const;
    Tensor sr_head(const Tensor& x_l) const;

    std::vector<Parameter*> params();
    std::vector<const Parameter*> params() const;
    int64_t param_count() const;
    const EncoderConfig& config() const { return cfg_; }

    /// Weight access for the instrumented encode-vs-head test.
    const Conv2dLayer& head_conv() const { return conv_last_; }

private:
    struct DenseBlock {
        std::vector<Conv2dLayer> convs;  // 5 convs, dense concatenation
        DenseBlock() = default;
        DenseBlock(const std::string& name, int nf, int gc, Rng& rng);
        ag::Value operator()(const ag::Value& x) const;
        void collect(std::vector<Parameter*>& out);
    };
    struct Rrdb {
        DenseBlock db1, db2, db3;
        Rrdb() = default;
        Rrdb(const std::string& name, int nf, int gc, Rng& rng);
        ag::Value operator()(const ag::Value& x) const;
        void collect(std::vector<Parameter*>& out);
    };

    EncoderConfig cfg_;
    Conv2dLayer conv_first_, trunk_conv_;
    std::vector<Rrdb> blocks_;
    std::vector<Conv2dLayer> up_convs_;
    Conv2dLayer conv_hr_, conv_last_;
};

}  // namespace srdiff

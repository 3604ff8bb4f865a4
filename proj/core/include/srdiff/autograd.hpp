#pragma once

// Reverse-mode autograd over an eagerly evaluated op graph. Each node records
// its op tag and parents, so a recorded graph can also be re-evaluated in
// double precision (used by the finite-difference test oracle).

#include <array>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "srdiff/optim.hpp"
#include "srdiff/tensor.hpp"

namespace srdiff::ag {

enum class Op {
    Leaf,
    Const,
    Conv2d,        // parents: x, kernel, bias; iattr: stride, pad
    ConvT2d,       // parents: x, kernel, bias; iattr: stride, pad
    Dense,         // parents: x, weight, bias
    Add,           // parents: a, b (same shape)
    AddChanBias,   // parents: x (n,c,h,w), v ((c) or (n,c))
    Mul,           // parents: a, b (same shape)
    Scale,         // parents: x; fattr: factor
    Concat,        // parents: n-ary, NCHW channel concat
    Crop,          // parents: x; iattr: top, left, h, w
    NearestUp,     // parents: x; iattr: factor
    Mish,          // parents: x
    LeakyRelu,     // parents: x; fattr: slope
    Abs,           // parents: x
    Sum,           // parents: x -> scalar
    Mean,          // parents: x -> scalar
};

struct Node {
    Op op;
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    bool requires_grad = false;
    std::array<int, 4> iattr{};
    float fattr = 0.0f;
    std::vector<std::shared_ptr<Node>> parents;
    Parameter* param = nullptr;  // set for Leaf nodes
};

using Value = std::shared_ptr<Node>;

/// While a guard is alive, leaf() detaches from its parameter and ops do not
/// record parents; forward values are still computed.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

Value constant(Tensor t);
Value leaf(Parameter& p);

Value conv2d(const Value& x, const Value& kernel, const Value& bias, int stride, int padding);
Value conv2d_transpose(const Value& x, const Value& kernel, const Value& bias, int stride,
                       int padding);
Value dense(const Value& x, const Value& weight, const Value& bias);
Value add(const Value& a, const Value& b);
Value add_chan_bias(const Value& x, const Value& v);
Value mul(const Value& a, const Value& b);
Value scale(const Value& x, float factor);
Value sub(const Value& a, const Value& b);
Value concat_channels(const std::vector<Value>& xs);
Value crop(const Value& x, int top, int left, int height, int width);
Value nearest_upsample(const Value& x, int factor);
Value mish(const Value& x);
Value leaky_relu(const Value& x, float slope);
Value abs(const Value& x);
Value sum(const Value& x);
Value mean(const Value& x);

/// Mean absolute error between two same-shape values.
Value l1_loss(const Value& a, const Value& b);

/// Accumulates d(loss)/d(param) into every reachable Parameter's grad.
/// loss must be scalar.
void backward(const Value& loss);

/// Re-evaluates the recorded graph in double precision. Leaf values may be
/// overridden (keyed by Parameter) to support finite-difference probing.
using F64Overrides = std::unordered_map<const Parameter*, const std::vector<double>*>;
std::vector<double> eval_f64(const Value& v, const F64Overrides& overrides = {});
double eval_scalar_f64(const Value& v, const F64Overrides& overrides = {});

}  // namespace srdiff::ag

#include "srdiff/autograd.hpp"

#include <cassert>
#include <cmath>
#include <unordered_set>

#include "srdiff/kernels.hpp"

namespace srdiff::ag {

namespace {

thread_local int g_no_grad_depth = 0;

void require(bool cond, const char* msg) {
    if (!cond) throw ShapeError(msg);
}

void require_4d(const Tensor& t, const char* what) {
    if (t.ndim() != 4)
        throw ShapeError(std::string(what) + ": expected a 4-d NCHW tensor, got shape " +
                         shape_str(t.shape));
}

Value make_node(Op op, Tensor value, std::vector<Value> parents, std::array<int, 4> iattr = {},
                float fattr = 0.0f) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = std::move(value);
    n->iattr = iattr;
    n->fattr = fattr;
    if (grad_enabled()) {
        for (const auto& p : parents)
            if (p->requires_grad) n->requires_grad = true;
        n->parents = std::move(parents);
    }
#ifndef NDEBUG
    assert(n->value.all_finite() && "non-finite value produced by an op");
#endif
    return n;
}

void ensure_grad(Node& n) {
    if (n.grad.data.empty()) n.grad = Tensor(n.value.shape);
}

void accum(Tensor& dst, const Tensor& src) {
    for (int64_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

}  // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }
bool grad_enabled() { return g_no_grad_depth == 0; }

Value constant(Tensor t) { return make_node(Op::Const, std::move(t), {}); }

Value leaf(Parameter& p) {
    auto n = std::make_shared<Node>();
    n->op = grad_enabled() ? Op::Leaf : Op::Const;
    n->value = p.value;
    if (grad_enabled()) {
        n->requires_grad = true;
        n->param = &p;
    }
    return n;
}

Value conv2d(const Value& x, const Value& kernel, const Value& bias, int stride, int padding) {
    require_4d(x->value, "conv2d input");
    require_4d(kernel->value, "conv2d kernel");
    const auto& xs = x->value.shape;
    const auto& ks = kernel->value.shape;
    const int co = ks[0], ci = ks[1], k = ks[2];
    require(ks[2] == ks[3], "conv2d: kernel must be square");
    require(k % 2 == 1, "conv2d: kernel spatial size must be odd");
    if (xs[1] != ci)
        throw ShapeError("conv2d: input shape " + shape_str(xs) + " does not match kernel shape " +
                         shape_str(ks));
    if (bias->value.shape != std::vector<int>{co})
        throw ShapeError("conv2d: bias shape " + shape_str(bias->value.shape) +
                         " does not match kernel shape " + shape_str(ks));
    const int ho = kern::conv_out_dim(xs[2], k, stride, padding);
    const int wo = kern::conv_out_dim(xs[3], k, stride, padding);
    require(ho >= 1 && wo >= 1, "conv2d: empty output");
    Tensor y({xs[0], co, ho, wo});
    kern::conv2d_forward(x->value.data.data(), xs[0], ci, xs[2], xs[3], kernel->value.data.data(),
                         co, k, bias->value.data.data(), stride, padding, y.data.data());
    return make_node(Op::Conv2d, std::move(y), {x, kernel, bias}, {stride, padding, 0, 0});
}

Value conv2d_transpose(const Value& x, const Value& kernel, const Value& bias, int stride,
                       int padding) {
    require_4d(x->value, "conv2d_transpose input");
    require_4d(kernel->value, "conv2d_transpose kernel");
    require(stride >= 1, "conv2d_transpose: stride must be >= 1");
    const auto& xs = x->value.shape;
    const auto& ks = kernel->value.shape;
    const int co = ks[0], ci = ks[1], k = ks[2];
    require(ks[2] == ks[3], "conv2d_transpose: kernel must be square");
    if (xs[1] != co)
        throw ShapeError("conv2d_transpose: input shape " + shape_str(xs) +
                         " does not match kernel shape " + shape_str(ks));
    if (bias->value.shape != std::vector<int>{ci})
        throw ShapeError("conv2d_transpose: bias shape " + shape_str(bias->value.shape) +
                         " does not match kernel shape " + shape_str(ks));
    const int ho = kern::convt_out_dim(xs[2], k, stride, padding);
    const int wo = kern::convt_out_dim(xs[3], k, stride, padding);
    require(ho >= 1 && wo >= 1, "conv2d_transpose: empty output");
    Tensor y({xs[0], ci, ho, wo});
    kern::convt2d_forward(x->value.data.data(), xs[0], co, xs[2], xs[3],
                          kernel->value.data.data(), ci, k, bias->value.data.data(), stride,
                          padding, y.data.data());
    return make_node(Op::ConvT2d, std::move(y), {x, kernel, bias}, {stride, padding, 0, 0});
}

Value dense(const Value& x, const Value& weight, const Value& bias) {
    const auto& xs = x->value.shape;
    const auto& ws = weight->value.shape;
    require(ws.size() == 2, "dense: weight must be 2-d");
    require(xs.size() == 1 || xs.size() == 2, "dense: input must be 1-d or 2-d");
    const int in = xs.back();
    const int n = xs.size() == 2 ? xs[0] : 1;
    const int out = ws[0];
    if (in != ws[1])
        throw ShapeError("dense: input shape " + shape_str(xs) + " does not match weight shape " +
                         shape_str(ws));
    if (bias->value.shape != std::vector<int>{out})
        throw ShapeError("dense: bias shape " + shape_str(bias->value.shape) +
                         " does not match weight shape " + shape_str(ws));
    Tensor y(xs.size() == 2 ? std::vector<int>{n, out} : std::vector<int>{out});
    kern::dense_forward(x->value.data.data(), n, in, weight->value.data.data(), out,
                        bias->value.data.data(), y.data.data());
    return make_node(Op::Dense, std::move(y), {x, weight, bias});
}

Value add(const Value& a, const Value& b) {
    check_same_shape(a->value, b->value, "add");
    Tensor y(a->value.shape);
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = a->value[i] + b->value[i];
    return make_node(Op::Add, std::move(y), {a, b});
}

Value add_chan_bias(const Value& x, const Value& v) {
    require_4d(x->value, "add_chan_bias input");
    const auto& xs = x->value.shape;
    const auto& vs = v->value.shape;
    const bool per_sample = vs.size() == 2;
    if (!((vs.size() == 1 && vs[0] == xs[1]) ||
          (per_sample && vs[0] == xs[0] && vs[1] == xs[1])))
        throw ShapeError("add_chan_bias: bias shape " + shape_str(vs) +
                         " does not broadcast over input shape " + shape_str(xs));
    Tensor y = x->value;
    const int hw = xs[2] * xs[3];
    for (int n = 0; n < xs[0]; ++n)
        for (int c = 0; c < xs[1]; ++c) {
            const float b = per_sample ? v->value[n * xs[1] + c] : v->value[c];
            float* p = y.data.data() + (static_cast<int64_t>(n) * xs[1] + c) * hw;
            for (int i = 0; i < hw; ++i) p[i] += b;
        }
    return make_node(Op::AddChanBias, std::move(y), {x, v});
}

Value mul(const Value& a, const Value& b) {
    check_same_shape(a->value, b->value, "mul");
    Tensor y(a->value.shape);
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = a->value[i] * b->value[i];
    return make_node(Op::Mul, std::move(y), {a, b});
}

Value scale(const Value& x, float factor) {
    Tensor y(x->value.shape);
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = factor * x->value[i];
    return make_node(Op::Scale, std::move(y), {x}, {}, factor);
}

Value sub(const Value& a, const Value& b) { return add(a, scale(b, -1.0f)); }

Value concat_channels(const std::vector<Value>& xs) {
    require(!xs.empty(), "concat_channels: empty input list");
    require_4d(xs[0]->value, "concat_channels input");
    const auto& s0 = xs[0]->value.shape;
    int ctotal = 0;
    for (const auto& x : xs) {
        require_4d(x->value, "concat_channels input");
        const auto& s = x->value.shape;
        if (s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3])
            throw ShapeError("concat_channels: shape " + shape_str(s) + " incompatible with " +
                             shape_str(s0));
        ctotal += s[1];
    }
    Tensor y({s0[0], ctotal, s0[2], s0[3]});
    const int hw = s0[2] * s0[3];
    for (int n = 0; n < s0[0]; ++n) {
        int coff = 0;
        for (const auto& x : xs) {
            const int c = x->value.shape[1];
            std::copy_n(x->value.data.data() + static_cast<int64_t>(n) * c * hw,
                        static_cast<int64_t>(c) * hw,
                        y.data.data() + (static_cast<int64_t>(n) * ctotal + coff) * hw);
            coff += c;
        }
    }
    return make_node(Op::Concat, std::move(y), xs);
}

Value crop(const Value& x, int top, int left, int height, int width) {
    require_4d(x->value, "crop input");
    const auto& s = x->value.shape;
    require(top >= 0 && left >= 0 && height >= 1 && width >= 1 && top + height <= s[2] &&
                left + width <= s[3],
            "crop: region out of bounds");
    Tensor y({s[0], s[1], height, width});
    for (int n = 0; n < s[0]; ++n)
        for (int c = 0; c < s[1]; ++c)
            for (int yy = 0; yy < height; ++yy)
                for (int xx = 0; xx < width; ++xx)
                    y.at4(n, c, yy, xx) = x->value.at4(n, c, top + yy, left + xx);
    return make_node(Op::Crop, std::move(y), {x}, {top, left, height, width});
}

Value nearest_upsample(const Value& x, int factor) {
    require_4d(x->value, "nearest_upsample input");
    require(factor >= 1, "nearest_upsample: factor must be >= 1");
    const auto& s = x->value.shape;
    Tensor y({s[0], s[1], s[2] * factor, s[3] * factor});
    for (int n = 0; n < s[0]; ++n)
        for (int c = 0; c < s[1]; ++c)
            for (int yy = 0; yy < s[2] * factor; ++yy)
                for (int xx = 0; xx < s[3] * factor; ++xx)
                    y.at4(n, c, yy, xx) = x->value.at4(n, c, yy / factor, xx / factor);
    return make_node(Op::NearestUp, std::move(y), {x}, {factor, 0, 0, 0});
}

Value mish(const Value& x) {
    Tensor y(x->value.shape);
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = kern::mish(x->value[i]);
    return make_node(Op::Mish, std::move(y), {x});
}

Value leaky_relu(const Value& x, float slope) {
    Tensor y(x->value.shape);
    for (int64_t i = 0; i < y.numel(); ++i) {
        const float v = x->value[i];
        y[i] = v > 0.0f ? v : slope * v;
    }
    return make_node(Op::LeakyRelu, std::move(y), {x}, {}, slope);
}

Value abs(const Value& x) {
    Tensor y(x->value.shape);
    for (int64_t i = 0; i < y.numel(); ++i) y[i] = std::fabs(x->value[i]);
    return make_node(Op::Abs, std::move(y), {x});
}

Value sum(const Value& x) {
    double acc = 0.0;
    for (float v : x->value.data) acc += v;
    return make_node(Op::Sum, Tensor::scalar(static_cast<float>(acc)), {x});
}

Value mean(const Value& x) {
    double acc = 0.0;
    for (float v : x->value.data) acc += v;
    return make_node(Op::Mean, Tensor::scalar(static_cast<float>(acc / x->value.numel())), {x});
}

Value l1_loss(const Value& a, const Value& b) { return mean(abs(sub(a, b))); }

namespace {

std::vector<Node*> topo_order(Node* root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;  // parents before children
}

void backward_into_parents(Node& n) {
    auto parent_grad = [&](size_t i) -> Tensor* {
        Node* p = n.parents[i].get();
        if (!p->requires_grad) return nullptr;
        ensure_grad(*p);
        return &p->grad;
    };
    switch (n.op) {
        case Op::Leaf:
        case Op::Const:
            break;
        case Op::Conv2d: {
            Node& x = *n.parents[0];
            Node& k = *n.parents[1];
            const auto& xs = x.value.shape;
            const auto& ks = k.value.shape;
            const int stride = n.iattr[0], pad = n.iattr[1];
            if (Tensor* dx = parent_grad(0))
                kern::conv2d_backward_data(n.grad.data.data(), xs[0], ks[0], k.value.data.data(),
                                           ks[1], ks[2], stride, pad, dx->data.data(), xs[2],
                                           xs[3]);
            if (Tensor* dk = parent_grad(1))
                kern::conv2d_backward_kernel(x.value.data.data(), xs[0], ks[1], xs[2], xs[3],
                                             n.grad.data.data(), ks[0], ks[2], stride, pad,
                                             dk->data.data());
            if (Tensor* db = parent_grad(2)) {
                const auto& ys = n.value.shape;
                const int hw = ys[2] * ys[3];
                for (int b = 0; b < ys[0]; ++b)
                    for (int c = 0; c < ys[1]; ++c) {
                        const float* g =
                            n.grad.data.data() + (static_cast<int64_t>(b) * ys[1] + c) * hw;
                        double acc = 0.0;
                        for (int i = 0; i < hw; ++i) acc += g[i];
                        (*db)[c] += static_cast<float>(acc);
                    }
            }
            break;
        }
        case Op::ConvT2d: {
            Node& x = *n.parents[0];
            Node& k = *n.parents[1];
            const auto& xs = x.value.shape;  // (n, co, h, w)
            const auto& ks = k.value.shape;  // (co, ci, k, k)
            const int stride = n.iattr[0], pad = n.iattr[1];
            // d/dx of the adjoint is the forward conv with the same kernel.
            if (Tensor* dx = parent_grad(0)) {
                Tensor tmp(xs);
                kern::conv2d_forward(n.grad.data.data(), xs[0], ks[1], n.value.shape[2],
                                     n.value.shape[3], k.value.data.data(), ks[0], ks[2],
                                     static_cast<const float*>(nullptr), stride, pad,
                                     tmp.data.data());
                accum(*dx, tmp);
            }
            if (Tensor* dk = parent_grad(1))
                kern::conv2d_backward_kernel(n.grad.data.data(), xs[0], ks[1], n.value.shape[2],
                                             n.value.shape[3], x.value.data.data(), ks[0], ks[2],
                                             stride, pad, dk->data.data());
            if (Tensor* db = parent_grad(2)) {
                const auto& ys = n.value.shape;
                const int hw = ys[2] * ys[3];
                for (int b = 0; b < ys[0]; ++b)
                    for (int c = 0; c < ys[1]; ++c) {
                        const float* g =
                            n.grad.data.data() + (static_cast<int64_t>(b) * ys[1] + c) * hw;
                        double acc = 0.0;
                        for (int i = 0; i < hw; ++i) acc += g[i];
                        (*db)[c] += static_cast<float>(acc);
                    }
            }
            break;
        }
        case Op::Dense: {
            Node& x = *n.parents[0];
            Node& w = *n.parents[1];
            const int in = x.value.shape.back();
            const int rows = x.value.ndim() == 2 ? x.value.shape[0] : 1;
            const int out = w.value.shape[0];
            kern::CMapRM<float> dym(n.grad.data.data(), rows, out);
            if (Tensor* dx = parent_grad(0)) {
                kern::MapRM<float> dxm(dx->data.data(), rows, in);
                kern::CMapRM<float> wm(w.value.data.data(), out, in);
                dxm.noalias() += dym * wm;
            }
            if (Tensor* dw = parent_grad(1)) {
                kern::MapRM<float> dwm(dw->data.data(), out, in);
                kern::CMapRM<float> xm(x.value.data.data(), rows, in);
                dwm.noalias() += dym.transpose() * xm;
            }
            if (Tensor* db = parent_grad(2))
                for (int c = 0; c < out; ++c) (*db)[c] += dym.col(c).sum();
            break;
        }
        case Op::Add: {
            if (Tensor* da = parent_grad(0)) accum(*da, n.grad);
            if (Tensor* db = parent_grad(1)) accum(*db, n.grad);
            break;
        }
        case Op::AddChanBias: {
            if (Tensor* dx = parent_grad(0)) accum(*dx, n.grad);
            if (Tensor* dv = parent_grad(1)) {
                const auto& xs = n.value.shape;
                const bool per_sample = n.parents[1]->value.ndim() == 2;
                const int hw = xs[2] * xs[3];
                for (int b = 0; b < xs[0]; ++b)
                    for (int c = 0; c < xs[1]; ++c) {
                        const float* g =
                            n.grad.data.data() + (static_cast<int64_t>(b) * xs[1] + c) * hw;
                        double acc = 0.0;
                        for (int i = 0; i < hw; ++i) acc += g[i];
                        (*dv)[per_sample ? b * xs[1] + c : c] += static_cast<float>(acc);
                    }
            }
            break;
        }
        case Op::Mul: {
            if (Tensor* da = parent_grad(0))
                for (int64_t i = 0; i < n.grad.numel(); ++i)
                    (*da)[i] += n.grad[i] * n.parents[1]->value[i];
            if (Tensor* db = parent_grad(1))
                for (int64_t i = 0; i < n.grad.numel(); ++i)
                    (*db)[i] += n.grad[i] * n.parents[0]->value[i];
            break;
        }
        case Op::Scale: {
            if (Tensor* dx = parent_grad(0))
                for (int64_t i = 0; i < n.grad.numel(); ++i) (*dx)[i] += n.fattr * n.grad[i];
            break;
        }
        case Op::Concat: {
            const auto& ys = n.value.shape;
            const int hw = ys[2] * ys[3];
            for (int b = 0; b < ys[0]; ++b) {
                int coff = 0;
                for (size_t pi = 0; pi < n.parents.size(); ++pi) {
                    const int c = n.parents[pi]->value.shape[1];
                    if (Tensor* dp = parent_grad(pi)) {
                        const float* g =
                            n.grad.data.data() + (static_cast<int64_t>(b) * ys[1] + coff) * hw;
                        float* d = dp->data.data() + static_cast<int64_t>(b) * c * hw;
                        for (int64_t i = 0; i < static_cast<int64_t>(c) * hw; ++i) d[i] += g[i];
                    }
                    coff += c;
                }
            }
            break;
        }
        case Op::Crop: {
            if (Tensor* dx = parent_grad(0)) {
                const auto& ys = n.value.shape;
                const int top = n.iattr[0], left = n.iattr[1];
                Tensor& g = n.grad;
                Tensor& d = *dx;
                for (int b = 0; b < ys[0]; ++b)
                    for (int c = 0; c < ys[1]; ++c)
                        for (int yy = 0; yy < ys[2]; ++yy)
                            for (int xx = 0; xx < ys[3]; ++xx)
                                d.at4(b, c, top + yy, left + xx) += g.at4(b, c, yy, xx);
            }
            break;
        }
        case Op::NearestUp: {
            if (Tensor* dx = parent_grad(0)) {
                const auto& ys = n.value.shape;
                const int f = n.iattr[0];
                for (int b = 0; b < ys[0]; ++b)
                    for (int c = 0; c < ys[1]; ++c)
                        for (int yy = 0; yy < ys[2]; ++yy)
                            for (int xx = 0; xx < ys[3]; ++xx)
                                dx->at4(b, c, yy / f, xx / f) += n.grad.at4(b, c, yy, xx);
            }
            break;
        }
        case Op::Mish: {
            if (Tensor* dx = parent_grad(0))
                for (int64_t i = 0; i < n.grad.numel(); ++i)
                    (*dx)[i] += n.grad[i] * kern::mish_grad(n.parents[0]->value[i]);
            break;
        }
        case Op::LeakyRelu: {
            if (Tensor* dx = parent_grad(0))
                for (int64_t i = 0; i < n.grad.numel(); ++i)
                    (*dx)[i] += n.grad[i] * (n.parents[0]->value[i] > 0.0f ? 1.0f : n.fattr);
            break;
        }
        case Op::Abs: {
            if (Tensor* dx = parent_grad(0))
                for (int64_t i = 0; i < n.grad.numel(); ++i) {
                    const float v = n.parents[0]->value[i];
                    (*dx)[i] += n.grad[i] * (v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f));
                }
            break;
        }
        case Op::Sum: {
            if (Tensor* dx = parent_grad(0)) {
                const float g = n.grad[0];
                for (auto& d : dx->data) d += g;
            }
            break;
        }
        case Op::Mean: {
            if (Tensor* dx = parent_grad(0)) {
                const float g = n.grad[0] / static_cast<float>(n.parents[0]->value.numel());
                for (auto& d : dx->data) d += g;
            }
            break;
        }
    }
}

}  // namespace

void backward(const Value& loss) {
    if (loss->value.numel() != 1)
        throw ShapeError("backward: loss must be scalar, got shape " +
                         shape_str(loss->value.shape));
    if (!loss->requires_grad) return;
    auto order = topo_order(loss.get());
    ensure_grad(*loss);
    loss->grad[0] = 1.0f;
    // topo_order yields parents first; walk children-to-parents.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (!n->requires_grad || n->grad.data.empty()) continue;
        if (n->op == Op::Leaf && n->param) {
            accum(n->param->grad, n->grad);
            continue;
        }
        backward_into_parents(*n);
    }
}

namespace {

using DVec = std::vector<double>;

const DVec& eval_f64_node(const Node* n, const F64Overrides& overrides,
                          std::unordered_map<const Node*, DVec>& memo) {
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;

    auto to_dvec = [](const Tensor& t) {
        DVec v(t.data.begin(), t.data.end());
        return v;
    };

    DVec out;
    switch (n->op) {
        case Op::Leaf: {
            if (n->param) {
                auto ov = overrides.find(n->param);
                out = ov != overrides.end() ? *ov->second : to_dvec(n->param->value);
            } else {
                out = to_dvec(n->value);
            }
            break;
        }
        case Op::Const:
            out = to_dvec(n->value);
            break;
        default: {
            std::vector<const DVec*> ps;
            ps.reserve(n->parents.size());
            for (const auto& p : n->parents)
                ps.push_back(&eval_f64_node(p.get(), overrides, memo));
            const auto& ys = n->value.shape;
            out.assign(static_cast<size_t>(n->value.numel()), 0.0);
            switch (n->op) {
                case Op::Conv2d: {
                    const auto& xs = n->parents[0]->value.shape;
                    const auto& ks = n->parents[1]->value.shape;
                    kern::conv2d_forward(ps[0]->data(), xs[0], ks[1], xs[2], xs[3], ps[1]->data(),
                                         ks[0], ks[2], ps[2]->data(), n->iattr[0], n->iattr[1],
                                         out.data());
                    break;
                }
                case Op::ConvT2d: {
                    const auto& xs = n->parents[0]->value.shape;
                    const auto& ks = n->parents[1]->value.shape;
                    kern::convt2d_forward(ps[0]->data(), xs[0], ks[0], xs[2], xs[3], ps[1]->data(),
                                          ks[1], ks[2], ps[2]->data(), n->iattr[0], n->iattr[1],
                                          out.data());
                    break;
                }
                case Op::Dense: {
                    const auto& xs = n->parents[0]->value.shape;
                    const auto& ws = n->parents[1]->value.shape;
                    const int rows = xs.size() == 2 ? xs[0] : 1;
                    kern::dense_forward(ps[0]->data(), rows, ws[1], ps[1]->data(), ws[0],
                                        ps[2]->data(), out.data());
                    break;
                }
                case Op::Add:
                    for (size_t i = 0; i < out.size(); ++i) out[i] = (*ps[0])[i] + (*ps[1])[i];
                    break;
                case Op::AddChanBias: {
                    const bool per_sample = n->parents[1]->value.ndim() == 2;
                    const int hw = ys[2] * ys[3];
                    for (int b = 0; b < ys[0]; ++b)
                        for (int c = 0; c < ys[1]; ++c) {
                            const double add = (*ps[1])[per_sample ? b * ys[1] + c : c];
                            const int64_t off = (static_cast<int64_t>(b) * ys[1] + c) * hw;
                            for (int i = 0; i < hw; ++i) out[off + i] = (*ps[0])[off + i] + add;
                        }
                    break;
                }
                case Op::Mul:
                    for (size_t i = 0; i < out.size(); ++i) out[i] = (*ps[0])[i] * (*ps[1])[i];
                    break;
                case Op::Scale:
                    for (size_t i = 0; i < out.size(); ++i) out[i] = n->fattr * (*ps[0])[i];
                    break;
                case Op::Concat: {
                    const int hw = ys[2] * ys[3];
                    for (int b = 0; b < ys[0]; ++b) {
                        int coff = 0;
                        for (size_t pi = 0; pi < ps.size(); ++pi) {
                            const int c = n->parents[pi]->value.shape[1];
                            std::copy_n(ps[pi]->data() + static_cast<int64_t>(b) * c * hw,
                                        static_cast<int64_t>(c) * hw,
                                        out.data() + (static_cast<int64_t>(b) * ys[1] + coff) * hw);
                            coff += c;
                        }
                    }
                    break;
                }
                case Op::Crop: {
                    const auto& xs = n->parents[0]->value.shape;
                    const int top = n->iattr[0], left = n->iattr[1];
                    for (int b = 0; b < ys[0]; ++b)
                        for (int c = 0; c < ys[1]; ++c)
                            for (int yy = 0; yy < ys[2]; ++yy)
                                for (int xx = 0; xx < ys[3]; ++xx)
                                    out[((static_cast<int64_t>(b) * ys[1] + c) * ys[2] + yy) *
                                            ys[3] +
                                        xx] =
                                        (*ps[0])[((static_cast<int64_t>(b) * xs[1] + c) * xs[2] +
                                                  top + yy) *
                                                     xs[3] +
                                                 left + xx];
                    break;
                }
                case Op::NearestUp: {
                    const auto& xs = n->parents[0]->value.shape;
                    const int f = n->iattr[0];
                    for (int b = 0; b < ys[0]; ++b)
                        for (int c = 0; c < ys[1]; ++c)
                            for (int yy = 0; yy < ys[2]; ++yy)
                                for (int xx = 0; xx < ys[3]; ++xx)
                                    out[((static_cast<int64_t>(b) * ys[1] + c) * ys[2] + yy) *
                                            ys[3] +
                                        xx] =
                                        (*ps[0])[((static_cast<int64_t>(b) * xs[1] + c) * xs[2] +
                                                  yy / f) *
                                                     xs[3] +
                                                 xx / f];
                    break;
                }
                case Op::Mish:
                    for (size_t i = 0; i < out.size(); ++i) out[i] = kern::mish((*ps[0])[i]);
                    break;
                case Op::LeakyRelu:
                    for (size_t i = 0; i < out.size(); ++i) {
                        const double v = (*ps[0])[i];
                        out[i] = v > 0.0 ? v : n->fattr * v;
                    }
                    break;
                case Op::Abs:
                    for (size_t i = 0; i < out.size(); ++i) out[i] = std::fabs((*ps[0])[i]);
                    break;
                case Op::Sum: {
                    double acc = 0.0;
                    for (double v : *ps[0]) acc += v;
                    out[0] = acc;
                    break;
                }
                case Op::Mean: {
                    double acc = 0.0;
                    for (double v : *ps[0]) acc += v;
                    out[0] = acc / static_cast<double>(ps[0]->size());
                    break;
                }
                default:
                    break;
            }
        }
    }
    return memo.emplace(n, std::move(out)).first->second;
}

}  // namespace

std::vector<double> eval_f64(const Value& v, const F64Overrides& overrides) {
    std::unordered_map<const Node*, DVec> memo;
    return eval_f64_node(v.get(), overrides, memo);
}

double eval_scalar_f64(const Value& v, const F64Overrides& overrides) {
    auto r = eval_f64(v, overrides);
    if (r.size() != 1) throw ShapeError("eval_scalar_f64: value is not scalar");
    return r[0];
}

}  // namespace srdiff::ag

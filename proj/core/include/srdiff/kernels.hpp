#pragma once

// Raw numeric kernels, templated on the scalar type. The autograd graph runs
// them in float; the finite-difference oracle re-evaluates recorded graphs in
// double through the same entry points. Convolutions go through im2col and an
// Eigen GEMM.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace srdiff::kern {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using MapRM = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using CMapRM =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}
inline int convt_out_dim(int in, int k, int stride, int pad) {
    return (in - 1) * stride - 2 * pad + k;
}

// col has ci*k*k rows and ho*wo columns; x is one image (ci, h, w).
template <typename T>
void im2col(const T* x, int ci, int h, int w, int k, int stride, int pad, Mat<T>& col) {
    const int ho = conv_out_dim(h, k, stride, pad);
    const int wo = conv_out_dim(w, k, stride, pad);
    col.resize(ci * k * k, ho * wo);
    for (int c = 0; c < ci; ++c) {
        const T* xc = x + static_cast<int64_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const int row = (c * k + ky) * k + kx;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        col(row, oy * wo + ox) = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                                     ? xc[iy * w + ix]
                                                     : T(0);
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add col back into one image (ci, h, w).
template <typename T>
void col2im_accum(const Mat<T>& col, int ci, int h, int w, int k, int stride, int pad, T* x) {
    const int ho = conv_out_dim(h, k, stride, pad);
    const int wo = conv_out_dim(w, k, stride, pad);
    for (int c = 0; c < ci; ++c) {
        T* xc = x + static_cast<int64_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const int row = (c * k + ky) * k + kx;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= w) continue;
                        xc[iy * w + ix] += col(row, oy * wo + ox);
                    }
                }
            }
        }
    }
}

// y (n, co, ho, wo) = conv(x (n, ci, h, w), kernel (co, ci, k, k)) + bias (co).
template <typename T>
void conv2d_forward(const T* x, int n, int ci, int h, int w, const T* kernel, int co, int k,
                    const T* bias, int stride, int pad, T* y) {
    const int ho = conv_out_dim(h, k, stride, pad);
    const int wo = conv_out_dim(w, k, stride, pad);
    CMapRM<T> kmat(kernel, co, ci * k * k);
    Mat<T> col;
    for (int i = 0; i < n; ++i) {
        im2col(x + static_cast<int64_t>(i) * ci * h * w, ci, h, w, k, stride, pad, col);
        MapRM<T> ymat(y + static_cast<int64_t>(i) * co * ho * wo, co, ho * wo);
        ymat.noalias() = kmat * col;
        if (bias)
            for (int c = 0; c < co; ++c) ymat.row(c).array() += bias[c];
    }
}

// dx += adjoint of conv2d w.r.t. its input; dy is (n, co, ho, wo).
template <typename T>
void conv2d_backward_data(const T* dy, int n, int co, const T* kernel, int ci, int k, int stride,
                          int pad, T* dx, int h, int w) {
    const int ho = conv_out_dim(h, k, stride, pad);
    const int wo = conv_out_dim(w, k, stride, pad);
    CMapRM<T> kmat(kernel, co, ci * k * k);
    Mat<T> col;
    for (int i = 0; i < n; ++i) {
        CMapRM<T> dymat(dy + static_cast<int64_t>(i) * co * ho * wo, co, ho * wo);
        col.noalias() = kmat.transpose() * dymat;
        col2im_accum(col, ci, h, w, k, stride, pad, dx + static_cast<int64_t>(i) * ci * h * w);
    }
}

// dk (co, ci, k, k) += gradient of conv2d w.r.t. the kernel.
template <typename T>
void conv2d_backward_kernel(const T* x, int n, int ci, int h, int w, const T* dy, int co, int k,
                            int stride, int pad, T* dk) {
    const int ho = conv_out_dim(h, k, stride, pad);
    const int wo = conv_out_dim(w, k, stride, pad);
    MapRM<T> dkmat(dk, co, ci * k * k);
    Mat<T> col;
    for (int i = 0; i < n; ++i) {
        im2col(x + static_cast<int64_t>(i) * ci * h * w, ci, h, w, k, stride, pad, col);
        CMapRM<T> dymat(dy + static_cast<int64_t>(i) * co * ho * wo, co, ho * wo);
        dkmat.noalias() += dymat * col.transpose();
    }
}

// Transposed convolution: input (n, co, h, w) with the conv kernel (co, ci,
// k, k) produces (n, ci, ho, wo); exact adjoint of conv2d with the same
// geometry. bias has ci entries.
template <typename T>
void convt2d_forward(const T* x, int n, int co, int h, int w, const T* kernel, int ci, int k,
                     const T* bias, int stride, int pad, T* y) {
    const int ho = convt_out_dim(h, k, stride, pad);
    const int wo = convt_out_dim(w, k, stride, pad);
    CMapRM<T> kmat(kernel, co, ci * k * k);
    Mat<T> col;
    const int64_t plane = static_cast<int64_t>(ci) * ho * wo;
    for (int i = 0; i < n; ++i) {
        CMapRM<T> xmat(x + static_cast<int64_t>(i) * co * h * w, co, h * w);
        col.noalias() = kmat.transpose() * xmat;
        T* yi = y + i * plane;
        std::fill(yi, yi + plane, T(0));
        col2im_accum(col, ci, ho, wo, k, stride, pad, yi);
        if (bias) {
            for (int c = 0; c < ci; ++c) {
                T* yc = yi + static_cast<int64_t>(c) * ho * wo;
                for (int p = 0; p < ho * wo; ++p) yc[p] += bias[c];
            }
        }
    }
}

// y (n, out) = x (n, in) * W^T (out, in) + b.
template <typename T>
void dense_forward(const T* x, int n, int in, const T* w, int out, const T* b, T* y) {
    CMapRM<T> xm(x, n, in);
    CMapRM<T> wm(w, out, in);
    MapRM<T> ym(y, n, out);
    ym.noalias() = xm * wm.transpose();
    if (b)
        for (int c = 0; c < out; ++c) ym.col(c).array() += b[c];
}

template <typename T>
T softplus(T x) {
    if (x > T(20)) return x;
    return std::log1p(std::exp(x));
}

template <typename T>
T mish(T x) {
    return x * std::tanh(softplus(x));
}

template <typename T>
T mish_grad(T x) {
    const T sp = softplus(x);
    const T th = std::tanh(sp);
    const T sig = T(1) / (T(1) + std::exp(-x));
    return th + x * (T(1) - th * th) * sig;
}

}  // namespace srdiff::kern

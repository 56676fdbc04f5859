#pragma once

// Forward and analytic backward kernels for the (1,k) layer family.
// Activations are (C,H,W): C channels, H antenna rows, W subcarriers.
// Kernels have height 1, so every op works row-by-row along W.

#include <cstddef>
#include <string>

#include "csiloc/core/error.hpp"
#include "csiloc/core/tensor.hpp"

namespace csiloc::nn {

enum class Padding { valid, same };

inline const char* to_string(Padding p) { return p == Padding::valid ? "valid" : "same"; }

inline Padding parse_padding(const std::string& s) {
    if (s == "valid") return Padding::valid;
    if (s == "same") return Padding::same;
    throw FormatError("unknown padding '" + s + "'");
}

/// Output width and left zero-padding of a strided window over W columns.
struct WindowGeometry {
    std::size_t out_width = 0;
    std::size_t pad_left = 0;
};

inline WindowGeometry window_geometry(std::size_t width, std::size_t kernel, std::size_t stride,
                                      Padding padding) {
    if (kernel == 0 || stride == 0) throw ShapeError("kernel and stride must be positive");
    if (padding == Padding::same) {
        const std::size_t out = (width + stride - 1) / stride;
        const std::size_t needed = (out - 1) * stride + kernel;
        const std::size_t total = needed > width ? needed - width : 0;
        return {out, total / 2};
    }
    if (kernel > width)
        throw ShapeError("window of " + std::to_string(kernel) + " exceeds width " +
                         std::to_string(width));
    return {(width - kernel) / stride + 1, 0};
}

template <typename T>
void require_rank(const BasicTensor<T>& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         t.shape().str());
}

// ---------------------------------------------------------------- conv (1,k)

template <typename T>
struct ConvGrads {
    BasicTensor<T> input;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

/// Saved state of one conv forward call, consumed by conv1xk_backward.
template <typename T>
struct ConvContext {
    const BasicTensor<T>* input = nullptr;
    const BasicTensor<T>* weights = nullptr;
    std::size_t stride = 1;
    Padding padding = Padding::valid;
};

template <typename T>
void check_conv_args(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias) {
    require_rank(input, 3, "conv input");
    require_rank(weights, 4, "conv weights");
    require_rank(bias, 1, "conv bias");
    if (weights.dim(2) != 1) throw ShapeError("conv kernel height must be 1");
    if (weights.dim(1) != input.dim(0))
        throw ShapeError("conv input has " + std::to_string(input.dim(0)) +
                         " channels, weights expect " + std::to_string(weights.dim(1)));
    if (bias.dim(0) != weights.dim(0)) throw ShapeError("conv bias length != filter count");
}

/// out[f,h,o] = bias[f] + sum_c sum_j w[f,c,0,j] * in[c,h,o*s+j-pad]
/// Accumulation order: bias first, then channels, then kernel taps.
template <typename T>
BasicTensor<T> conv1xk_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                               const BasicTensor<T>& bias, std::size_t stride, Padding padding) {
    check_conv_args(input, weights, bias);
    const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const std::size_t F = weights.dim(0), K = weights.dim(3);
    const auto geo = window_geometry(W, K, stride, padding);
    const std::size_t Wo = geo.out_width;
    const auto pad = static_cast<std::ptrdiff_t>(geo.pad_left);
    BasicTensor<T> out(Shape{F, H, Wo});
    const T* x = input.data();
    const T* w = weights.data();
    T* y = out.data();
    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t h = 0; h < H; ++h) {
            T* yrow = y + (f * H + h) * Wo;
            for (std::size_t o = 0; o < Wo; ++o) {
                const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(o * stride) - pad;
                T acc = bias[f];
                for (std::size_t c = 0; c < C; ++c) {
                    const T* xrow = x + (c * H + h) * W;
                    const T* wk = w + (f * C + c) * K;
                    for (std::size_t j = 0; j < K; ++j) {
                        const std::ptrdiff_t col = start + static_cast<std::ptrdiff_t>(j);
                        if (col < 0 || col >= static_cast<std::ptrdiff_t>(W)) continue;
                        acc += wk[j] * xrow[col];
                    }
                }
                yrow[o] = acc;
            }
        }
    }
    return out;
}

/// Adds the gradients of conv1xk_forward into grad_input, grad_weights and grad_bias.
template <typename T>
void conv1xk_backward_accumulate(const ConvContext<T>& ctx, const BasicTensor<T>& grad_out,
                                 BasicTensor<T>& grad_input, BasicTensor<T>& grad_weights,
                                 BasicTensor<T>& grad_bias) {
    if (ctx.input == nullptr || ctx.weights == nullptr)
        throw ShapeError("conv backward called without a saved forward context");
    const auto& input = *ctx.input;
    const auto& weights = *ctx.weights;
    require_rank(input, 3, "conv context input");
    require_rank(weights, 4, "conv context weights");
    const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const std::size_t F = weights.dim(0), K = weights.dim(3);
    if (weights.dim(1) != C) throw ShapeError("conv context channels disagree");
    const auto geo = window_geometry(W, K, ctx.stride, ctx.padding);
    const std::size_t Wo = geo.out_width;
    if (!(grad_out.shape() == Shape{F, H, Wo}))
        throw ShapeError("conv grad_out " + grad_out.shape().str() + " != forward output " +
                         Shape{F, H, Wo}.str());
    input.require_same_shape(grad_input, "conv grad_input");
    weights.require_same_shape(grad_weights, "conv grad_weights");
    if (grad_bias.size() != F) throw ShapeError("conv grad_bias length != filter count");
    const auto pad = static_cast<std::ptrdiff_t>(geo.pad_left);
    const auto Ws = static_cast<std::ptrdiff_t>(W);

    const T* x = input.data();
    const T* w = weights.data();
    const T* gy = grad_out.data();
    T* gx = grad_input.data();
    T* gw = grad_weights.data();
    for (std::size_t f = 0; f < F; ++f) {
        T gb = 0;
        for (std::size_t h = 0; h < H; ++h) {
            const T* gyrow = gy + (f * H + h) * Wo;
            for (std::size_t o = 0; o < Wo; ++o) {
                const T go = gyrow[o];
                gb += go;
                if (go == T{0}) continue;
                const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(o * ctx.stride) - pad;
                const std::size_t j0 = start < 0 ? static_cast<std::size_t>(-start) : 0;
                const std::size_t j1 = start + static_cast<std::ptrdiff_t>(K) > Ws
                                           ? static_cast<std::size_t>(Ws - start)
                                           : K;
                for (std::size_t c = 0; c < C; ++c) {
                    const T* xrow = x + (c * H + h) * W;
                    T* gxrow = gx + (c * H + h) * W;
                    const T* wk = w + (f * C + c) * K;
                    T* gwk = gw + (f * C + c) * K;
                    for (std::size_t j = j0; j < j1; ++j) {
                        const auto col = static_cast<std::size_t>(start + static_cast<std::ptrdiff_t>(j));
                        gwk[j] += go * xrow[col];
                        gxrow[col] += go * wk[j];
                    }
                }
            }
        }
        grad_bias[f] += gb;
    }
}

/// Exact gradients of conv1xk_forward with respect to input, weights and bias.
/// grad_bias[f] is the sum of grad_out over the spatial positions of filter f.
template <typename T>
ConvGrads<T> conv1xk_backward(const ConvContext<T>& ctx, const BasicTensor<T>& grad_out) {
    if (ctx.input == nullptr || ctx.weights == nullptr)
        throw ShapeError("conv backward called without a saved forward context");
    ConvGrads<T> g{BasicTensor<T>(ctx.input->shape()), BasicTensor<T>(ctx.weights->shape()),
                   BasicTensor<T>(Shape{ctx.weights->dim(0)})};
    conv1xk_backward_accumulate(ctx, grad_out, g.input, g.weights, g.bias);
    return g;
}

// ---------------------------------------------------------------- relu

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
    BasicTensor<T> out = input;
    for (auto& v : out.values()) v = v > T{0} ? v : T{0};
    return out;
}

/// Passes grad where the forward input was strictly positive.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out) {
    input.require_same_shape(grad_out, "relu backward");
    BasicTensor<T> g(input.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = input[i] > T{0} ? grad_out[i] : T{0};
    return g;
}

// ---------------------------------------------------------------- avgpool (1,p)

template <typename T>
BasicTensor<T> avgpool1xp_forward(const BasicTensor<T>& input, std::size_t pool, std::size_t stride) {
    require_rank(input, 3, "avgpool input");
    const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const std::size_t Wo = window_geometry(W, pool, stride, Padding::valid).out_width;
    BasicTensor<T> out(Shape{C, H, Wo});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t h = 0; h < H; ++h) {
            const T* row = input.data() + (c * H + h) * W;
            for (std::size_t o = 0; o < Wo; ++o) {
                T acc = 0;
                for (std::size_t j = 0; j < pool; ++j) acc += row[o * stride + j];
                out.at(c, h, o) = acc / static_cast<T>(pool);
            }
        }
    return out;
}

template <typename T>
BasicTensor<T> avgpool1xp_backward(const Shape& input_shape, const BasicTensor<T>& grad_out,
                                   std::size_t pool, std::size_t stride) {
    if (input_shape.rank != 3) throw ShapeError("avgpool backward: input must be rank 3");
    const std::size_t C = input_shape[0], H = input_shape[1], W = input_shape[2];
    const std::size_t Wo = window_geometry(W, pool, stride, Padding::valid).out_width;
    if (!(grad_out.shape() == Shape{C, H, Wo}))
        throw ShapeError("avgpool grad_out " + grad_out.shape().str() + " != " +
                         Shape{C, H, Wo}.str());
    BasicTensor<T> g(input_shape);
    const T inv = T{1} / static_cast<T>(pool);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t h = 0; h < H; ++h) {
            T* row = g.data() + (c * H + h) * W;
            for (std::size_t o = 0; o < Wo; ++o) {
                const T share = grad_out.at(c, h, o) * inv;
                for (std::size_t j = 0; j < pool; ++j) row[o * stride + j] += share;
            }
        }
    return g;
}

// ---------------------------------------------------------------- dense

template <typename T>
struct DenseGrads {
    BasicTensor<T> input;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

/// y = W x + b over the flattened input.
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias) {
    require_rank(weights, 2, "dense weights");
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    if (input.size() != n)
        throw ShapeError("dense input length " + std::to_string(input.size()) + " != " +
                         std::to_string(n));
    if (bias.size() != m) throw ShapeError("dense bias length != unit count");
    BasicTensor<T> out(Shape{m});
    const T* x = input.data();
    for (std::size_t i = 0; i < m; ++i) {
        const T* wr = weights.data() + i * n;
        T acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += wr[j] * x[j];
        out[i] = acc + bias[i];
    }
    return out;
}

/// Adds grad_W += g (x) x and grad_b += g; writes grad_input = W^T g (shaped like the input).
template <typename T>
BasicTensor<T> dense_backward_accumulate(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                                         const BasicTensor<T>& grad_out,
                                         BasicTensor<T>& grad_weights, BasicTensor<T>& grad_bias) {
    require_rank(weights, 2, "dense weights");
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    if (input.size() != n || grad_out.size() != m)
        throw ShapeError("dense backward length mismatch");
    weights.require_same_shape(grad_weights, "dense grad_weights");
    if (grad_bias.size() != m) throw ShapeError("dense grad_bias length != unit count");
    BasicTensor<T> gin(input.shape());
    const T* x = input.data();
    T* gx = gin.data();
    for (std::size_t i = 0; i < m; ++i) {
        const T go = grad_out[i];
        grad_bias[i] += go;
        if (go == T{0}) continue;
        const T* wr = weights.data() + i * n;
        T* gwr = grad_weights.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            gwr[j] += go * x[j];
            gx[j] += go * wr[j];
        }
    }
    return gin;
}

/// grad_input = W^T g (shaped like the input), grad_W = g (x) x, grad_b = g.
template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out) {
    require_rank(weights, 2, "dense weights");
    DenseGrads<T> g{BasicTensor<T>{}, BasicTensor<T>(weights.shape()),
                    BasicTensor<T>(Shape{weights.dim(0)})};
    g.input = dense_backward_accumulate(input, weights, grad_out, g.weights, g.bias);
    return g;
}

// ---------------------------------------------------------------- residual add

template <typename T>
BasicTensor<T> residual_add(const BasicTensor<T>& main, const BasicTensor<T>& skip) {
    if (!(main.shape() == skip.shape()))
        throw ShapeError("identity skip requires equal shapes: " + main.shape().str() + " vs " +
                         skip.shape().str());
    return main + skip;
}

/// Both branches receive grad_out unchanged.
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> residual_add_backward(const BasicTensor<T>& grad_out) {
    return {grad_out, grad_out};
}

} // namespace csiloc::nn

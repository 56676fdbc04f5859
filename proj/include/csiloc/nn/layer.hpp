#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "csiloc/core/rng.hpp"
#include "csiloc/core/tensor.hpp"
#include "csiloc/nn/ops.hpp"

namespace csiloc::nn {

/// Trainable tensors of one affine map with their gradient and momentum buffers.
template <typename T>
struct LayerParams {
    BasicTensor<T> weights;
    BasicTensor<T> bias;
    BasicTensor<T> grad_weights;
    BasicTensor<T> grad_bias;
    BasicTensor<T> velocity_weights;
    BasicTensor<T> velocity_bias;

    LayerParams() = default;
    LayerParams(const Shape& w, const Shape& b)
        : weights(w), bias(b), grad_weights(w), grad_bias(b), velocity_weights(w),
          velocity_bias(b) {}

    [[nodiscard]] std::size_t numel() const { return weights.size() + bias.size(); }

    void zero_grad() {
        grad_weights.fill(T{0});
        grad_bias.fill(T{0});
    }
};

/// Gradient pair mirroring one LayerParams.
template <typename T>
struct ParamGrad {
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

/// Activations saved by a forward pass for the matching backward pass.
template <typename T>
struct LayerCache {
    std::vector<BasicTensor<T>> saved;
    Shape input_shape;
};

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    [[nodiscard]] virtual std::string kind() const = 0;
    /// Canonical one-line descriptor, used in checkpoint headers.
    [[nodiscard]] virtual std::string describe() const = 0;
    /// Symbolic shape walk; throws ShapeError when the input is illegal.
    [[nodiscard]] virtual Shape output_shape(const Shape& in) const = 0;
    /// Parameter count from geometry alone, independent of allocated tensors.
    [[nodiscard]] virtual std::size_t declared_params() const { return 0; }
    [[nodiscard]] virtual bool has_activation() const { return false; }
    [[nodiscard]] virtual std::size_t conv_count() const { return 0; }

    virtual BasicTensor<T> forward(const BasicTensor<T>& in, LayerCache<T>* cache) const = 0;
    /// Returns grad_input; adds parameter gradients into `grads` (one entry per LayerParams).
    virtual BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out,
                                    std::span<ParamGrad<T>> grads) const = 0;

    [[nodiscard]] virtual std::unique_ptr<Layer> clone() const = 0;

    std::vector<LayerParams<T>>& params() { return params_; }
    [[nodiscard]] const std::vector<LayerParams<T>>& params() const { return params_; }

protected:
    std::vector<LayerParams<T>> params_;
};

/// Uniform in +-sqrt(6/fan_in); biases stay zero.
template <typename T>
void init_uniform(LayerParams<T>& p, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& w : p.weights.values()) w = static_cast<T>(rng.uniform(-bound, bound));
    p.bias.fill(T{0});
}

// ---------------------------------------------------------------- conv

template <typename T>
class Conv1xk final : public Layer<T> {
public:
    Conv1xk(std::size_t in_channels, std::size_t filters, std::size_t kernel, std::size_t stride,
            Padding padding, bool relu)
        : in_(in_channels), filters_(filters), kernel_(kernel), stride_(stride),
          padding_(padding), relu_(relu) {
        this->params_.emplace_back(Shape{filters, in_channels, 1, kernel}, Shape{filters});
    }

    std::string kind() const override { return "conv"; }
    std::string describe() const override {
        return "conv in=" + std::to_string(in_) + " out=" + std::to_string(filters_) +
               " k=" + std::to_string(kernel_) + " stride=" + std::to_string(stride_) +
               " pad=" + to_string(padding_) + " relu=" + (relu_ ? "1" : "0");
    }
    Shape output_shape(const Shape& in) const override {
        if (in.rank != 3 || in[0] != in_)
            throw ShapeError("conv expects (" + std::to_string(in_) + ",H,W), got " + in.str());
        const auto geo = window_geometry(in[2], kernel_, stride_, padding_);
        return Shape{filters_, in[1], geo.out_width};
    }
    std::size_t declared_params() const override { return filters_ * in_ * kernel_ + filters_; }
    bool has_activation() const override { return relu_; }
    std::size_t conv_count() const override { return 1; }

    std::size_t filters() const { return filters_; }
    std::size_t fan_in() const { return in_ * kernel_; }

    BasicTensor<T> forward(const BasicTensor<T>& in, LayerCache<T>* cache) const override {
        const auto& p = this->params_[0];
        auto out = conv1xk_forward(in, p.weights, p.bias, stride_, padding_);
        if (relu_) out = relu_forward(out);
        if (cache) cache->saved = {in, out};
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out,
                            std::span<ParamGrad<T>> grads) const override {
        if (cache.saved.size() != 2) throw ShapeError("conv backward: missing forward cache");
        // post-ReLU output > 0 exactly where the pre-activation was > 0
        const BasicTensor<T> g = relu_ ? relu_backward(cache.saved[1], grad_out) : grad_out;
        ConvContext<T> ctx{&cache.saved[0], &this->params_[0].weights, stride_, padding_};
        BasicTensor<T> gin(cache.saved[0].shape());
        conv1xk_backward_accumulate(ctx, g, gin, grads[0].weights, grads[0].bias);
        return gin;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv1xk>(*this); }

private:
    std::size_t in_, filters_, kernel_, stride_;
    Padding padding_;
    bool relu_;
};

// ---------------------------------------------------------------- relu

template <typename T>
class Relu final : public Layer<T> {
public:
    std::string kind() const override { return "relu"; }
    std::string describe() const override { return "relu"; }
    Shape output_shape(const Shape& in) const override { return in; }
    bool has_activation() const override { return true; }

    BasicTensor<T> forward(const BasicTensor<T>& in, LayerCache<T>* cache) const override {
        if (cache) cache->saved = {in};
        return relu_forward(in);
    }
    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out,
                            std::span<ParamGrad<T>>) const override {
        if (cache.saved.size() != 1) throw ShapeError("relu backward: missing forward cache");
        return relu_backward(cache.saved[0], grad_out);
    }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }
};

// ---------------------------------------------------------------- avgpool

template <typename T>
class AvgPool1xp final : public Layer<T> {
public:
    AvgPool1xp(std::size_t pool, std::size_t stride) : pool_(pool), stride_(stride) {}

    std::string kind() const override { return "avgpool"; }
    std::string describe() const override {
        return "avgpool p=" + std::to_string(pool_) + " stride=" + std::to_string(stride_);
    }
    Shape output_shape(const Shape& in) const override {
        if (in.rank != 3) throw ShapeError("avgpool expects (C,H,W), got " + in.str());
        return Shape{in[0], in[1], window_geometry(in[2], pool_, stride_, Padding::valid).out_width};
    }

    BasicTensor<T> forward(const BasicTensor<T>& in, LayerCache<T>* cache) const override {
        if (cache) cache->input_shape = in.shape();
        return avgpool1xp_forward(in, pool_, stride_);
    }
    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out,
                            std::span<ParamGrad<T>>) const override {
        if (cache.input_shape.rank != 3)
            throw ShapeError("avgpool backward: missing forward cache");
        return avgpool1xp_backward(cache.input_shape, grad_out, pool_, stride_);
    }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<AvgPool1xp>(*this); }

private:
    std::size_t pool_, stride_;
};

// ---------------------------------------------------------------- flatten

template <typename T>
class Flatten final : public Layer<T> {
public:
    std::string kind() const override { return "flatten"; }
    std::string describe() const override { return "flatten"; }
    Shape output_shape(const Shape& in) const override { return Shape{in.numel()}; }

    BasicTensor<T> forward(const BasicTensor<T>& in, LayerCache<T>* cache) const override {
        if (cache) cache->input_shape = in.shape();
        return in.reshaped(Shape{in.size()});
    }
    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out,
                            std::span<ParamGrad<T>>) const override {
        if (cache.input_shape.rank == 0)
            throw ShapeError("flatten backward: missing forward cache");
        return grad_out.reshaped(cache.input_shape);
    }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Flatten>(*this); }
};

// ---------------------------------------------------------------- dense

template <typename T>
class Dense final : public Layer<T> {
public:
    Dense(std::size_t inputs, std::size_t units, bool relu)
        : inputs_(inputs), units_(units), relu_(relu) {
        this->params_.emplace_back(Shape{units, inputs}, Shape{units});
    }

    std::string kind() const override { return "dense"; }
    std::string describe() const override {
        return "dense in=" + std::to_string(inputs_) + " out=" + std::to_string(units_) +
               " relu=" + (relu_ ? "1" : "0");
    }
    Shape output_shape(const Shape& in) const override {
        if (in.numel() != inputs_)
            throw ShapeError("dense expects " + std::to_string(inputs_) + " inputs, got " +
                             in.str());
        return Shape{units_};
    }
    std::size_t declared_params() const override { return units_ * inputs_ + units_; }
    bool has_activation() const override { return relu_; }
    std::size_t units() const { return units_; }
    std::size_t fan_in() const { return inputs_; }

    BasicTensor<T> forward(const BasicTensor<T>& in, LayerCache<T>* cache) const override {
        const auto& p = this->params_[0];
        auto out = dense_forward(in, p.weights, p.bias);
        if (relu_) out = relu_forward(out);
        if (cache) cache->saved = {in, out};
        return out;
    }
    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out,
                            std::span<ParamGrad<T>> grads) const override {
        if (cache.saved.size() != 2) throw ShapeError("dense backward: missing forward cache");
        const BasicTensor<T> g = relu_ ? relu_backward(cache.saved[1], grad_out) : grad_out;
        return dense_backward_accumulate(cache.saved[0], this->params_[0].weights, g,
                                         grads[0].weights, grads[0].bias);
    }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

private:
    std::size_t inputs_, units_;
    bool relu_;
};

// ---------------------------------------------------------------- residual unit

/// relu(conv_b(relu(conv_a(x))) + x) with shape-preserving same-padded convs.
template <typename T>
class ResidualUnit final : public Layer<T> {
public:
    ResidualUnit(std::size_t channels, std::size_t kernel)
        : channels_(channels), kernel_(kernel) {
        this->params_.emplace_back(Shape{channels, channels, 1, kernel}, Shape{channels});
        this->params_.emplace_back(Shape{channels, channels, 1, kernel}, Shape{channels});
    }

    std::string kind() const override { return "residual"; }
    std::string describe() const override {
        return "residual ch=" + std::to_string(channels_) + " k=" + std::to_string(kernel_);
    }
    Shape output_shape(const Shape& in) const override {
        if (in.rank != 3 || in[0] != channels_)
            throw ShapeError("residual unit expects (" + std::to_string(channels_) +
                             ",H,W), got " + in.str());
        return in;
    }
    std::size_t declared_params() const override {
        return 2 * (channels_ * channels_ * kernel_ + channels_);
    }
    bool has_activation() const override { return true; }
    std::size_t conv_count() const override { return 2; }
    std::size_t fan_in() const { return channels_ * kernel_; }

    BasicTensor<T> forward(const BasicTensor<T>& in, LayerCache<T>* cache) const override {
        const auto& pa = this->params_[0];
        const auto& pb = this->params_[1];
        auto a = relu_forward(conv1xk_forward(in, pa.weights, pa.bias, 1, Padding::same));
        auto b = conv1xk_forward(a, pb.weights, pb.bias, 1, Padding::same);
        auto out = relu_forward(residual_add(b, in));
        if (cache) cache->saved = {in, a, out};
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out,
                            std::span<ParamGrad<T>> grads) const override {
        if (cache.saved.size() != 3) throw ShapeError("residual backward: missing forward cache");
        const auto& in = cache.saved[0];
        const auto& a = cache.saved[1];
        const auto gsum = relu_backward(cache.saved[2], grad_out);
        auto [gmain, gskip] = residual_add_backward(gsum);
        BasicTensor<T> ga(a.shape());
        conv1xk_backward_accumulate(ConvContext<T>{&a, &this->params_[1].weights, 1, Padding::same},
                                    gmain, ga, grads[1].weights, grads[1].bias);
        ga = relu_backward(a, ga);
        // skip branch gradient seeds grad_input; the main branch adds onto it
        BasicTensor<T> gin = std::move(gskip);
        conv1xk_backward_accumulate(ConvContext<T>{&in, &this->params_[0].weights, 1, Padding::same},
                                    ga, gin, grads[0].weights, grads[0].bias);
        return gin;
    }

    std::unique_ptr<Layer<T>> clone() const override {
        return std::make_unique<ResidualUnit>(*this);
    }

private:
    std::size_t channels_, kernel_;
};

} // namespace csiloc::nn

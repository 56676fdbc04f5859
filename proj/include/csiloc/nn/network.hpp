#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "csiloc/core/parallel.hpp"
#include "csiloc/nn/layer.hpp"

namespace csiloc::nn {

/// Parameter gradients for a whole network: [layer][param].
template <typename T>
using GradientSet = std::vector<std::vector<ParamGrad<T>>>;

/// Ordered stack of layers over a fixed (C,H,W) input shape.
///
/// forward() never mutates the network, so one instance may serve concurrent
/// evaluation of many samples. Parameter updates go through params().
template <typename T>
class Network {
public:
    Network() = default;
    explicit Network(Shape input_shape) : input_shape_(input_shape) {}

    Network(const Network& o) : input_shape_(o.input_shape_) {
        layers_.reserve(o.layers_.size());
        for (const auto& l : o.layers_) layers_.push_back(l->clone());
    }
    Network& operator=(const Network& o) {
        if (this != &o) {
            Network tmp(o);
            *this = std::move(tmp);
        }
        return *this;
    }
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    /// Appends a layer after checking it accepts the current output shape.
    template <typename L>
    L& add(L layer) {
        (void)layer.output_shape(output_shape());
        auto ptr = std::make_unique<L>(std::move(layer));
        L& ref = *ptr;
        layers_.push_back(std::move(ptr));
        return ref;
    }

    [[nodiscard]] const Shape& input_shape() const { return input_shape_; }
    [[nodiscard]] std::size_t size() const { return layers_.size(); }
    [[nodiscard]] Layer<T>& layer(std::size_t i) { return *layers_[i]; }
    [[nodiscard]] const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }

    /// Symbolic shape walk over every layer.
    [[nodiscard]] Shape output_shape() const {
        Shape s = input_shape_;
        for (const auto& l : layers_) s = l->output_shape(s);
        return s;
    }

    /// Shape walk plus the position-head contract: 3 linear outputs.
    void validate_position_head() const {
        if (!(output_shape() == Shape{3}))
            throw ShapeError("network output must be (3), got " + output_shape().str());
        if (layers_.empty() || layers_.back()->kind() != "dense" ||
            layers_.back()->has_activation())
            throw ShapeError("final layer must be a linear dense layer");
    }

    [[nodiscard]] std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_)
            for (const auto& p : l->params()) n += p.numel();
        return n;
    }

    [[nodiscard]] std::size_t declared_param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l->declared_params();
        return n;
    }

    [[nodiscard]] BasicTensor<T> forward(const BasicTensor<T>& sample) const {
        check_input(sample.shape());
        BasicTensor<T> x = sample;
        for (const auto& l : layers_) x = l->forward(x, nullptr);
        return x;
    }

    /// Forward over (B,C,H,W); row b of the result is forward(sample b).
    [[nodiscard]] BasicTensor<T> forward_batch(const BasicTensor<T>& batch,
                                               std::size_t threads = thread_count()) const {
        if (batch.rank() != 4)
            throw ShapeError("batch must be (B,C,H,W), got " + batch.shape().str());
        const Shape sample_shape{batch.dim(1), batch.dim(2), batch.dim(3)};
        check_input(sample_shape);
        const std::size_t B = batch.dim(0), n = sample_shape.numel();
        const std::size_t outs = output_shape().numel();
        BasicTensor<T> out(Shape{B, outs});
        parallel_for(
            B,
            [&](std::size_t b) {
                std::vector<T> buf(batch.data() + b * n, batch.data() + (b + 1) * n);
                const auto y = forward(BasicTensor<T>(sample_shape, std::move(buf)));
                for (std::size_t j = 0; j < outs; ++j) out.at(b, j) = y[j];
            },
            threads);
        return out;
    }

    /// Forward pass that records the caches needed by backward().
    BasicTensor<T> forward_train(const BasicTensor<T>& sample,
                                 std::vector<LayerCache<T>>& caches) const {
        check_input(sample.shape());
        caches.assign(layers_.size(), {});
        BasicTensor<T> x = sample;
        for (std::size_t i = 0; i < layers_.size(); ++i) x = layers_[i]->forward(x, &caches[i]);
        return x;
    }

    /// Back-propagates grad_out, adding parameter gradients into grads. Returns grad wrt input.
    BasicTensor<T> backward(const std::vector<LayerCache<T>>& caches, BasicTensor<T> grad_out,
                            GradientSet<T>& grads) const {
        if (caches.size() != layers_.size()) throw ShapeError("backward: cache count mismatch");
        if (grads.size() != layers_.size()) throw ShapeError("backward: gradient set mismatch");
        for (std::size_t i = layers_.size(); i-- > 0;)
            grad_out = layers_[i]->backward(caches[i], grad_out, grads[i]);
        return grad_out;
    }

    [[nodiscard]] GradientSet<T> zero_gradients() const {
        GradientSet<T> g(layers_.size());
        for (std::size_t i = 0; i < layers_.size(); ++i)
            for (const auto& p : layers_[i]->params())
                g[i].push_back({BasicTensor<T>(p.weights.shape()), BasicTensor<T>(p.bias.shape())});
        return g;
    }

    /// Copies weights and biases from a structurally identical network.
    void copy_weights_from(const Network& o) {
        if (o.layers_.size() != layers_.size()) throw ShapeError("copy_weights: layer count");
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            auto& dst = layers_[i]->params();
            const auto& src = o.layers_[i]->params();
            if (dst.size() != src.size()) throw ShapeError("copy_weights: param count");
            for (std::size_t j = 0; j < dst.size(); ++j) {
                dst[j].weights.require_same_shape(src[j].weights, "copy_weights");
                dst[j].weights = src[j].weights;
                dst[j].bias = src[j].bias;
            }
        }
    }

private:
    void check_input(const Shape& s) const {
        if (!(s == input_shape_))
            throw ShapeError("network input must be " + input_shape_.str() + ", got " + s.str());
    }

    Shape input_shape_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

/// Elementwise a += b over two gradient sets of identical structure.
template <typename T>
void add_into(GradientSet<T>& a, const GradientSet<T>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            a[i][j].weights += b[i][j].weights;
            a[i][j].bias += b[i][j].bias;
        }
}

} // namespace csiloc::nn

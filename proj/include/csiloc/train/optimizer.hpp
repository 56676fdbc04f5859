#pragma once

#include <cmath>
#include <span>

#include "csiloc/core/error.hpp"
#include "csiloc/nn/layer.hpp"

namespace csiloc::train {

/// Classical momentum: v <- momentum * v - lr * g; w <- w + v.
template <typename T>
void sgd_momentum_step(std::span<T> weights, std::span<const T> grads, std::span<T> velocity,
                       double lr, double momentum) {
    if (weights.size() != grads.size() || weights.size() != velocity.size())
        throw ShapeError("sgd step: parameter, gradient and velocity lengths differ");
    for (const T g : grads)
        if (!std::isfinite(static_cast<double>(g)))
            throw NumericError("non-finite gradient in optimizer step");
    const T m = static_cast<T>(momentum), a = static_cast<T>(lr);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        velocity[i] = m * velocity[i] - a * grads[i];
        weights[i] += velocity[i];
    }
}

/// Applies one step to a LayerParams using its own gradient and velocity buffers.
template <typename T>
void sgd_momentum_step(nn::LayerParams<T>& p, double lr, double momentum) {
    sgd_momentum_step<T>(p.weights.span(), p.grad_weights.span(), p.velocity_weights.span(), lr,
                         momentum);
    sgd_momentum_step<T>(p.bias.span(), p.grad_bias.span(), p.velocity_bias.span(), lr, momentum);
}

} // namespace csiloc::train

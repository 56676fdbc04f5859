#pragma once

#include <cmath>
#include <cstddef>

#include "csiloc/core/tensor.hpp"
#include "csiloc/nn/ops.hpp"

namespace csiloc::train {

/// Keeps the distance differentiable at zero error.
inline constexpr double kMdeEpsilon = 1e-12;

template <typename T>
struct LossResult {
    double value = 0;
    BasicTensor<T> grad;  ///< d(loss)/d(pred), shaped like pred
};

/// Mean Euclidean distance between predicted and true positions, rows of (B,3).
template <typename T>
LossResult<T> mde_loss(const BasicTensor<T>& pred, const BasicTensor<T>& truth) {
    pred.require_same_shape(truth, "mde_loss");
    nn::require_rank(pred, 2, "mde_loss prediction");
    const std::size_t B = pred.dim(0), D = pred.dim(1);
    LossResult<T> r{0.0, BasicTensor<T>(pred.shape())};
    double total = 0;
    for (std::size_t b = 0; b < B; ++b) {
        double sq = 0;
        for (std::size_t d = 0; d < D; ++d) {
            const double diff = static_cast<double>(pred.at(b, d)) - static_cast<double>(truth.at(b, d));
            sq += diff * diff;
        }
        const double dist = std::sqrt(sq + kMdeEpsilon);
        total += dist;
        const double scale = 1.0 / (static_cast<double>(B) * dist);
        for (std::size_t d = 0; d < D; ++d)
            r.grad.at(b, d) = static_cast<T>(
                (static_cast<double>(pred.at(b, d)) - static_cast<double>(truth.at(b, d))) * scale);
    }
    r.value = total / static_cast<double>(B);
    return r;
}

} // namespace csiloc::train

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "csiloc/nn/network.hpp"
#include "csiloc/train/loss.hpp"

namespace csiloc::nn {

struct GradCheckOptions {
    double step = 1e-6;
    /// Test hook: perturbs the analytic gradient of this layer to exercise failure reporting.
    std::optional<std::size_t> corrupt_layer;
};

struct GradCheckResult {
    double max_rel_error = 0;
    std::size_t checked = 0;
    std::size_t worst_layer = 0;
    std::string worst_layer_desc;
    double worst_analytic = 0;
    double worst_numeric = 0;
};

namespace detail {

inline double single_sample_mde(const Network<double>& net, const Tensor& input,
                                const Tensor& target) {
    const auto y = net.forward(input).reshaped(Shape{1, 3});
    return train::mde_loss(y, target).value;
}

} // namespace detail

/// Compares back-propagated MDE gradients of every parameter against central
/// finite differences. Error per entry: |a - n| / max(|a|, |n|, 1e-12).
inline GradCheckResult gradient_check(const Network<double>& network, const Tensor& input,
                                      const std::array<double, 3>& target,
                                      const GradCheckOptions& opt = {}) {
    Network<double> net = network;
    const Tensor truth(Shape{1, 3}, {target[0], target[1], target[2]});
    GradCheckResult res;
    if (net.param_count() == 0) return res;

    std::vector<LayerCache<double>> caches;
    const auto y = net.forward_train(input, caches).reshaped(Shape{1, 3});
    const auto loss = train::mde_loss(y, truth);
    auto grads = net.zero_gradients();
    net.backward(caches, loss.grad.reshaped(Shape{3}), grads);
    if (opt.corrupt_layer && *opt.corrupt_layer < grads.size())
        for (auto& g : grads[*opt.corrupt_layer]) {
            g.weights *= 1.05;
            g.bias *= 1.05;
        }

    auto probe = [&](double& slot, double analytic, std::size_t layer) {
        const double saved = slot;
        slot = saved + opt.step;
        const double up = detail::single_sample_mde(net, input, truth);
        slot = saved - opt.step;
        const double down = detail::single_sample_mde(net, input, truth);
        slot = saved;
        const double numeric = (up - down) / (2.0 * opt.step);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
        const double rel = std::abs(analytic - numeric) / denom;
        ++res.checked;
        if (rel > res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst_layer = layer;
            res.worst_layer_desc = net.layer(layer).describe();
            res.worst_analytic = analytic;
            res.worst_numeric = numeric;
        }
    };

    for (std::size_t i = 0; i < net.size(); ++i) {
        auto& params = net.layer(i).params();
        for (std::size_t j = 0; j < params.size(); ++j) {
            for (std::size_t e = 0; e < params[j].weights.size(); ++e)
                probe(params[j].weights[e], grads[i][j].weights[e], i);
            for (std::size_t e = 0; e < params[j].bias.size(); ++e)
                probe(params[j].bias[e], grads[i][j].bias[e], i);
        }
    }
    return res;
}

} // namespace csiloc::nn

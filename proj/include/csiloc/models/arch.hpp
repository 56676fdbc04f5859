#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "csiloc/core/error.hpp"
#include "csiloc/core/rng.hpp"
#include "csiloc/nn/network.hpp"

namespace csiloc::models {

enum class ModelKind { cnn4, cnn4r, cnn4s, fcnn, linear };

inline std::string to_string(ModelKind k) {
    switch (k) {
    case ModelKind::cnn4: return "cnn4";
    case ModelKind::cnn4r: return "cnn4r";
    case ModelKind::cnn4s: return "cnn4s";
    case ModelKind::fcnn: return "fcnn";
    case ModelKind::linear: return "linear";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
    for (auto k : {ModelKind::cnn4, ModelKind::cnn4r, ModelKind::cnn4s, ModelKind::fcnn,
                   ModelKind::linear})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown model kind '" + s + "'");
}

/// Geometry knobs of the convolutional architectures.
struct ArchConfig {
    std::size_t base_filters = 10;
    double growth = 1.5;
    std::size_t kernel = 7;
    std::size_t stride = 3;
    std::size_t residual_units_per_block = 3;
    std::size_t head_units = 1000;
    // CNN4S stem and rolling-average pool
    std::size_t stem_stride = 2;
    std::size_t pool_size = 4;
    std::size_t pool_stride = 2;
    std::uint64_t seed = 1;

    void validate() const {
        if (base_filters < 1) throw ConfigError("base_filters must be >= 1");
        if (!(growth >= 1.0)) throw ConfigError("growth must be >= 1 (filter counts nondecreasing)");
        if (kernel < 1 || stride < 1 || stem_stride < 1 || pool_size < 1 || pool_stride < 1)
            throw ConfigError("kernel, stride and pool geometry must be positive");
        if (head_units < 1) throw ConfigError("head_units must be >= 1");
    }
};

/// Network input extents: (2 = Re/Im, antennas, subcarriers).
struct InputGeometry {
    std::size_t antennas = 16;
    std::size_t subcarriers = 924;

    [[nodiscard]] Shape shape() const { return Shape{2, antennas, subcarriers}; }
};

inline std::size_t round_half_up(double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); }

/// Filters of stage i: round(F0 * growth^i).
inline std::vector<std::size_t> stage_filters(const ArchConfig& cfg, std::size_t stages = 4) {
    std::vector<std::size_t> f;
    for (std::size_t i = 0; i < stages; ++i)
        f.push_back(round_half_up(static_cast<double>(cfg.base_filters) *
                                  std::pow(cfg.growth, static_cast<double>(i))));
    return f;
}

namespace detail {

template <typename T>
void add_head(nn::Network<T>& net, std::size_t head_units) {
    const std::size_t flat = net.output_shape().numel();
    net.add(nn::Flatten<T>{});
    net.add(nn::Dense<T>(flat, head_units, true));
    net.add(nn::Dense<T>(head_units, 3, false));
}

template <typename T>
void add_residual_block(nn::Network<T>& net, std::size_t filters, const ArchConfig& cfg) {
    const std::size_t in = net.output_shape()[0];
    net.add(nn::Conv1xk<T>(in, filters, cfg.kernel, cfg.stride, nn::Padding::valid, true));
    for (std::size_t u = 0; u < cfg.residual_units_per_block; ++u)
        net.add(nn::ResidualUnit<T>(filters, cfg.kernel));
}

} // namespace detail

/// Deterministic fan-in-scaled uniform initialization drawn in layer order.
template <typename T>
void initialize(nn::Network<T>& net, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < net.size(); ++i) {
        auto& l = net.layer(i);
        std::size_t fan_in = 0;
        if (auto* c = dynamic_cast<nn::Conv1xk<T>*>(&l)) fan_in = c->fan_in();
        else if (auto* d = dynamic_cast<nn::Dense<T>*>(&l)) fan_in = d->fan_in();
        else if (auto* r = dynamic_cast<nn::ResidualUnit<T>*>(&l)) fan_in = r->fan_in();
        for (auto& p : l.params()) nn::init_uniform(p, fan_in, rng);
    }
}

/// Four strided valid convs with ReLU, then flatten -> dense(head)+ReLU -> dense(3).
template <typename T = double>
nn::Network<T> build_cnn4(const ArchConfig& cfg, const InputGeometry& geo = {}) {
    cfg.validate();
    nn::Network<T> net(geo.shape());
    std::size_t in = 2;
    for (auto f : stage_filters(cfg)) {
        net.add(nn::Conv1xk<T>(in, f, cfg.kernel, cfg.stride, nn::Padding::valid, true));
        in = f;
    }
    detail::add_head(net, cfg.head_units);
    net.validate_position_head();
    initialize(net, cfg.seed);
    return net;
}

/// Four blocks of [strided entry conv + residual units], same head as CNN4.
template <typename T = double>
nn::Network<T> build_cnn4r(const ArchConfig& cfg, const InputGeometry& geo = {}) {
    cfg.validate();
    nn::Network<T> net(geo.shape());
    for (auto f : stage_filters(cfg)) detail::add_residual_block(net, f, cfg);
    detail::add_head(net, cfg.head_units);
    net.validate_position_head();
    initialize(net, cfg.seed);
    return net;
}

/// CNN4R with the first block replaced by a stem conv and a rolling-average pool.
template <typename T = double>
nn::Network<T> build_cnn4s(const ArchConfig& cfg, const InputGeometry& geo = {}) {
    cfg.validate();
    nn::Network<T> net(geo.shape());
    const auto filters = stage_filters(cfg);
    net.add(nn::Conv1xk<T>(2, filters[0], cfg.kernel, cfg.stem_stride, nn::Padding::valid, true));
    net.add(nn::AvgPool1xp<T>(cfg.pool_size, cfg.pool_stride));
    for (std::size_t i = 1; i < filters.size(); ++i)
        detail::add_residual_block(net, filters[i], cfg);
    detail::add_head(net, cfg.head_units);
    net.validate_position_head();
    initialize(net, cfg.seed);
    return net;
}

/// Fully connected baseline; no hidden layers gives the linear dummy model.
template <typename T = double>
nn::Network<T> build_fcnn(const std::vector<std::size_t>& hidden, const InputGeometry& geo = {},
                          std::uint64_t seed = 1) {
    nn::Network<T> net(geo.shape());
    net.add(nn::Flatten<T>{});
    std::size_t in = geo.shape().numel();
    for (auto h : hidden) {
        if (h == 0) throw ConfigError("hidden layer sizes must be positive");
        net.add(nn::Dense<T>(in, h, true));
        in = h;
    }
    net.add(nn::Dense<T>(in, 3, false));
    net.validate_position_head();
    initialize(net, seed);
    return net;
}

/// Everything needed to rebuild a network exactly.
struct ModelSpec {
    ModelKind kind = ModelKind::cnn4;
    ArchConfig arch;
    std::vector<std::size_t> hidden;  ///< fcnn only
    InputGeometry input;
};

template <typename T = double>
nn::Network<T> build(const ModelSpec& spec) {
    switch (spec.kind) {
    case ModelKind::cnn4: return build_cnn4<T>(spec.arch, spec.input);
    case ModelKind::cnn4r: return build_cnn4r<T>(spec.arch, spec.input);
    case ModelKind::cnn4s: return build_cnn4s<T>(spec.arch, spec.input);
    case ModelKind::fcnn: return build_fcnn<T>(spec.hidden, spec.input, spec.arch.seed);
    case ModelKind::linear: return build_fcnn<T>({}, spec.input, spec.arch.seed);
    }
    throw ConfigError("unhandled model kind");
}

/// Total trainable scalars (weights + biases) over all layers.
template <typename T>
std::size_t count_weights(const nn::Network<T>& net) {
    return net.param_count();
}

/// Count in units of 10^6, one decimal.
inline double weights_in_millions(std::size_t n) {
    return std::round(static_cast<double>(n) / 1e5) / 10.0;
}

template <typename T>
std::size_t conv_layer_count(const nn::Network<T>& net) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < net.size(); ++i) n += net.layer(i).conv_count();
    return n;
}

/// Shipped per-architecture defaults. Base filter counts are calibrated so the
/// full-size (2,16,924) networks land near the published totals of
/// 5.3 / 10.8 / 16.3 million weights.
inline ArchConfig default_arch(ModelKind kind) {
    ArchConfig a;
    switch (kind) {
    case ModelKind::cnn4: a.base_filters = 10; break;
    case ModelKind::cnn4r: a.base_filters = 21; break;
    case ModelKind::cnn4s: a.base_filters = 45; break;
    case ModelKind::fcnn:
    case ModelKind::linear: break;
    }
    return a;
}

/// Shrunken geometry for finite-difference checks: k=3, W=60, F0=2.
inline ModelSpec tiny_spec(ModelKind kind, std::uint64_t seed = 7) {
    ModelSpec s;
    s.kind = kind;
    s.arch.base_filters = 2;
    s.arch.kernel = 3;
    s.arch.stride = 2;
    s.arch.head_units = 16;
    s.arch.stem_stride = 2;
    s.arch.pool_size = 2;
    s.arch.pool_stride = 1;
    s.arch.seed = seed;
    if (kind == ModelKind::fcnn) s.hidden = {8};
    s.input = {16, 60};
    return s;
}

/// Replaces every bias with a uniform draw from [-scale, scale]. Zero biases make
/// ReLU pre-activations land exactly on the kink wherever a window sees only
/// zeros, which breaks finite differences; a generic point avoids it.
template <typename T>
void randomize_biases(nn::Network<T>& net, std::uint64_t seed, double scale = 0.1) {
    Rng rng(seed);
    for (std::size_t i = 0; i < net.size(); ++i)
        for (auto& p : net.layer(i).params())
            for (auto& b : p.bias.values()) b = static_cast<T>(rng.uniform(-scale, scale));
}

/// Shrunken network plus a matching random input and target, ready for a
/// finite-difference gradient check.
struct GradCheckProblem {
    ModelSpec spec;
    nn::Network<double> network;
    Tensor input;
    std::array<double, 3> target;
};

inline GradCheckProblem gradcheck_problem(ModelKind kind, std::uint64_t seed = 7) {
    auto spec = tiny_spec(kind, seed);
    auto net = build<double>(spec);
    randomize_biases(net, derive_seed(seed, 98));
    Rng rng(derive_seed(seed, 99));
    Tensor x(spec.input.shape());
    for (auto& v : x.values()) v = rng.normal();
    const std::array<double, 3> target{rng.uniform(-2, 2), rng.uniform(1, 3), rng.uniform(0.8, 1.2)};
    return {std::move(spec), std::move(net), std::move(x), target};
}

} // namespace csiloc::models

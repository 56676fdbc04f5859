#include <gtest/gtest.h>

#include <functional>
#include <memory>

#include "csiloc/models/arch.hpp"
#include "csiloc/nn/layer.hpp"
#include "csiloc/nn/network.hpp"
#include "test_util.hpp"

using namespace csiloc;
using namespace csiloc::nn;

namespace {

// Checks one layer's backward through the Layer interface against central
// differences of a random linear projection of its output.
double layer_fd_error(Layer<double>& layer, Tensor x, Rng& rng) {
    for (auto& p : layer.params()) {
        for (auto& v : p.weights.values()) v = rng.uniform(-0.5, 0.5);
        for (auto& v : p.bias.values()) v = rng.uniform(-0.5, 0.5);
    }
    const auto out_shape = layer.output_shape(x.shape());
    const auto proj = testutil::random_tensor(out_shape, rng);
    auto loss = [&] {
        const auto y = layer.forward(x, nullptr);
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * proj[i];
        return s;
    };
    LayerCache<double> cache;
    (void)layer.forward(x, &cache);
    std::vector<ParamGrad<double>> grads;
    for (const auto& p : layer.params())
        grads.push_back({Tensor(p.weights.shape()), Tensor(p.bias.shape())});
    const auto gin = layer.backward(cache, proj, grads);
    EXPECT_EQ(gin.shape(), x.shape());

    double worst = 0;
    const double h = 1e-6;
    auto probe = [&](double& slot, double analytic) {
        const double s = slot;
        slot = s + h;
        const double up = loss();
        slot = s - h;
        const double down = loss();
        slot = s;
        const double n = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(analytic - n) / std::max({std::abs(analytic), std::abs(n), 1e-12}));
    };
    for (std::size_t i = 0; i < x.size(); ++i) probe(x[i], gin[i]);
    for (std::size_t j = 0; j < layer.params().size(); ++j) {
        auto& p = layer.params()[j];
        for (std::size_t i = 0; i < p.weights.size(); ++i) probe(p.weights[i], grads[j].weights[i]);
        for (std::size_t i = 0; i < p.bias.size(); ++i) probe(p.bias[i], grads[j].bias[i]);
    }
    return worst;
}

} // namespace

TEST(Layers, EveryBackwardMatchesFiniteDifferencesOnRandomShapes) {
    Rng rng(21);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t C = 1 + rng.below(3), H = 1 + rng.below(3), W = 6 + rng.below(12);
        const Shape in{C, H, W};
        const std::size_t k = 1 + rng.below(3), s = 1 + rng.below(3);
        std::vector<std::unique_ptr<Layer<double>>> layers;
        layers.push_back(std::make_unique<Conv1xk<double>>(C, 2, k, s, Padding::valid, false));
        layers.push_back(std::make_unique<Conv1xk<double>>(C, 3, k, s, Padding::same, false));
        layers.push_back(std::make_unique<Relu<double>>());
        layers.push_back(std::make_unique<AvgPool1xp<double>>(1 + rng.below(3), s));
        layers.push_back(std::make_unique<Flatten<double>>());
        layers.push_back(std::make_unique<Dense<double>>(in.numel(), 4, false));
        for (auto& l : layers) {
            // inputs are kept away from zero so ReLU-style kinks are not straddled
            const auto x = testutil::away_from_zero(in, rng);
            EXPECT_LT(layer_fd_error(*l, x, rng), 1e-4) << l->describe() << " on " << in.str();
        }
    }
}

TEST(Layers, FusedReluAndResidualMatchFiniteDifferences) {
    Rng rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        const Shape in{2, 2, 9};
        Conv1xk<double> conv(2, 3, 3, 2, Padding::valid, true);
        Dense<double> dense(in.numel(), 5, true);
        ResidualUnit<double> res(2, 3);
        const auto x = testutil::away_from_zero(in, rng);
        EXPECT_LT(layer_fd_error(conv, x, rng), 1e-4);
        EXPECT_LT(layer_fd_error(dense, x, rng), 1e-4);
        EXPECT_LT(layer_fd_error(res, x, rng), 1e-4);
    }
}

TEST(Layers, ParameterBuffersMirrorWeights) {
    Conv1xk<double> conv(2, 4, 7, 3, Padding::valid, true);
    Dense<double> dense(10, 3, false);
    ResidualUnit<double> res(4, 3);
    for (Layer<double>* l : std::initializer_list<Layer<double>*>{&conv, &dense, &res}) {
        std::size_t n = 0;
        for (const auto& p : l->params()) {
            EXPECT_EQ(p.grad_weights.shape(), p.weights.shape());
            EXPECT_EQ(p.velocity_weights.shape(), p.weights.shape());
            EXPECT_EQ(p.grad_bias.shape(), p.bias.shape());
            EXPECT_EQ(p.velocity_bias.shape(), p.bias.shape());
            n += p.numel();
        }
        EXPECT_EQ(n, l->declared_params());
    }
    EXPECT_EQ(conv.declared_params(), 4u * 2u * 7u + 4u);
    EXPECT_EQ(dense.declared_params(), 33u);
    EXPECT_EQ(res.declared_params(), 2u * (4u * 4u * 3u + 4u));
}

TEST(Layers, ParameterFreeLayersHaveNoParams) {
    EXPECT_TRUE(Relu<double>().params().empty());
    EXPECT_TRUE(AvgPool1xp<double>(4, 2).params().empty());
    EXPECT_TRUE(Flatten<double>().params().empty());
}

TEST(Layers, DescriptorsAndShapes) {
    Conv1xk<double> conv(2, 10, 7, 3, Padding::valid, true);
    EXPECT_EQ(conv.describe(), "conv in=2 out=10 k=7 stride=3 pad=valid relu=1");
    EXPECT_EQ(conv.output_shape(Shape{2, 16, 924}), (Shape{10, 16, 306}));
    EXPECT_THROW(conv.output_shape(Shape{3, 16, 924}), ShapeError);
    EXPECT_THROW(conv.output_shape(Shape{2, 16, 5}), ShapeError);
    EXPECT_EQ(AvgPool1xp<double>(4, 2).output_shape(Shape{45, 16, 459}), (Shape{45, 16, 228}));
    EXPECT_EQ(Flatten<double>().output_shape(Shape{34, 16, 9}), (Shape{34 * 16 * 9}));
    EXPECT_EQ(ResidualUnit<double>(5, 7).output_shape(Shape{5, 16, 33}), (Shape{5, 16, 33}));
    EXPECT_THROW(ResidualUnit<double>(5, 7).output_shape(Shape{4, 16, 33}), ShapeError);
    EXPECT_THROW(Dense<double>(10, 3, false).output_shape(Shape{11}), ShapeError);
}

TEST(Layers, CloneIsDeep) {
    Dense<double> d(4, 2, false);
    d.params()[0].weights.fill(1.0);
    auto c = d.clone();
    c->params()[0].weights.fill(2.0);
    EXPECT_EQ(d.params()[0].weights[0], 1.0);
    EXPECT_EQ(c->params()[0].weights[0], 2.0);
}

TEST(Layers, InitUniformRespectsFanInBound) {
    Rng rng(3);
    LayerParams<double> p(Shape{50, 40}, Shape{50});
    p.bias.fill(9.0);
    init_uniform(p, 40, rng);
    const double bound = std::sqrt(6.0 / 40.0);
    double mx = 0;
    for (double v : p.weights.values()) {
        ASSERT_LE(std::abs(v), bound);
        mx = std::max(mx, std::abs(v));
    }
    EXPECT_GT(mx, 0.9 * bound);
    for (double v : p.bias.values()) EXPECT_EQ(v, 0.0);
}

TEST(Network, AddRejectsIncompatibleLayer) {
    Network<double> net(Shape{2, 4, 20});
    net.add(Conv1xk<double>(2, 3, 5, 3, Padding::valid, true));
    EXPECT_THROW(net.add(Conv1xk<double>(2, 3, 3, 1, Padding::valid, true)), ShapeError);
    EXPECT_THROW(net.add(ResidualUnit<double>(4, 3)), ShapeError);
    EXPECT_EQ(net.size(), 1u);
}

TEST(Network, PositionHeadContract) {
    Network<double> net(Shape{1, 1, 8});
    net.add(Flatten<double>());
    net.add(Dense<double>(8, 3, true));
    EXPECT_THROW(net.validate_position_head(), ShapeError);
    Network<double> wide(Shape{1, 1, 8});
    wide.add(Flatten<double>());
    wide.add(Dense<double>(8, 4, false));
    EXPECT_THROW(wide.validate_position_head(), ShapeError);
    Network<double> ok(Shape{1, 1, 8});
    ok.add(Flatten<double>());
    ok.add(Dense<double>(8, 3, false));
    EXPECT_NO_THROW(ok.validate_position_head());
}

TEST(Network, BatchForwardMatchesPerSampleForAnyThreadCount) {
    auto net = models::build<double>(models::tiny_spec(models::ModelKind::cnn4r));
    Rng rng(5);
    const Shape s = net.input_shape();
    const std::size_t B = 7;
    Tensor batch(Shape{B, s[0], s[1], s[2]});
    for (auto& v : batch.values()) v = rng.normal();
    const auto ref = net.forward_batch(batch, 1);
    for (std::size_t threads : {2u, 3u, 8u}) EXPECT_TRUE(net.forward_batch(batch, threads) == ref);
    for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> one(batch.data() + b * s.numel(), batch.data() + (b + 1) * s.numel());
        const auto y = net.forward(Tensor(s, one));
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(y[j], ref.at(b, j));
    }
    EXPECT_THROW(net.forward(Tensor(Shape{2, 16, 61})), ShapeError);
}

TEST(Network, CopyIsDeepAndCopyWeightsRoundTrips) {
    auto a = models::build<double>(models::tiny_spec(models::ModelKind::cnn4));
    Network<double> b = a;
    b.layer(0).params()[0].weights.fill(0.0);
    EXPECT_NE(a.layer(0).params()[0].weights[0], 0.0);
    b.copy_weights_from(a);
    Rng rng(1);
    const auto x = testutil::random_tensor(a.input_shape(), rng);
    EXPECT_TRUE(a.forward(x) == b.forward(x));
    auto other = models::build<double>(models::tiny_spec(models::ModelKind::cnn4r));
    EXPECT_THROW(b.copy_weights_from(other), ShapeError);
}

TEST(Network, ForwardTrainMatchesForward) {
    auto net = models::build<double>(models::tiny_spec(models::ModelKind::cnn4s));
    Rng rng(2);
    const auto x = testutil::random_tensor(net.input_shape(), rng);
    std::vector<LayerCache<double>> caches;
    EXPECT_TRUE(net.forward_train(x, caches) == net.forward(x));
    EXPECT_EQ(caches.size(), net.size());
}

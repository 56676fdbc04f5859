#include <gtest/gtest.h>

#include <array>
#include <cstdlib>
#include <set>

#include "csiloc/core/error.hpp"
#include "csiloc/core/parallel.hpp"
#include "csiloc/core/rng.hpp"
#include "csiloc/core/tensor.hpp"
#include "csiloc/core/text.hpp"

using namespace csiloc;

TEST(Shape, NumelRankAndText) {
    const Shape s{2, 16, 924};
    EXPECT_EQ(s.rank, 3u);
    EXPECT_EQ(s.numel(), 2u * 16u * 924u);
    EXPECT_EQ(s.str(), "(2,16,924)");
    EXPECT_TRUE((Shape{2, 3} == Shape{2, 3}));
    EXPECT_FALSE((Shape{2, 3} == Shape{3, 2}));
    EXPECT_FALSE((Shape{6} == Shape{6, 1}));
}

TEST(Shape, RejectsZeroExtentAndHighRank) {
    EXPECT_THROW((Shape{2, 0, 3}), ShapeError);
    EXPECT_THROW((Shape{1, 1, 1, 1, 1}), ShapeError);
}

TEST(Tensor, RowMajorIndexing) {
    Tensor t(Shape{2, 3, 4});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = double(i);
    EXPECT_EQ(t.at(1, 2, 3), 23.0);
    EXPECT_EQ(t.at(0, 1, 0), 4.0);
    Tensor u(Shape{2, 2, 2, 2});
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = double(i);
    EXPECT_EQ(u.at(1, 0, 1, 1), 11.0);
    Tensor m(Shape{3, 5});
    m.at(2, 4) = 7;
    EXPECT_EQ(m[14], 7.0);
}

TEST(Tensor, ArithmeticChecksShapes) {
    Tensor a(Shape{4}, 1.0), b(Shape{4}, 2.0), c(Shape{2, 2}, 1.0);
    a += b;
    EXPECT_EQ(a[3], 3.0);
    a -= b;
    a *= 5.0;
    EXPECT_EQ(a[0], 5.0);
    EXPECT_THROW(a += c, ShapeError);
    EXPECT_THROW(a -= c, ShapeError);
    EXPECT_EQ((a + b)[1], 7.0);
}

TEST(Tensor, DataLengthMustMatchShape) {
    EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Tensor, ReshapeKeepsDataAndRejectsMismatch) {
    Tensor a(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
    const auto b = a.reshaped(Shape{3, 2});
    EXPECT_EQ(b.values(), a.values());
    EXPECT_THROW(a.reshaped(Shape{4}), ShapeError);
}

TEST(Tensor, CastRoundsToTargetPrecision) {
    Tensor a(Shape{2}, std::vector<double>{0.1, 1.0 / 3.0});
    const auto f = a.cast<float>();
    EXPECT_EQ(f[0], 0.1f);
    EXPECT_EQ(f.cast<double>()[1], double(float(1.0 / 3.0)));
}

TEST(Rng, SeededStreamsAreReproducible) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
    }
    Rng d(42), e(43);
    EXPECT_NE(d.next(), e.next());
}

TEST(Rng, UniformAndBelowStayInRange) {
    Rng r(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double v = r.uniform(-2.0, 3.0);
        ASSERT_GE(v, -2.0);
        ASSERT_LT(v, 3.0);
        ASSERT_LT(r.below(7), 7u);
    }
}

TEST(Rng, NormalHasUnitMoments) {
    Rng r(9);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsAPermutation) {
    Rng r(1);
    std::vector<int> v(1000);
    for (int i = 0; i < 1000; ++i) v[i] = i;
    r.shuffle(v);
    EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 1000u);
    bool moved = false;
    for (int i = 0; i < 1000; ++i) moved |= v[i] != i;
    EXPECT_TRUE(moved);
}

TEST(Rng, DerivedSeedsDiffer) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t t = 0; t < 100; ++t) seen.insert(derive_seed(1, t));
    for (std::uint64_t b = 0; b < 100; ++b) seen.insert(derive_seed(b + 2, 0));
    EXPECT_EQ(seen.size(), 200u);
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Parallel, VisitsEveryIndexOnceForAnyThreadCount) {
    for (std::size_t threads : {1u, 2u, 3u, 8u}) {
        std::vector<int> hits(101, 0);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, threads);
        for (int h : hits) ASSERT_EQ(h, 1);
    }
}

TEST(Parallel, PropagatesWorkerExceptions) {
    EXPECT_THROW(parallel_for(
                     10, [](std::size_t i) { if (i == 7) throw NumericError("boom"); }, 3),
                 NumericError);
}

TEST(Parallel, ThreadCountHonoursEnvironmentCap) {
    ::setenv("CSILOC_THREADS", "3", 1);
    EXPECT_EQ(thread_count(), 3u);
    ::unsetenv("CSILOC_THREADS");
    EXPECT_GE(thread_count(), 1u);
}

TEST(Text, ShortestRoundTripFormatting) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.0}) EXPECT_EQ(parse_double(format_double(v)), v);
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(parse_u64("18446744073709551615"), 18446744073709551615ull);
    EXPECT_THROW(parse_double("1.0x"), Error);
    EXPECT_THROW(parse_u64("-1"), Error);
}

namespace {
[[gnu::noinline]] std::array<double, 3> quantize3(std::array<double, 3> p) {
    for (int d = 0; d < 3; ++d) p[d] = static_cast<double>(static_cast<float>(p[d]));
    return p;
}
} // namespace

// Guards against optimizers that fold a double->float->double round trip away.
TEST(Build, FloatQuantizationIsNotOptimizedAway) {
    const auto q = quantize3({-0.15826555965095457, 1.1561785762828574, 0.80848142802267242});
    EXPECT_EQ(q[0], static_cast<double>(-0.15826556f));
    EXPECT_EQ(q[1], static_cast<double>(1.1561786f));
    EXPECT_EQ(q[2], static_cast<double>(0.80848145f));
    EXPECT_NE(q[0], -0.15826555965095457);
}

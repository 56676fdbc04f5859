#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "csiloc/data/split.hpp"
#include "test_util.hpp"

using namespace csiloc;
using namespace csiloc::data;

namespace {

Dataset positions_only(const std::vector<Position>& pos) {
    Dataset ds;
    ds.frame.antennas = 1;
    ds.frame.subcarriers = 1;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        CsiSample s;
        s.csi = Tensor(Shape{2, 1, 1}, std::vector<double>{double(i), 0});
        s.snr = {20};
        s.position = pos[i];
        s.id = i;
        ds.samples.push_back(s);
    }
    return ds;
}

Dataset table_layout(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Position> pos(n);
    for (auto& p : pos) p = {rng.uniform(-2, 2), rng.uniform(1, 3), rng.uniform(0.8, 1.2)};
    return positions_only(pos);
}

void expect_partition(const SplitIndices& idx, std::size_t n) {
    std::vector<std::size_t> all = idx.train;
    all.insert(all.end(), idx.eval.begin(), idx.eval.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), n);
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(all[i], i);
    EXPECT_TRUE(std::is_sorted(idx.train.begin(), idx.train.end()));
    EXPECT_TRUE(std::is_sorted(idx.eval.begin(), idx.eval.end()));
}

constexpr SplitKind kAll[] = {SplitKind::random, SplitKind::narrow, SplitKind::wide, SplitKind::within};

} // namespace

TEST(Split, RandomCountsAtPublishedScale) {
    const auto ds = table_layout(17486, 1);
    const auto idx = split_indices(ds, {SplitKind::random, 0.1, 7});
    EXPECT_EQ(idx.eval.size(), 1749u);
    EXPECT_EQ(idx.train.size(), 15737u);
    expect_partition(idx, ds.size());
}

TEST(Split, EveryKindPartitionsNearTheFractionForManySeeds) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ds = table_layout(2000 + 97 * seed, seed);
        const double target = double(ds.size()) / 10.0;
        for (auto kind : kAll) {
            const auto idx = split_indices(ds, {kind, 0.1, seed});
            expect_partition(idx, ds.size());
            EXPECT_LE(std::abs(double(idx.eval.size()) - target), 0.01 * double(ds.size()))
                << to_string(kind);
        }
    }
}

TEST(Split, GeometricPredicatesHold) {
    const auto ds = table_layout(5000, 3);
    ASSERT_EQ(long_axis(ds), 0u);  // x spans 4 m, y spans 2 m
    const auto narrow = split_indices(ds, {SplitKind::narrow, 0.1, 1});
    EXPECT_EQ(narrow.axis, 1u);
    std::vector<double> ys;
    for (const auto& s : ds.samples) ys.push_back(s.position[1]);
    std::sort(ys.begin(), ys.end());
    const double q90 = ys[std::size_t(std::floor(0.9 * double(ys.size())))- 1];
    for (auto i : narrow.eval) EXPECT_GT(ds.samples[i].position[1], q90);
    for (auto i : narrow.train) EXPECT_LT(ds.samples[i].position[1], narrow.threshold);

    const auto wide = split_indices(ds, {SplitKind::wide, 0.1, 1});
    EXPECT_EQ(wide.axis, 0u);
    for (auto i : wide.eval) EXPECT_GE(ds.samples[i].position[0], wide.threshold);
    for (auto i : wide.train) EXPECT_LT(ds.samples[i].position[0], wide.threshold);

    const auto within = split_indices(ds, {SplitKind::within, 0.1, 1});
    auto inside = [&](std::size_t i) {
        return std::abs(ds.samples[i].position[0] - within.center_x) <= within.half_width &&
               std::abs(ds.samples[i].position[1] - within.center_y) <= within.half_width;
    };
    for (auto i : within.eval) EXPECT_TRUE(inside(i));
    for (auto i : within.train) EXPECT_FALSE(inside(i));
    EXPECT_NEAR(within.center_x, 0.0, 0.1);
    EXPECT_NEAR(within.center_y, 2.0, 0.1);
}

TEST(Split, CollinearWideQuantile) {
    std::vector<Position> pos;
    for (int x = 0; x < 10; ++x) pos.push_back({double(x), 0.0, 1.0});
    const auto ds = positions_only(pos);
    const auto idx = split_indices(ds, {SplitKind::wide, 0.2, 1});
    EXPECT_EQ(idx.eval, (std::vector<std::size_t>{8, 9}));
}

TEST(Split, BoundaryTiesGoToEval) {
    std::vector<Position> pos;
    for (int x = 0; x < 10; ++x) pos.push_back({double(x), 0.0, 1.0});
    pos.push_back({8.0, 0.0, 1.0});
    const auto idx = split_indices(positions_only(pos), {SplitKind::wide, 0.2, 1});
    EXPECT_EQ(idx.eval, (std::vector<std::size_t>{8, 9, 10}));
}

TEST(Split, RandomDeterminesBySeed) {
    const auto ds = table_layout(300, 2);
    const auto a = split_indices(ds, {SplitKind::random, 0.1, 5});
    const auto b = split_indices(ds, {SplitKind::random, 0.1, 5});
    const auto c = split_indices(ds, {SplitKind::random, 0.1, 6});
    EXPECT_EQ(a.eval, b.eval);
    EXPECT_NE(a.eval, c.eval);
}

TEST(Split, DatasetsKeepSampleIdentities) {
    const auto ds = table_layout(200, 4);
    for (auto kind : kAll) {
        const auto [tr, ev] = split(ds, {kind, 0.1, 1});
        std::vector<std::uint64_t> ids;
        for (const auto& s : tr.samples) ids.push_back(s.id);
        for (const auto& s : ev.samples) ids.push_back(s.id);
        std::sort(ids.begin(), ids.end());
        for (std::size_t i = 0; i < ids.size(); ++i) ASSERT_EQ(ids[i], i);
        ASSERT_EQ(ids.size(), ds.size());
    }
}

TEST(Split, RejectsDegenerateAndBadFractions) {
    const auto same = positions_only(std::vector<Position>(20, Position{1, 1, 1}));
    for (auto kind : {SplitKind::narrow, SplitKind::wide, SplitKind::within})
        EXPECT_THROW(split_indices(same, {kind, 0.1, 1}), NumericError);
    EXPECT_NO_THROW(split_indices(same, {SplitKind::random, 0.1, 1}));
    const auto ds = table_layout(20, 1);
    EXPECT_THROW(split_indices(ds, {SplitKind::random, 0.0, 1}), ConfigError);
    EXPECT_THROW(split_indices(ds, {SplitKind::random, 1.0, 1}), ConfigError);
    EXPECT_THROW(split_indices(ds, {SplitKind::random, 0.01, 1}), NumericError);
    EXPECT_THROW(split_indices(Dataset{}, {SplitKind::random, 0.1, 1}), NumericError);
}

TEST(Split, KindNames) {
    for (auto k : kAll) EXPECT_EQ(parse_split_kind(to_string(k)), k);
    EXPECT_THROW(parse_split_kind("diagonal"), ConfigError);
    EXPECT_EQ(target_eval_count(17486, 0.1), 1749u);
    EXPECT_EQ(target_eval_count(25, 0.1), 3u);  // 2.5 rounds up
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csiloc/core/error.hpp"
#include "csiloc/core/rng.hpp"
#include "csiloc/data/dataset.hpp"

namespace csiloc::data {

enum class SplitKind { random, narrow, wide, within };

inline std::string to_string(SplitKind k) {
    switch (k) {
    case SplitKind::random: return "random";
    case SplitKind::narrow: return "narrow";
    case SplitKind::wide: return "wide";
    case SplitKind::within: return "within";
    }
    return "?";
}

inline SplitKind parse_split_kind(const std::string& s) {
    for (auto k : {SplitKind::random, SplitKind::narrow, SplitKind::wide, SplitKind::within})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown split kind '" + s + "'");
}

struct SplitStrategy {
    SplitKind kind = SplitKind::random;
    double eval_fraction = 0.1;
    std::uint64_t seed = 1;  ///< random kind only
};

/// Index partition plus the boundary that produced it.
struct SplitIndices {
    std::vector<std::size_t> train;  ///< ascending
    std::vector<std::size_t> eval;   ///< ascending
    /// narrow/wide: axis (0 = x, 1 = y) and threshold; eval has coord >= threshold.
    std::size_t axis = 0;
    double threshold = 0;
    /// within: eval has max(|x - cx|, |y - cy|) <= half_width.
    double center_x = 0, center_y = 0, half_width = 0;
};

/// round(n * fraction), halves rounded up.
inline std::size_t target_eval_count(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 0.5));
}

/// Axis (0 = x, 1 = y) with the larger position range; ties pick x.
inline std::size_t long_axis(const Dataset& ds) {
    double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
    for (const auto& s : ds.samples)
        for (int a = 0; a < 2; ++a) {
            lo[a] = std::min(lo[a], s.position[a]);
            hi[a] = std::max(hi[a], s.position[a]);
        }
    return (hi[1] - lo[1]) > (hi[0] - lo[0]) ? 1 : 0;
}

namespace detail {

inline void partition_by(const std::vector<bool>& is_eval, SplitIndices& out) {
    for (std::size_t i = 0; i < is_eval.size(); ++i) (is_eval[i] ? out.eval : out.train).push_back(i);
    if (out.eval.empty() || out.train.empty())
        throw NumericError("split produced an empty side; adjust eval_fraction");
}

/// Smallest value v such that at least `count` coordinates are >= v.
inline double upper_quantile(std::vector<double> coords, std::size_t count) {
    std::sort(coords.begin(), coords.end());
    return coords[coords.size() - count];
}

} // namespace detail

inline SplitIndices split_indices(const Dataset& ds, const SplitStrategy& strat) {
    if (ds.empty()) throw NumericError("cannot split an empty dataset");
    if (!(strat.eval_fraction > 0 && strat.eval_fraction < 1))
        throw ConfigError("eval_fraction must lie in (0, 1)");
    const std::size_t n = ds.size();
    const std::size_t want = target_eval_count(n, strat.eval_fraction);
    if (want == 0 || want >= n) throw NumericError("split produced an empty side; adjust eval_fraction");

    SplitIndices out;
    std::vector<bool> is_eval(n, false);
    if (strat.kind == SplitKind::random) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng rng(strat.seed);
        rng.shuffle(order);
        for (std::size_t i = n - want; i < n; ++i) is_eval[order[i]] = true;
        detail::partition_by(is_eval, out);
        return out;
    }

    bool degenerate = true;
    for (const auto& s : ds.samples)
        if (s.position[0] != ds.samples[0].position[0] || s.position[1] != ds.samples[0].position[1])
            degenerate = false;
    if (degenerate) throw NumericError("degenerate geometry: all positions coincide in the x-y plane");

    if (strat.kind == SplitKind::narrow || strat.kind == SplitKind::wide) {
        const std::size_t la = long_axis(ds);
        // narrow: strip along the long edge, cut across the short axis
        out.axis = strat.kind == SplitKind::narrow ? 1 - la : la;
        std::vector<double> coords;
        coords.reserve(n);
        for (const auto& s : ds.samples) coords.push_back(s.position[out.axis]);
        out.threshold = detail::upper_quantile(coords, want);
        for (std::size_t i = 0; i < n; ++i) is_eval[i] = coords[i] >= out.threshold;
        detail::partition_by(is_eval, out);
        return out;
    }

    // within: square window around the x-y centroid, grown until it holds `want` samples
    double cx = 0, cy = 0;
    for (const auto& s : ds.samples) {
        cx += s.position[0];
        cy += s.position[1];
    }
    cx /= static_cast<double>(n);
    cy /= static_cast<double>(n);
    std::vector<double> cheb(n);
    for (std::size_t i = 0; i < n; ++i)
        cheb[i] = std::max(std::abs(ds.samples[i].position[0] - cx),
                           std::abs(ds.samples[i].position[1] - cy));
    std::vector<double> sorted = cheb;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(want - 1), sorted.end());
    out.center_x = cx;
    out.center_y = cy;
    out.half_width = sorted[want - 1];
    for (std::size_t i = 0; i < n; ++i) is_eval[i] = cheb[i] <= out.half_width;
    detail::partition_by(is_eval, out);
    return out;
}

/// Train/eval partition; both sides keep the dataset's sample order.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitStrategy& strat) {
    const auto idx = split_indices(ds, strat);
    return {ds.subset(idx.train), ds.subset(idx.eval)};
}

} // namespace csiloc::data

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csiloc/core/error.hpp"

namespace csiloc::eval {

using Point = std::array<double, 3>;

/// Smallest ground-truth norm accepted by nmde.
inline constexpr double kMinTruthNorm = 1e-6;

inline double norm(const Point& p) { return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }

inline double distance(const Point& a, const Point& b) {
    return norm({a[0] - b[0], a[1] - b[1], a[2] - b[2]});
}

/// Mean of the distance errors.
inline double mde(std::span<const double> errors) {
    if (errors.empty()) throw NumericError("mde of an empty error list");
    double s = 0;
    for (double e : errors) s += e;
    return s / static_cast<double>(errors.size());
}

/// Square root of the mean squared distance error; never below mde.
inline double rmse(std::span<const double> errors) {
    if (errors.empty()) throw NumericError("rmse of an empty error list");
    double s = 0;
    for (double e : errors) s += e * e;
    return std::sqrt(s / static_cast<double>(errors.size()));
}

/// Mean of ||p - p_hat|| / ||p|| as a ratio (multiply by 100 for percent).
inline double nmde(std::span<const std::pair<Point, Point>> pairs) {
    if (pairs.empty()) throw NumericError("nmde of an empty list");
    std::vector<std::size_t> bad;
    double s = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double n = norm(pairs[i].first);
        if (n < kMinTruthNorm) {
            bad.push_back(i);
            continue;
        }
        s += distance(pairs[i].first, pairs[i].second) / n;
    }
    if (!bad.empty()) {
        std::string msg = "nmde undefined: ground-truth norm below 1e-6 at indices";
        for (std::size_t k = 0; k < bad.size() && k < 20; ++k) msg += " " + std::to_string(bad[k]);
        if (bad.size() > 20) msg += " ...";
        throw NumericError(msg);
    }
    return s / static_cast<double>(pairs.size());
}

} // namespace csiloc::eval

#pragma once

#include <cmath>

#include "csiloc/core/error.hpp"
#include "csiloc/data/dataset.hpp"

namespace csiloc::data {

/// Global CSI scale: population standard deviation over every training scalar.
struct NormStats {
    double scale = 1.0;
};

inline NormStats fit_normalizer(const Dataset& train) {
    if (train.empty()) throw NumericError("cannot fit a normalizer on an empty dataset");
    double count = 0, mean = 0, m2 = 0;
    // Welford keeps the variance accurate for large offsets
    for (const auto& s : train.samples)
        for (double v : s.csi.values()) {
            count += 1;
            const double d = v - mean;
            mean += d / count;
            m2 += d * (v - mean);
        }
    const double var = m2 / count;
    if (!(var > 0)) throw NumericError("training CSI has zero variance");
    return {std::sqrt(var)};
}

/// Divides every CSI value by stats.scale; positions and SNR are left as-is.
inline Dataset apply_normalizer(Dataset ds, const NormStats& stats) {
    if (!(stats.scale > 0)) throw NumericError("normalizer scale must be positive");
    for (auto& s : ds.samples)
        for (double& v : s.csi.values()) v /= stats.scale;
    return ds;
}

} // namespace csiloc::data

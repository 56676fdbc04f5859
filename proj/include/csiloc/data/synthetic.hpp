#pragma once

// Desk-scale CSI generator: an 8x2 planar array at the origin, a transmitter
// on a table in front of it, line-of-sight plus image-source reflections off
// axis-aligned walls, and complex AWGN at a per-sample SNR.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "csiloc/core/error.hpp"
#include "csiloc/core/rng.hpp"
#include "csiloc/data/dataset.hpp"

namespace csiloc::data {

inline constexpr double kSpeedOfLight = 299'792'458.0;
/// SNR recorded for every antenna when noise is disabled.
inline constexpr double kNoiselessSnrDb = 300.0;

struct SynthConfig {
    std::size_t num_samples = 1000;
    std::size_t subcarriers = 64;
    double fc_hz = 1.25e9;
    double bandwidth_hz = 20e6;
    double guard_fraction = 50.0 / 1024.0;  ///< of the bandwidth, per band edge
    std::size_t array_rows = 8;
    std::size_t array_cols = 2;
    double element_spacing_m = 0;  ///< 0 selects half a wavelength at fc
    std::array<double, 2> x_range{-2.0, 2.0};
    std::array<double, 2> y_range{1.0, 3.0};
    std::array<double, 2> z_range{0.8, 1.2};
    std::size_t num_reflectors = 3;
    double reflector_gain_min = 0.2;
    double reflector_gain_max = 0.6;
    bool noise = true;
    double snr_min_db = 10.0;
    double snr_max_db = 30.0;
    std::uint64_t seed = 1;

    [[nodiscard]] double spacing() const {
        return element_spacing_m > 0 ? element_spacing_m : kSpeedOfLight / fc_hz / 2.0;
    }

    void validate() const {
        if (num_samples == 0) throw ConfigError("num_samples must be positive");
        if (subcarriers < 8) throw ConfigError("subcarriers must be >= 8");
        if (!(fc_hz > 0) || !(bandwidth_hz > 0)) throw ConfigError("fc and bandwidth must be positive");
        if (!(guard_fraction >= 0 && guard_fraction < 0.5)) throw ConfigError("guard_fraction in [0, 0.5)");
        if (array_rows == 0 || array_cols == 0) throw ConfigError("array must have elements");
        for (const auto* r : {&x_range, &y_range, &z_range})
            if (!((*r)[1] > (*r)[0])) throw ConfigError("extents must be positive");
        if (!(reflector_gain_max >= reflector_gain_min && reflector_gain_min >= 0))
            throw ConfigError("bad reflector gain range");
        if (noise && !(snr_max_db >= snr_min_db)) throw ConfigError("bad SNR range");
    }
};

using Vec3 = std::array<double, 3>;

inline double distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Planar reflector "axis = offset" with a complex reflection coefficient.
struct Reflector {
    std::size_t axis = 0;
    double offset = 0;
    std::complex<double> gain;

    [[nodiscard]] Vec3 image_of(const Vec3& p) const {
        Vec3 q = p;
        q[axis] = 2.0 * offset - p[axis];
        return q;
    }
};

inline std::vector<Vec3> antenna_positions(const SynthConfig& cfg) {
    const double d = cfg.spacing();
    std::vector<Vec3> ants;
    for (std::size_t r = 0; r < cfg.array_rows; ++r)
        for (std::size_t c = 0; c < cfg.array_cols; ++c)
            ants.push_back({(static_cast<double>(r) - (cfg.array_rows - 1) / 2.0) * d, 0.0,
                            (static_cast<double>(c) - (cfg.array_cols - 1) / 2.0) * d});
    return ants;
}

inline std::vector<double> subcarrier_frequencies(const SynthConfig& cfg) {
    const double guard = cfg.guard_fraction * cfg.bandwidth_hz;
    const double useful = cfg.bandwidth_hz - 2.0 * guard;
    const double df = useful / static_cast<double>(cfg.subcarriers);
    std::vector<double> f(cfg.subcarriers);
    for (std::size_t k = 0; k < f.size(); ++k)
        f[k] = cfg.fc_hz - cfg.bandwidth_hz / 2.0 + guard + static_cast<double>(k) * df;
    return f;
}

/// Walls, floor and ceiling placed outside the region spanned by table and array.
inline std::vector<Reflector> draw_reflectors(const SynthConfig& cfg, Rng& rng) {
    std::vector<Reflector> out;
    for (std::size_t p = 0; p < cfg.num_reflectors; ++p) {
        Reflector r;
        const auto side = rng.below(6);
        r.axis = side / 2;
        const bool high = side % 2 == 1;
        const std::array<double, 2> ext =
            r.axis == 0 ? std::array{std::min(cfg.x_range[0], -1.0), std::max(cfg.x_range[1], 1.0)}
            : r.axis == 1 ? std::array{std::min(cfg.y_range[0], 0.0), cfg.y_range[1]}
                          : std::array{std::min(cfg.z_range[0], -0.2), std::max(cfg.z_range[1], 0.2)};
        const double margin = rng.uniform(0.5, 2.0);
        r.offset = high ? ext[1] + margin : ext[0] - margin;
        const double mag = rng.uniform(cfg.reflector_gain_min, cfg.reflector_gain_max);
        r.gain = std::polar(mag, rng.uniform(0.0, 2.0 * std::numbers::pi));
        out.push_back(r);
    }
    return out;
}

inline double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

/// Values are rounded to float32 so a canonical write/read round trip is exact.
inline Dataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    Rng env_rng(derive_seed(cfg.seed, 0));
    Rng rng(derive_seed(cfg.seed, 1));
    // separate stream so toggling noise leaves positions unchanged
    Rng noise_rng(derive_seed(cfg.seed, 2));
    const auto ants = antenna_positions(cfg);
    const auto freqs = subcarrier_frequencies(cfg);
    const auto reflectors = draw_reflectors(cfg, env_rng);
    const std::size_t A = ants.size(), W = cfg.subcarriers;

    Dataset ds;
    ds.frame.fc_hz = cfg.fc_hz;
    ds.frame.bandwidth_hz = cfg.bandwidth_hz;
    ds.frame.antennas = A;
    ds.frame.subcarriers = W;
    ds.frame.antenna_geometry = std::to_string(cfg.array_rows) + "x" +
                                std::to_string(cfg.array_cols) + " planar array, spacing " +
                                std::to_string(cfg.spacing()) + " m";
    ds.samples.resize(cfg.num_samples);

    std::vector<std::complex<double>> h(W);
    for (std::size_t i = 0; i < cfg.num_samples; ++i) {
        Vec3 tx;
        bool clear = false;
        while (!clear) {
            tx = {rng.uniform(cfg.x_range[0], cfg.x_range[1]),
                  rng.uniform(cfg.y_range[0], cfg.y_range[1]),
                  rng.uniform(cfg.z_range[0], cfg.z_range[1])};
            clear = true;
            for (const auto& a : ants)
                if (distance(tx, a) < 0.01) clear = false;
        }
        const double snr_db = cfg.noise ? noise_rng.uniform(cfg.snr_min_db, cfg.snr_max_db) : 0.0;

        auto& s = ds.samples[i];
        s.id = i;
        s.csi = Tensor(Shape{2, A, W});
        s.snr.resize(A);
        std::vector<Vec3> images;
        for (const auto& r : reflectors) images.push_back(r.image_of(tx));
        for (std::size_t a = 0; a < A; ++a) {
            const double d0 = distance(tx, ants[a]);
            const double tau0 = d0 / kSpeedOfLight;
            for (std::size_t k = 0; k < W; ++k)
                h[k] = std::polar(1.0 / d0, -2.0 * std::numbers::pi * freqs[k] * tau0);
            for (std::size_t p = 0; p < reflectors.size(); ++p) {
                const double dp = distance(images[p], ants[a]);
                const double taup = dp / kSpeedOfLight;
                const auto alpha = reflectors[p].gain / dp;
                for (std::size_t k = 0; k < W; ++k)
                    h[k] += alpha * std::polar(1.0, -2.0 * std::numbers::pi * freqs[k] * taup);
            }
            if (cfg.noise) {
                double signal = 0;
                for (const auto& v : h) signal += std::norm(v);
                signal /= static_cast<double>(W);
                const double sigma = std::sqrt(signal / std::pow(10.0, snr_db / 10.0) / 2.0);
                double noise = 0;
                for (auto& v : h) {
                    const std::complex<double> n(sigma * noise_rng.normal(), sigma * noise_rng.normal());
                    noise += std::norm(n);
                    v += n;
                }
                noise /= static_cast<double>(W);
                s.snr[a] = quantize_f32(10.0 * std::log10(signal / noise));
            } else {
                s.snr[a] = kNoiselessSnrDb;
            }
            for (std::size_t k = 0; k < W; ++k) {
                s.csi.at(0, a, k) = quantize_f32(h[k].real());
                s.csi.at(1, a, k) = quantize_f32(h[k].imag());
            }
        }
        for (std::size_t d = 0; d < 3; ++d) s.position[d] = quantize_f32(tx[d]);
    }
    return ds;
}

} // namespace csiloc::data

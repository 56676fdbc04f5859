#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiloc/core/error.hpp"
#include "csiloc/core/tensor.hpp"

namespace csiloc::data {

using Position = std::array<double, 3>;

/// One labeled fingerprint. csi is (2 = Re/Im, antennas, subcarriers).
struct CsiSample {
    Tensor csi;
    std::vector<double> snr;  ///< per antenna, dB
    Position position{};      ///< meters, native frame
    std::uint64_t id = 0;     ///< stable identity within the originating dataset
};

struct FrameInfo {
    double fc_hz = 1.25e9;
    double bandwidth_hz = 20e6;
    std::size_t antennas = 16;
    std::size_t subcarriers = 924;
    std::string antenna_geometry = "8x2 uniform planar array";
};

struct Dataset {
    std::vector<CsiSample> samples;
    FrameInfo frame;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] bool empty() const { return samples.empty(); }

    /// Nonempty, uniform shapes, all values finite.
    void validate() const {
        if (samples.empty()) throw FormatError("dataset is empty");
        const Shape expect{2, frame.antennas, frame.subcarriers};
        for (const auto& s : samples) {
            if (!(s.csi.shape() == expect))
                throw FormatError("sample " + std::to_string(s.id) + " has csi shape " +
                                  s.csi.shape().str() + ", dataset declares " + expect.str());
            if (s.snr.size() != frame.antennas)
                throw FormatError("sample " + std::to_string(s.id) + " snr length mismatch");
            for (double v : s.csi.values())
                if (!std::isfinite(v))
                    throw NumericError("non-finite csi value in sample " + std::to_string(s.id));
            for (double v : s.snr)
                if (!std::isfinite(v))
                    throw NumericError("non-finite snr value in sample " + std::to_string(s.id));
            for (double v : s.position)
                if (!std::isfinite(v))
                    throw NumericError("non-finite position in sample " + std::to_string(s.id));
        }
    }

    /// Samples at the given indices, in the given order.
    [[nodiscard]] Dataset subset(const std::vector<std::size_t>& idx) const {
        Dataset d;
        d.frame = frame;
        d.samples.reserve(idx.size());
        for (auto i : idx) d.samples.push_back(samples.at(i));
        return d;
    }
};

// ---------------------------------------------------------------- canonical container

namespace detail {

inline void put_f32(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline float get_f32(const char* p) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i)
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<float>(bits);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw FormatError("missing file " + p.string());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + p.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("failed writing " + p.string());
}

} // namespace detail

/// Bytes csi.f32 must hold for a declared shape.
inline std::uint64_t expected_csi_bytes(std::uint64_t n, std::uint64_t antennas,
                                        std::uint64_t subcarriers) {
    return n * antennas * subcarriers * 2 * 4;
}

/// Writes meta.json, csi.f32, snr.f32 and pos.f32 into dir (created if needed).
/// Values are stored as float32; doubles that are not float-representable are rounded.
inline void save_canonical(const Dataset& ds, const std::filesystem::path& dir) {
    ds.validate();
    std::filesystem::create_directories(dir);
    const std::size_t A = ds.frame.antennas, W = ds.frame.subcarriers;
    nlohmann::ordered_json meta;
    meta["format_version"] = 1;
    meta["n"] = ds.size();
    meta["antennas"] = A;
    meta["subcarriers"] = W;
    meta["fc_hz"] = ds.frame.fc_hz;
    meta["bandwidth_hz"] = ds.frame.bandwidth_hz;
    meta["frame"] = "native";
    detail::write_file(dir / "meta.json", meta.dump(2) + "\n");

    std::string csi, snr, pos;
    csi.reserve(expected_csi_bytes(ds.size(), A, W));
    for (const auto& s : ds.samples) {
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t k = 0; k < W; ++k) {
                detail::put_f32(csi, s.csi.at(0, a, k));
                detail::put_f32(csi, s.csi.at(1, a, k));
            }
        for (double v : s.snr) detail::put_f32(snr, v);
        for (double v : s.position) detail::put_f32(pos, v);
    }
    detail::write_file(dir / "csi.f32", csi);
    detail::write_file(dir / "snr.f32", snr);
    detail::write_file(dir / "pos.f32", pos);
}

inline Dataset load_canonical(const std::filesystem::path& dir) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(detail::read_file(dir / "meta.json"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed meta.json: " + std::string(e.what()));
    }
    std::uint64_t n = 0, A = 0, W = 0;
    Dataset ds;
    try {
        if (meta.at("format_version").get<int>() != 1)
            throw FormatError("unsupported canonical format_version");
        n = meta.at("n").get<std::uint64_t>();
        A = meta.at("antennas").get<std::uint64_t>();
        W = meta.at("subcarriers").get<std::uint64_t>();
        ds.frame.fc_hz = meta.at("fc_hz").get<double>();
        ds.frame.bandwidth_hz = meta.at("bandwidth_hz").get<double>();
        if (meta.at("frame").get<std::string>() != "native")
            throw FormatError("unsupported coordinate frame");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed meta.json: " + std::string(e.what()));
    }
    if (n == 0 || A == 0 || W == 0) throw FormatError("meta.json declares an empty dataset");
    ds.frame.antennas = A;
    ds.frame.subcarriers = W;

    const auto csi = detail::read_file(dir / "csi.f32");
    const auto snr = detail::read_file(dir / "snr.f32");
    const auto pos = detail::read_file(dir / "pos.f32");
    auto check = [](const std::string& name, std::uint64_t got, std::uint64_t want) {
        if (got != want)
            throw FormatError(name + " holds " + std::to_string(got) + " bytes, meta.json implies " +
                              std::to_string(want));
    };
    check("csi.f32", csi.size(), expected_csi_bytes(n, A, W));
    check("snr.f32", snr.size(), n * A * 4);
    check("pos.f32", pos.size(), n * 3 * 4);

    ds.samples.resize(n);
    const char* c = csi.data();
    for (std::uint64_t i = 0; i < n; ++i) {
        auto& s = ds.samples[i];
        s.id = i;
        s.csi = Tensor(Shape{2, A, W});
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t k = 0; k < W; ++k, c += 8) {
                s.csi.at(0, a, k) = detail::get_f32(c);
                s.csi.at(1, a, k) = detail::get_f32(c + 4);
            }
        s.snr.resize(A);
        for (std::size_t a = 0; a < A; ++a) s.snr[a] = detail::get_f32(snr.data() + (i * A + a) * 4);
        for (std::size_t d = 0; d < 3; ++d)
            s.position[d] = detail::get_f32(pos.data() + (i * 3 + d) * 4);
    }
    ds.validate();
    return ds;
}

} // namespace csiloc::data

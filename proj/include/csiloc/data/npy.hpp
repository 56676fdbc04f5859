#pragma once

// Reader/writer for the NPY v1.0 subset used by CSI array dumps:
// little-endian '<f4', '<f8' and '<c8', C order.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csiloc/core/error.hpp"
#include "csiloc/data/dataset.hpp"

namespace csiloc::data {

struct NpyArray {
    std::string descr;               ///< '<f4', '<f8' or '<c8'
    std::vector<std::size_t> shape;
    std::vector<double> values;      ///< complex arrays interleave re, im

    [[nodiscard]] std::size_t numel() const {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
    [[nodiscard]] bool complex() const { return descr == "<c8"; }
};

namespace detail {

inline std::size_t npy_item_size(const std::string& descr) {
    if (descr == "<f4") return 4;
    if (descr == "<f8" || descr == "<c8") return 8;
    throw FormatError("unsupported NPY dtype '" + descr + "' (expected <f4, <f8 or <c8)");
}

inline void skip_ws(const std::string& s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\n' || s[i] == '\t')) ++i;
}

/// Parses the header dict literal: {'descr': ..., 'fortran_order': ..., 'shape': (...), }
inline NpyArray parse_npy_header(const std::string& h) {
    NpyArray arr;
    bool have_descr = false, have_order = false, have_shape = false;
    std::size_t i = 0;
    skip_ws(h, i);
    if (i >= h.size() || h[i] != '{') throw FormatError("NPY header is not a dict literal");
    ++i;
    while (true) {
        skip_ws(h, i);
        if (i < h.size() && h[i] == '}') break;
        if (i >= h.size() || h[i] != '\'') throw FormatError("NPY header: expected quoted key");
        const auto kend = h.find('\'', i + 1);
        if (kend == std::string::npos) throw FormatError("NPY header: unterminated key");
        const std::string key = h.substr(i + 1, kend - i - 1);
        i = kend + 1;
        skip_ws(h, i);
        if (i >= h.size() || h[i] != ':') throw FormatError("NPY header: expected ':'");
        ++i;
        skip_ws(h, i);
        if (key == "descr") {
            if (i >= h.size() || h[i] != '\'') throw FormatError("NPY header: descr must be a string");
            const auto end = h.find('\'', i + 1);
            if (end == std::string::npos) throw FormatError("NPY header: unterminated descr");
            arr.descr = h.substr(i + 1, end - i - 1);
            i = end + 1;
            have_descr = true;
        } else if (key == "fortran_order") {
            if (h.compare(i, 5, "False") == 0) {
                i += 5;
            } else if (h.compare(i, 4, "True") == 0) {
                throw FormatError("NPY fortran_order arrays are not supported (C order required)");
            } else {
                throw FormatError("NPY header: fortran_order must be True or False");
            }
            have_order = true;
        } else if (key == "shape") {
            if (i >= h.size() || h[i] != '(') throw FormatError("NPY header: shape must be a tuple");
            const auto end = h.find(')', i);
            if (end == std::string::npos) throw FormatError("NPY header: unterminated shape");
            std::string body = h.substr(i + 1, end - i - 1);
            std::size_t j = 0;
            while (j < body.size()) {
                skip_ws(body, j);
                if (j >= body.size()) break;
                std::size_t k = j;
                while (k < body.size() && body[k] >= '0' && body[k] <= '9') ++k;
                if (k == j) throw FormatError("NPY header: bad shape tuple");
                arr.shape.push_back(std::stoull(body.substr(j, k - j)));
                j = k;
                skip_ws(body, j);
                if (j < body.size() && body[j] == ',') ++j;
            }
            i = end + 1;
            have_shape = true;
        } else {
            throw FormatError("NPY header: unexpected key '" + key + "'");
        }
        skip_ws(h, i);
        if (i < h.size() && h[i] == ',') ++i;
    }
    if (!have_descr || !have_order || !have_shape)
        throw FormatError("NPY header missing descr, fortran_order or shape");
    (void)npy_item_size(arr.descr);
    return arr;
}

} // namespace detail

inline NpyArray parse_npy(const std::string& buf) {
    static constexpr char magic[] = "\x93NUMPY";
    if (buf.size() < 10 || buf.compare(0, 6, magic, 6) != 0) throw FormatError("not an NPY file");
    const int major = static_cast<unsigned char>(buf[6]);
    const int minor = static_cast<unsigned char>(buf[7]);
    if (major != 1 || minor != 0)
        throw FormatError("unsupported NPY version " + std::to_string(major) + "." +
                          std::to_string(minor) + " (only 1.0 is supported)");
    const std::size_t hlen = static_cast<unsigned char>(buf[8]) |
                             (static_cast<std::size_t>(static_cast<unsigned char>(buf[9])) << 8);
    if (10 + hlen > buf.size()) throw FormatError("NPY header truncated");
    NpyArray arr = detail::parse_npy_header(buf.substr(10, hlen));
    const std::size_t item = detail::npy_item_size(arr.descr);
    const std::size_t n = arr.numel();
    const std::size_t offset = 10 + hlen;
    if (buf.size() - offset != n * item)
        throw FormatError("NPY payload holds " + std::to_string(buf.size() - offset) +
                          " bytes, header implies " + std::to_string(n * item));
    const char* p = buf.data() + offset;
    auto u32 = [](const char* q) {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(q[i])) << (8 * i);
        return v;
    };
    if (arr.descr == "<f4") {
        arr.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) arr.values[i] = std::bit_cast<float>(u32(p + 4 * i));
    } else if (arr.descr == "<c8") {
        arr.values.resize(2 * n);
        for (std::size_t i = 0; i < 2 * n; ++i) arr.values[i] = std::bit_cast<float>(u32(p + 4 * i));
    } else {
        arr.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t v = 0;
            for (int b = 0; b < 8; ++b)
                v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[8 * i + b])) << (8 * b);
            arr.values[i] = std::bit_cast<double>(v);
        }
    }
    return arr;
}

inline NpyArray read_npy(const std::filesystem::path& path) {
    return parse_npy(detail::read_file(path));
}

/// Encodes an array as NPY v1.0, header padded so the payload is 64-byte aligned.
inline std::string serialize_npy(const NpyArray& arr) {
    const std::size_t item = detail::npy_item_size(arr.descr);
    const std::size_t n = arr.numel();
    if (arr.values.size() != (arr.complex() ? 2 * n : n))
        throw FormatError("NPY array value count does not match its shape");
    std::string dict = "{'descr': '" + arr.descr + "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < arr.shape.size(); ++i) {
        dict += std::to_string(arr.shape[i]);
        if (arr.shape.size() == 1 || i + 1 < arr.shape.size()) dict += ",";
        if (i + 1 < arr.shape.size()) dict += " ";
    }
    dict += "), }";
    std::size_t total = 10 + dict.size() + 1;
    const std::size_t padded = (total + 63) / 64 * 64;
    dict.append(padded - total, ' ');
    dict += '\n';
    std::string out("\x93NUMPY\x01\x00", 8);
    out.push_back(static_cast<char>(dict.size() & 0xff));
    out.push_back(static_cast<char>((dict.size() >> 8) & 0xff));
    out += dict;
    out.reserve(out.size() + n * item);
    for (double v : arr.values) {
        if (arr.descr == "<f8") {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
        } else {
            detail::put_f32(out, v);
        }
    }
    return out;
}

inline void write_npy(const std::filesystem::path& path, const NpyArray& arr) {
    detail::write_file(path, serialize_npy(arr));
}

/// Builds a dataset from CSI (complex (N,A,W) or real (N,A,W,2)), SNR (N,A) and position (N,3) arrays.
inline Dataset import_npy_arrays(const NpyArray& csi, const NpyArray& snr, const NpyArray& pos,
                                 FrameInfo frame = {}) {
    if (csi.complex() ? csi.shape.size() != 3
                      : (csi.shape.size() != 4 || csi.shape[3] != 2))
        throw FormatError("csi array must be complex (N,A,W) or real (N,A,W,2)");
    if (snr.complex() || pos.complex()) throw FormatError("snr and position arrays must be real");
    const std::size_t N = csi.shape[0], A = csi.shape[1], W = csi.shape[2];
    if (snr.shape.size() != 2 || snr.shape[1] != A) throw FormatError("snr array must be (N,antennas)");
    if (pos.shape.size() != 2 || pos.shape[1] != 3) throw FormatError("position array must be (N,3)");
    if (snr.shape[0] != N || pos.shape[0] != N)
        throw FormatError("inconsistent sample counts across csi/snr/position arrays: " +
                          std::to_string(N) + ", " + std::to_string(snr.shape[0]) + ", " +
                          std::to_string(pos.shape[0]));
    frame.antennas = A;
    frame.subcarriers = W;
    Dataset ds;
    ds.frame = frame;
    ds.samples.resize(N);
    // both layouts store (sample, antenna, subcarrier, re/im) in C order
    const double* v = csi.values.data();
    for (std::size_t i = 0; i < N; ++i) {
        auto& s = ds.samples[i];
        s.id = i;
        s.csi = Tensor(Shape{2, A, W});
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t k = 0; k < W; ++k, v += 2) {
                s.csi.at(0, a, k) = v[0];
                s.csi.at(1, a, k) = v[1];
            }
        s.snr.assign(snr.values.begin() + static_cast<std::ptrdiff_t>(i * A),
                     snr.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * A));
        for (std::size_t d = 0; d < 3; ++d) s.position[d] = pos.values[i * 3 + d];
    }
    ds.validate();
    return ds;
}

inline Dataset import_npy(const std::filesystem::path& csi_path,
                          const std::filesystem::path& snr_path,
                          const std::filesystem::path& pos_path, FrameInfo frame = {}) {
    return import_npy_arrays(read_npy(csi_path), read_npy(snr_path), read_npy(pos_path), frame);
}

/// Inverse of import_npy: dumps a dataset as csi (real '<f4'/'<f8' (N,A,W,2) or '<c8' (N,A,W)), snr, pos.
inline void export_npy(const Dataset& ds, const std::filesystem::path& dir,
                       const std::string& csi_descr = "<f4", const std::string& real_descr = "<f4") {
    ds.validate();
    std::filesystem::create_directories(dir);
    const std::size_t N = ds.size(), A = ds.frame.antennas, W = ds.frame.subcarriers;
    NpyArray csi{csi_descr, {}, {}};
    csi.shape = csi.complex() ? std::vector<std::size_t>{N, A, W}
                              : std::vector<std::size_t>{N, A, W, 2};
    csi.values.reserve(2 * N * A * W);
    NpyArray snr{real_descr, {N, A}, {}};
    NpyArray pos{real_descr, {N, 3}, {}};
    for (const auto& s : ds.samples) {
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t k = 0; k < W; ++k) {
                csi.values.push_back(s.csi.at(0, a, k));
                csi.values.push_back(s.csi.at(1, a, k));
            }
        snr.values.insert(snr.values.end(), s.snr.begin(), s.snr.end());
        pos.values.insert(pos.values.end(), s.position.begin(), s.position.end());
    }
    write_npy(dir / "csi.npy", csi);
    write_npy(dir / "snr.npy", snr);
    write_npy(dir / "pos.npy", pos);
}

} // namespace csiloc::data

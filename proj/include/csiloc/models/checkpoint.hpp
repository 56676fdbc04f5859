#pragma once

// Checkpoint layout:
//   "CSILOC1\n"
//   text header, one "key value" per line, ending with "end\n":
//     model <kind> / input <C> <H> <W> / arch <k=v ...> / hidden <n ...>
//     norm_scale <real> / layers <n> / layer <descriptor> x n / blobs <n>
//   then per LayerParams in layer order: weights blob, bias blob; each blob is
//   a u64 LE element count followed by that many f64 LE values.

#include <bit>
#include <cstdint>
#include <fstream>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "csiloc/core/error.hpp"
#include "csiloc/core/text.hpp"
#include "csiloc/models/arch.hpp"

namespace csiloc::models {

inline constexpr std::string_view kCheckpointMagic = "CSILOC1\n";

template <typename T>
struct Checkpoint {
    ModelSpec spec;
    nn::Network<T> network;
    double norm_scale = 1.0;
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(const std::string& buf, std::size_t& pos) {
    if (pos + 8 > buf.size()) throw FormatError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
}

inline std::string arch_line(const ArchConfig& a) {
    std::ostringstream s;
    s << "base_filters=" << a.base_filters << " growth=" << format_double(a.growth)
      << " kernel=" << a.kernel << " stride=" << a.stride
      << " residual_units=" << a.residual_units_per_block << " head_units=" << a.head_units
      << " stem_stride=" << a.stem_stride << " pool_size=" << a.pool_size
      << " pool_stride=" << a.pool_stride << " seed=" << a.seed;
    return s.str();
}

inline ArchConfig parse_arch_line(const std::string& line) {
    ArchConfig a;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw FormatError("bad arch token '" + tok + "'");
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "growth") a.growth = parse_double(val);
        else if (key == "base_filters") a.base_filters = parse_u64(val);
        else if (key == "kernel") a.kernel = parse_u64(val);
        else if (key == "stride") a.stride = parse_u64(val);
        else if (key == "residual_units") a.residual_units_per_block = parse_u64(val);
        else if (key == "head_units") a.head_units = parse_u64(val);
        else if (key == "stem_stride") a.stem_stride = parse_u64(val);
        else if (key == "pool_size") a.pool_size = parse_u64(val);
        else if (key == "pool_stride") a.pool_stride = parse_u64(val);
        else if (key == "seed") a.seed = parse_u64(val);
        else throw FormatError("unknown arch field '" + key + "'");
    }
    return a;
}

template <typename T>
std::vector<std::string> layer_lines(const nn::Network<T>& net) {
    std::vector<std::string> v;
    for (std::size_t i = 0; i < net.size(); ++i) v.push_back(net.layer(i).describe());
    return v;
}

template <typename T>
std::size_t blob_count(const nn::Network<T>& net) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < net.size(); ++i) n += 2 * net.layer(i).params().size();
    return n;
}

} // namespace detail

template <typename T>
std::string serialize_checkpoint(const ModelSpec& spec, const nn::Network<T>& net,
                                 double norm_scale) {
    std::string out(kCheckpointMagic);
    out += "model " + to_string(spec.kind) + "\n";
    const Shape in = net.input_shape();
    out += "input " + std::to_string(in[0]) + " " + std::to_string(in[1]) + " " +
           std::to_string(in[2]) + "\n";
    out += "arch " + detail::arch_line(spec.arch) + "\n";
    out += "hidden";
    for (auto h : spec.hidden) out += " " + std::to_string(h);
    out += "\n";
    out += "norm_scale " + format_double(norm_scale) + "\n";
    const auto lines = detail::layer_lines(net);
    out += "layers " + std::to_string(lines.size()) + "\n";
    for (const auto& l : lines) out += "layer " + l + "\n";
    out += "blobs " + std::to_string(detail::blob_count(net)) + "\n";
    out += "end\n";
    auto blob = [&](const BasicTensor<T>& t) {
        detail::put_u64(out, t.size());
        for (std::size_t i = 0; i < t.size(); ++i)
            detail::put_u64(out, std::bit_cast<std::uint64_t>(static_cast<double>(t[i])));
    };
    for (std::size_t i = 0; i < net.size(); ++i)
        for (const auto& p : net.layer(i).params()) {
            blob(p.weights);
            blob(p.bias);
        }
    return out;
}

template <typename T>
Checkpoint<T> deserialize_checkpoint(const std::string& buf) {
    if (buf.compare(0, kCheckpointMagic.size(), kCheckpointMagic) != 0)
        throw FormatError("not a checkpoint: bad magic");
    std::size_t pos = kCheckpointMagic.size();
    auto next_line = [&]() {
        const auto nl = buf.find('\n', pos);
        if (nl == std::string::npos) throw FormatError("checkpoint header truncated");
        std::string line = buf.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };
    auto expect = [&](const std::string& key) {
        std::string line = next_line();
        if (line.rfind(key, 0) != 0 ||
            (line.size() > key.size() && line[key.size()] != ' '))
            throw FormatError("checkpoint header: expected '" + key + "', got '" + line + "'");
        return line.size() > key.size() ? line.substr(key.size() + 1) : std::string{};
    };

    Checkpoint<T> ck;
    ck.spec.kind = parse_model_kind(expect("model"));
    {
        std::istringstream in(expect("input"));
        std::size_t c = 0, h = 0, w = 0;
        if (!(in >> c >> h >> w) || c != 2) throw FormatError("checkpoint header: bad input shape");
        ck.spec.input = {h, w};
    }
    ck.spec.arch = detail::parse_arch_line(expect("arch"));
    {
        std::istringstream in(expect("hidden"));
        std::string tok;
        while (in >> tok) ck.spec.hidden.push_back(parse_u64(tok));
    }
    ck.norm_scale = parse_double(expect("norm_scale"));
    if (!(ck.norm_scale > 0)) throw FormatError("checkpoint norm_scale must be positive");
    const std::size_t n_layers = parse_u64(expect("layers"));
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < n_layers; ++i) lines.push_back(expect("layer"));
    const std::size_t n_blobs = parse_u64(expect("blobs"));
    expect("end");

    try {
        ck.network = build<T>(ck.spec);
    } catch (const Error& e) {
        throw FormatError(std::string("checkpoint header does not describe a valid model: ") +
                          e.what());
    }
    if (detail::layer_lines(ck.network) != lines)
        throw FormatError("checkpoint layer list does not match its architecture header");
    if (detail::blob_count(ck.network) != n_blobs)
        throw FormatError("checkpoint blob count does not match its architecture");

    auto read_blob = [&](BasicTensor<T>& t) {
        const std::uint64_t n = detail::get_u64(buf, pos);
        if (n != t.size())
            throw FormatError("checkpoint blob holds " + std::to_string(n) + " values, layer needs " +
                              std::to_string(t.size()));
        if (pos + 8 * n > buf.size()) throw FormatError("checkpoint truncated");
        for (std::size_t i = 0; i < n; ++i)
            t[i] = static_cast<T>(std::bit_cast<double>(detail::get_u64(buf, pos)));
    };
    for (std::size_t i = 0; i < ck.network.size(); ++i)
        for (auto& p : ck.network.layer(i).params()) {
            read_blob(p.weights);
            read_blob(p.bias);
        }
    if (pos != buf.size()) throw FormatError("checkpoint has trailing bytes");
    return ck;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                     const nn::Network<T>& net, double norm_scale) {
    const auto bytes = serialize_checkpoint(spec, net, norm_scale);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write checkpoint " + path.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("failed writing checkpoint " + path.string());
}

template <typename T = double>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open checkpoint " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint<T>(buf);
}

} // namespace csiloc::models

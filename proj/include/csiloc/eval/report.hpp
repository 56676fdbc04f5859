#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiloc/core/parallel.hpp"
#include "csiloc/core/text.hpp"
#include "csiloc/data/dataset.hpp"
#include "csiloc/data/normalize.hpp"
#include "csiloc/eval/metrics.hpp"
#include "csiloc/nn/network.hpp"

namespace csiloc::eval {

struct EvalRecord {
    Point truth{};
    Point estimate{};
    double distance_error = 0;
    double norm_truth = 0;
};

struct Aggregates {
    double mde = 0;
    double rmse = 0;
    double rmse_per_coord = 0;  ///< sqrt(mean ||d||^2 / 3)
    double nmde = 0;
    double nmde_percent = 0;
};

struct EvalMetadata {
    std::string model = "unspecified";
    std::string split = "unspecified";
    std::string dataset = "unspecified";
    std::size_t weights = 0;
};

struct EvalReport {
    std::vector<EvalRecord> records;
    Aggregates aggregates;
    EvalMetadata meta;
};

inline constexpr std::size_t kHistogramBins = 50;

/// Aggregates recomputed from per-sample records.
inline Aggregates aggregate(const std::vector<EvalRecord>& records) {
    std::vector<double> errs;
    std::vector<std::pair<Point, Point>> pairs;
    errs.reserve(records.size());
    for (const auto& r : records) {
        errs.push_back(r.distance_error);
        pairs.emplace_back(r.truth, r.estimate);
    }
    Aggregates a;
    a.mde = mde(errs);
    a.rmse = rmse(errs);
    a.rmse_per_coord = a.rmse / std::sqrt(3.0);
    a.nmde = nmde(pairs);
    a.nmde_percent = 100.0 * a.nmde;
    return a;
}

inline EvalRecord make_record(const Point& truth, const Point& estimate) {
    return {truth, estimate, distance(truth, estimate), norm(truth)};
}

/// Evaluates any sample -> position predictor over a dataset.
/// The predictor receives the normalized CSI tensor of each sample.
inline EvalReport evaluate_with(const std::function<Point(const Tensor&)>& predict,
                                const data::Dataset& eval_set, const data::NormStats& norm,
                                EvalMetadata meta = {}) {
    if (eval_set.empty()) throw NumericError("evaluation set is empty");
    if (!(norm.scale > 0)) throw NumericError("normalizer scale must be positive");
    EvalReport rep;
    rep.meta = std::move(meta);
    rep.records.resize(eval_set.size());
    parallel_for(eval_set.size(), [&](std::size_t i) {
        const auto& s = eval_set.samples[i];
        Tensor x = s.csi;
        for (double& v : x.values()) v /= norm.scale;
        rep.records[i] = make_record(s.position, predict(x));
    });
    rep.aggregates = aggregate(rep.records);
    return rep;
}

template <typename T>
EvalReport evaluate(const nn::Network<T>& model, const data::Dataset& eval_set,
                    const data::NormStats& norm, EvalMetadata meta = {}) {
    const Shape expect = model.input_shape();
    const Shape got{2, eval_set.frame.antennas, eval_set.frame.subcarriers};
    if (!(expect == got))
        throw ShapeError("model expects input " + expect.str() + ", evaluation data is " + got.str());
    meta.weights = model.param_count();
    return evaluate_with(
        [&](const Tensor& x) {
            const auto y = model.forward(x.template cast<T>());
            return Point{static_cast<double>(y[0]), static_cast<double>(y[1]),
                         static_cast<double>(y[2])};
        },
        eval_set, norm, std::move(meta));
}

// ---------------------------------------------------------------- report files

inline std::string cdf_csv(const EvalReport& rep) {
    std::vector<double> errs;
    for (const auto& r : rep.records) errs.push_back(r.distance_error);
    std::sort(errs.begin(), errs.end());
    std::string out = "distance_error_m,probability\n";
    const double n = static_cast<double>(errs.size());
    for (std::size_t i = 0; i < errs.size(); ++i)
        out += format_double(errs[i]) + "," + format_double(static_cast<double>(i + 1) / n) + "\n";
    return out;
}

struct HistogramBin {
    double low = 0, high = 0;
    std::size_t count = 0;
};

/// Equal-width bins over the observed range; a zero range widens to +-0.5 m.
inline std::vector<HistogramBin> histogram(const std::vector<double>& values,
                                           std::size_t bins = kHistogramBins) {
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<HistogramBin> h(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        h[b].low = lo + width * static_cast<double>(b);
        h[b].high = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (double v : values) {
        auto b = static_cast<std::size_t>(std::floor((v - lo) / width));
        h[std::min(b, bins - 1)].count++;
    }
    return h;
}

inline std::string err_hist_csv(const EvalReport& rep) {
    std::string out = "axis,bin_low_m,bin_high_m,count\n";
    for (std::size_t axis = 0; axis < 2; ++axis) {
        std::vector<double> v;
        for (const auto& r : rep.records) v.push_back(r.estimate[axis] - r.truth[axis]);
        for (const auto& b : histogram(v))
            out += std::string(axis == 0 ? "x" : "y") + "," + format_double(b.low) + "," +
                   format_double(b.high) + "," + std::to_string(b.count) + "\n";
    }
    return out;
}

inline std::string quiver_csv(const EvalReport& rep) {
    std::string out = "truth_x,truth_y,dx,dy\n";
    for (const auto& r : rep.records)
        out += format_double(r.truth[0]) + "," + format_double(r.truth[1]) + "," +
               format_double(r.estimate[0] - r.truth[0]) + "," +
               format_double(r.estimate[1] - r.truth[1]) + "\n";
    return out;
}

inline nlohmann::ordered_json summary_json(const EvalReport& rep) {
    const auto& a = rep.aggregates;
    nlohmann::ordered_json j;
    j["mde_m"] = a.mde;
    j["rmse_m"] = a.rmse;
    j["rmse_per_coord_m"] = a.rmse_per_coord;
    j["nmde"] = a.nmde;
    j["nmde_percent"] = a.nmde_percent;
    j["n_samples"] = rep.records.size();
    j["weights"] = rep.meta.weights;
    j["split"] = rep.meta.split;
    j["model"] = rep.meta.model;
    j["dataset"] = rep.meta.dataset;
    j["rmse_definition"] =
        "rmse_m = sqrt(mean(||p - p_hat||^2)), which is always >= mde_m; published tables that "
        "list RMSE below MDE follow a different convention. rmse_per_coord_m = rmse_m / sqrt(3) "
        "is the per-coordinate root mean square error.";
    return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + p.string());
    f << s;
    if (!f) throw Error("failed writing " + p.string());
}

/// Writes cdf.csv, err_hist.csv, quiver.csv and summary.json into out_dir.
inline void emit_reports(const EvalReport& rep, const std::filesystem::path& out_dir) {
    if (rep.records.empty()) throw NumericError("cannot emit an empty report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw Error("cannot create output directory " + out_dir.string());
    write_text(out_dir / "cdf.csv", cdf_csv(rep));
    write_text(out_dir / "err_hist.csv", err_hist_csv(rep));
    write_text(out_dir / "quiver.csv", quiver_csv(rep));
    write_text(out_dir / "summary.json", summary_json(rep).dump(2) + "\n");
}

} // namespace csiloc::eval

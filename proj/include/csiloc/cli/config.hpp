#pragma once

// Flat JSON run configuration. Keys mirror ArchConfig / TrainConfig field
// names; "seed" seeds both initialization and training.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiloc/core/error.hpp"
#include "csiloc/models/arch.hpp"
#include "csiloc/train/trainer.hpp"

namespace csiloc::cli {

struct RunConfig {
    models::ArchConfig arch;
    std::vector<std::size_t> hidden;
    train::TrainConfig train;
    std::string precision = "double";
};

inline void apply_config_json(const nlohmann::json& j, RunConfig& rc) {
    if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
    static const std::set<std::string> known = {
        "model", "base_filters", "growth", "kernel", "stride", "residual_units_per_block",
        "head_units", "stem_stride", "pool_size", "pool_stride", "seed", "hidden",
        "max_epochs", "batch_size", "lr0", "momentum", "lr_patience", "lr_factor",
        "stop_patience", "monitor_fraction", "min_improvement", "precision"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        auto& a = rc.arch;
        get("base_filters", a.base_filters);
        get("growth", a.growth);
        get("kernel", a.kernel);
        get("stride", a.stride);
        get("residual_units_per_block", a.residual_units_per_block);
        get("head_units", a.head_units);
        get("stem_stride", a.stem_stride);
        get("pool_size", a.pool_size);
        get("pool_stride", a.pool_stride);
        get("hidden", rc.hidden);
        auto& t = rc.train;
        get("max_epochs", t.max_epochs);
        get("batch_size", t.batch_size);
        get("lr0", t.lr0);
        get("momentum", t.momentum);
        get("lr_patience", t.lr_patience);
        get("lr_factor", t.lr_factor);
        get("stop_patience", t.stop_patience);
        get("monitor_fraction", t.monitor_fraction);
        get("min_improvement", t.min_improvement);
        get("precision", rc.precision);
        if (j.contains("seed")) {
            a.seed = j.at("seed").get<std::uint64_t>();
            t.seed = a.seed;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    if (rc.precision != "double" && rc.precision != "float")
        throw ConfigError("precision must be 'double' or 'float'");
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw ConfigError("cannot open config " + p.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed JSON in " + p.string() + ": " + e.what());
    }
}

inline nlohmann::ordered_json to_json(const RunConfig& rc) {
    nlohmann::ordered_json j;
    const auto& a = rc.arch;
    j["base_filters"] = a.base_filters;
    j["growth"] = a.growth;
    j["kernel"] = a.kernel;
    j["stride"] = a.stride;
    j["residual_units_per_block"] = a.residual_units_per_block;
    j["head_units"] = a.head_units;
    j["stem_stride"] = a.stem_stride;
    j["pool_size"] = a.pool_size;
    j["pool_stride"] = a.pool_stride;
    j["hidden"] = rc.hidden;
    const auto& t = rc.train;
    j["max_epochs"] = t.max_epochs;
    j["batch_size"] = t.batch_size;
    j["lr0"] = t.lr0;
    j["momentum"] = t.momentum;
    j["lr_patience"] = t.lr_patience;
    j["lr_factor"] = t.lr_factor;
    j["stop_patience"] = t.stop_patience;
    j["monitor_fraction"] = t.monitor_fraction;
    j["min_improvement"] = t.min_improvement;
    j["seed"] = a.seed;
    j["precision"] = rc.precision;
    return j;
}

} // namespace csiloc::cli

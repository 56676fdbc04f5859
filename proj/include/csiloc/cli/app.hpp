#pragma once

// Command-line front end: gen, import, split, train, eval, gradcheck,
// count-weights and replay. Exit codes: 0 success, 1 numeric or validation
// failure, 2 usage error.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csiloc/cli/config.hpp"
#include "csiloc/data/dataset.hpp"
#include "csiloc/data/normalize.hpp"
#include "csiloc/data/npy.hpp"
#include "csiloc/data/split.hpp"
#include "csiloc/data/synthetic.hpp"
#include "csiloc/eval/report.hpp"
#include "csiloc/models/arch.hpp"
#include "csiloc/models/checkpoint.hpp"
#include "csiloc/nn/gradient_check.hpp"
#include "csiloc/train/trainer.hpp"

namespace csiloc::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr double kGradCheckTolerance = 1e-4;

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Run record written next to every command's outputs.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    ojson parameters = ojson::object();
    ojson inputs = ojson::object();
    ojson outputs = ojson::object();
    std::string started_at = utc_timestamp();

    void write(const fs::path& dir) const {
        ojson j;
        j["command"] = command;
        j["argv"] = argv;
        j["parameters"] = parameters;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["tool_version"] = kToolVersion;
        j["started_at"] = started_at;
        j["finished_at"] = utc_timestamp();
        fs::create_directories(dir);
        eval::write_text(dir / "manifest.json", j.dump(2) + "\n");
    }
};

namespace detail {

inline models::ModelSpec resolve_spec(const std::string& model, const RunConfig& rc,
                                      models::InputGeometry input) {
    models::ModelSpec spec;
    spec.kind = models::parse_model_kind(model);
    spec.arch = rc.arch;
    spec.hidden = spec.kind == models::ModelKind::fcnn ? rc.hidden : std::vector<std::size_t>{};
    spec.input = input;
    return spec;
}

inline RunConfig base_config(const std::string& model) {
    RunConfig rc;
    rc.arch = models::default_arch(models::parse_model_kind(model));
    return rc;
}

template <typename T>
int run_training(const models::ModelSpec& spec, const RunConfig& rc, const data::Dataset& train_set,
                 const data::NormStats& norm, const fs::path& out, RunManifest& manifest,
                 std::ostream& log, std::ostream& err) {
    auto net = models::build<T>(spec);
    const auto ckpt = out / "checkpoint.bin";
    train::TrainHooks<T> hooks;
    hooks.on_best = [&](const nn::Network<T>& best, const train::EpochRecord&) {
        models::save_checkpoint(ckpt, spec, best, norm.scale);
    };
    hooks.on_epoch = [&log](const train::EpochRecord& e) {
        log << "epoch " << e.epoch << " train_mde " << e.train_mde << " monitor_mde "
                  << e.monitor_mde << " lr " << e.lr << "\n";
    };
    auto result = train::train(std::move(net), train_set, rc.train, hooks);
    models::save_checkpoint(ckpt, spec, result.network, norm.scale);
    eval::write_text(out / "history.csv", train::history_csv(result.history));
    const auto& h = result.history;
    manifest.outputs["checkpoint"] = ckpt.string();
    manifest.outputs["history"] = (out / "history.csv").string();
    manifest.outputs["epochs"] = h.epochs.size();
    manifest.outputs["stop_reason"] = train::to_string(h.stop_reason);
    manifest.outputs["best_epoch"] = h.best_epoch;
    manifest.outputs["weights"] = result.network.param_count();
    if (h.best_epoch > 0) manifest.outputs["best_monitor_mde"] = h.best_monitor_mde;
    manifest.write(out);
    log << "epochs " << h.epochs.size() << ", stop " << train::to_string(h.stop_reason);
    if (h.best_epoch > 0) log << ", best monitor MDE " << h.best_monitor_mde << " m at epoch " << h.best_epoch;
    log << "\n";
    if (h.stop_reason == train::StopReason::non_finite) {
        err << "error: " << h.diagnostic << "\n";
        return kFailure;
    }
    return kOk;
}

/// Applies a config file; a "model" entry, when present, must name the requested model.
inline void apply_config_file(const std::string& path, const std::string& model, RunConfig& rc) {
    const auto j = read_json_file(path);
    if (j.is_object() && j.contains("model") &&
        (!j.at("model").is_string() || j.at("model").get<std::string>() != model))
        throw ConfigError("config " + path + " is for model " + j.at("model").dump() +
                          ", not '" + model + "'");
    apply_config_json(j, rc);
}

inline std::string split_label_for(const fs::path& eval_dir) {
    const auto m = eval_dir.parent_path() / "manifest.json";
    if (!fs::exists(m)) return "unspecified";
    try {
        const auto j = read_json_file(m);
        if (j.value("command", "") == "split") return j.at("parameters").value("kind", "unspecified");
    } catch (...) {
    }
    return "unspecified";
}

} // namespace detail

/// Parses and executes one command line (args excludes the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"CSI fingerprint indoor positioning toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    const std::vector<std::string> model_names{"cnn4", "cnn4r", "cnn4s", "fcnn", "linear"};
    std::function<int()> action;
    RunManifest manifest;
    manifest.argv = args;

    // ---- gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic CSI dataset");
    data::SynthConfig synth;
    std::string gen_out;
    bool no_noise = false;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--samples", synth.num_samples, "number of samples")->check(CLI::PositiveNumber);
    gen->add_option("--subcarriers", synth.subcarriers, "subcarriers per antenna")->check(CLI::Range(8, 1 << 20));
    gen->add_option("--reflectors", synth.num_reflectors, "image-source reflectors");
    gen->add_option("--seed", synth.seed, "random seed");
    gen->add_option("--snr-min", synth.snr_min_db, "minimum SNR (dB)");
    gen->add_option("--snr-max", synth.snr_max_db, "maximum SNR (dB)");
    gen->add_option("--fc", synth.fc_hz, "carrier frequency (Hz)");
    gen->add_option("--bandwidth", synth.bandwidth_hz, "bandwidth (Hz)");
    gen->add_flag("--no-noise", no_noise, "disable additive noise");
    gen->callback([&] {
        action = [&] {
            synth.noise = !no_noise;
            manifest.command = "gen";
            manifest.parameters = {{"samples", synth.num_samples}, {"subcarriers", synth.subcarriers},
                                   {"reflectors", synth.num_reflectors}, {"seed", synth.seed},
                                   {"snr_min_db", synth.snr_min_db}, {"snr_max_db", synth.snr_max_db},
                                   {"fc_hz", synth.fc_hz}, {"bandwidth_hz", synth.bandwidth_hz},
                                   {"noise", synth.noise}};
            const auto ds = data::generate_synthetic(synth);
            data::save_canonical(ds, gen_out);
            manifest.outputs["dataset"] = gen_out;
            manifest.write(gen_out);
            out << "wrote " << ds.size() << " samples to " << gen_out << "\n";
            return int(kOk);
        };
    });

    // ---- import
    auto* imp = app.add_subcommand("import", "convert NPY array dumps into a canonical dataset");
    std::string imp_csi, imp_snr, imp_pos, imp_out;
    data::FrameInfo imp_frame;
    imp->add_option("--csi", imp_csi, "CSI array (complex64 (N,A,W) or real (N,A,W,2))")->required();
    imp->add_option("--snr", imp_snr, "SNR array (N,A)")->required();
    imp->add_option("--pos", imp_pos, "position array (N,3)")->required();
    imp->add_option("--out", imp_out, "output directory")->required();
    imp->add_option("--fc", imp_frame.fc_hz, "carrier frequency (Hz)");
    imp->add_option("--bandwidth", imp_frame.bandwidth_hz, "bandwidth (Hz)");
    imp->callback([&] {
        action = [&] {
            manifest.command = "import";
            manifest.inputs = {{"csi", imp_csi}, {"snr", imp_snr}, {"pos", imp_pos}};
            const auto ds = data::import_npy(imp_csi, imp_snr, imp_pos, imp_frame);
            data::save_canonical(ds, imp_out);
            manifest.outputs["dataset"] = imp_out;
            manifest.write(imp_out);
            out << "imported " << ds.size() << " samples (" << ds.frame.antennas << " antennas, "
                << ds.frame.subcarriers << " subcarriers)\n";
            return int(kOk);
        };
    });

    // ---- split
    auto* sp = app.add_subcommand("split", "partition a dataset into train/ and eval/");
    std::string sp_data, sp_kind = "random", sp_out;
    data::SplitStrategy strat;
    sp->add_option("--data", sp_data, "dataset directory")->required();
    sp->add_option("--kind", sp_kind, "split strategy")
        ->check(CLI::IsMember({"random", "narrow", "wide", "within"}));
    sp->add_option("--fraction", strat.eval_fraction, "evaluation fraction")->check(CLI::Range(0.0, 1.0));
    sp->add_option("--seed", strat.seed, "shuffle seed (random kind)");
    sp->add_option("--out", sp_out, "output directory")->required();
    sp->callback([&] {
        action = [&] {
            strat.kind = data::parse_split_kind(sp_kind);
            manifest.command = "split";
            manifest.parameters = {{"kind", sp_kind}, {"fraction", strat.eval_fraction}, {"seed", strat.seed}};
            manifest.inputs["data"] = sp_data;
            const auto ds = data::load_canonical(sp_data);
            const auto idx = data::split_indices(ds, strat);
            data::save_canonical(ds.subset(idx.train), fs::path(sp_out) / "train");
            data::save_canonical(ds.subset(idx.eval), fs::path(sp_out) / "eval");
            manifest.outputs = {{"train", (fs::path(sp_out) / "train").string()},
                                {"eval", (fs::path(sp_out) / "eval").string()},
                                {"n_train", idx.train.size()}, {"n_eval", idx.eval.size()}};
            manifest.write(sp_out);
            out << sp_kind << " split: " << idx.train.size() << " train, " << idx.eval.size() << " eval\n";
            return int(kOk);
        };
    });

    // ---- train
    auto* tr = app.add_subcommand("train", "train a model on a canonical dataset");
    std::string tr_data, tr_model, tr_config, tr_out, tr_precision;
    std::optional<std::size_t> tr_epochs, tr_batch;
    std::optional<double> tr_lr;
    std::optional<std::uint64_t> tr_seed;
    std::vector<std::size_t> tr_hidden;
    tr->add_option("--train", tr_data, "training dataset directory")->required();
    tr->add_option("--model", tr_model, "architecture")->required()->check(CLI::IsMember(model_names));
    tr->add_option("--config", tr_config, "flat JSON config file");
    tr->add_option("--out", tr_out, "output directory")->required();
    tr->add_option("--epochs", tr_epochs, "override max_epochs");
    tr->add_option("--batch-size", tr_batch, "override batch_size")->check(CLI::PositiveNumber);
    tr->add_option("--lr", tr_lr, "override lr0");
    tr->add_option("--seed", tr_seed, "override seed");
    tr->add_option("--hidden", tr_hidden, "fcnn hidden layer sizes");
    tr->add_option("--precision", tr_precision, "double or float")->check(CLI::IsMember({"double", "float"}));
    tr->callback([&] {
        action = [&] {
            RunConfig rc = detail::base_config(tr_model);
            if (!tr_config.empty()) detail::apply_config_file(tr_config, tr_model, rc);
            if (tr_epochs) rc.train.max_epochs = *tr_epochs;
            if (tr_batch) rc.train.batch_size = *tr_batch;
            if (tr_lr) rc.train.lr0 = *tr_lr;
            if (tr_seed) rc.arch.seed = rc.train.seed = *tr_seed;
            if (!tr_hidden.empty()) rc.hidden = tr_hidden;
            if (!tr_precision.empty()) rc.precision = tr_precision;
            auto ds = data::load_canonical(tr_data);
            const auto norm = data::fit_normalizer(ds);
            ds = data::apply_normalizer(std::move(ds), norm);
            const auto spec = detail::resolve_spec(tr_model, rc, {ds.frame.antennas, ds.frame.subcarriers});
            manifest.command = "train";
            manifest.parameters = to_json(rc);
            manifest.parameters["model"] = tr_model;
            manifest.parameters["norm_scale"] = norm.scale;
            manifest.inputs["train"] = tr_data;
            if (!tr_config.empty()) manifest.inputs["config"] = tr_config;
            fs::create_directories(tr_out);
            return rc.precision == "float"
                       ? detail::run_training<float>(spec, rc, ds, norm, tr_out, manifest, out, err)
                       : detail::run_training<double>(spec, rc, ds, norm, tr_out, manifest, out, err);
        };
    });

    // ---- eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint and write report data");
    std::string ev_ckpt, ev_data, ev_out, ev_split, ev_dataset;
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--eval", ev_data, "evaluation dataset directory")->required();
    ev->add_option("--out", ev_out, "output directory")->required();
    ev->add_option("--split", ev_split, "split label recorded in summary.json");
    ev->add_option("--dataset", ev_dataset, "dataset label recorded in summary.json");
    ev->callback([&] {
        action = [&] {
            manifest.command = "eval";
            manifest.inputs = {{"checkpoint", ev_ckpt}, {"eval", ev_data}};
            const auto ck = models::load_checkpoint<double>(ev_ckpt);
            const auto ds = data::load_canonical(ev_data);
            eval::EvalMetadata meta;
            meta.model = models::to_string(ck.spec.kind);
            meta.split = ev_split.empty() ? detail::split_label_for(ev_data) : ev_split;
            meta.dataset = ev_dataset.empty() ? ev_data : ev_dataset;
            const auto rep = eval::evaluate(ck.network, ds, data::NormStats{ck.norm_scale}, meta);
            eval::emit_reports(rep, ev_out);
            manifest.parameters = {{"split", meta.split}, {"dataset", meta.dataset}};
            manifest.outputs = {{"summary", (fs::path(ev_out) / "summary.json").string()},
                                {"mde_m", rep.aggregates.mde}};
            manifest.write(ev_out);
            out << "mde " << rep.aggregates.mde << " m, rmse " << rep.aggregates.rmse << " m, nmde "
                << rep.aggregates.nmde_percent << " % over " << rep.records.size() << " samples\n";
            return int(kOk);
        };
    });

    // ---- gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of a shrunken model");
    std::string gc_model, gc_scale = "tiny";
    std::uint64_t gc_seed = 7;
    std::optional<std::size_t> gc_fault;
    gc->add_option("--model", gc_model, "architecture")->required()->check(CLI::IsMember(model_names));
    gc->add_option("--scale", gc_scale, "model scale")->check(CLI::IsMember({"tiny"}));
    gc->add_option("--seed", gc_seed, "weight/input seed");
    gc->add_option("--inject-fault", gc_fault, "perturb the analytic gradient of a layer")
        ->group("");
    gc->callback([&] {
        action = [&] {
            const auto prob = models::gradcheck_problem(models::parse_model_kind(gc_model), gc_seed);
            const auto& net = prob.network;
            nn::GradCheckOptions opt;
            opt.corrupt_layer = gc_fault;
            const auto r = nn::gradient_check(net, prob.input, prob.target, opt);
            out << gc_model << " (" << net.param_count() << " parameters): max relative error "
                << r.max_rel_error << "\n";
            if (r.max_rel_error < kGradCheckTolerance) return int(kOk);
            out << "FAILED at layer " << r.worst_layer << " [" << r.worst_layer_desc
                << "]: analytic " << r.worst_analytic << ", numeric " << r.worst_numeric << "\n";
            return int(kFailure);
        };
    });

    // ---- count-weights
    auto* cw = app.add_subcommand("count-weights", "print a model's trainable parameter count");
    std::string cw_model, cw_config;
    std::size_t cw_antennas = 16, cw_subcarriers = 924;
    cw->add_option("--model", cw_model, "architecture")->required()->check(CLI::IsMember(model_names));
    cw->add_option("--config", cw_config, "flat JSON config file");
    cw->add_option("--antennas", cw_antennas, "input antennas")->check(CLI::PositiveNumber);
    cw->add_option("--subcarriers", cw_subcarriers, "input subcarriers")->check(CLI::PositiveNumber);
    cw->callback([&] {
        action = [&] {
            RunConfig rc = detail::base_config(cw_model);
            if (!cw_config.empty()) detail::apply_config_file(cw_config, cw_model, rc);
            const auto spec = detail::resolve_spec(cw_model, rc, {cw_antennas, cw_subcarriers});
            const auto net = models::build<double>(spec);
            const auto n = models::count_weights(net);
            char millions[32];
            std::snprintf(millions, sizeof millions, "%.1f", models::weights_in_millions(n));
            out << n << " " << millions << "\n";
            return int(kOk);
        };
    });

    // ---- replay
    auto* rp = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    std::string rp_manifest, rp_out;
    rp->add_option("--manifest", rp_manifest, "manifest.json")->required();
    rp->add_option("--out", rp_out, "replace the recorded output directory");
    rp->callback([&] {
        action = [&] {
            const auto j = read_json_file(rp_manifest);
            auto argv = j.at("argv").get<std::vector<std::string>>();
            if (!argv.empty() && argv[0] == "replay") throw ConfigError("cannot replay a replay manifest");
            if (!rp_out.empty())
                for (std::size_t i = 0; i + 1 < argv.size(); ++i)
                    if (argv[i] == "--out") argv[i + 1] = rp_out;
            return run(argv, out, err);
        };
    });

    std::vector<const char*> argv{"csiloc"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        for (auto* sub : app.get_subcommands()) {
            err << sub->help();
            return kUsage;
        }
        err << app.help();
        return kUsage;
    }
    try {
        return action ? action() : int(kUsage);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

} // namespace csiloc::cli

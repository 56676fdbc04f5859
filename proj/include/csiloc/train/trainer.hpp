#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "csiloc/core/parallel.hpp"
#include "csiloc/core/rng.hpp"
#include "csiloc/core/text.hpp"
#include "csiloc/data/dataset.hpp"
#include "csiloc/data/split.hpp"
#include "csiloc/nn/network.hpp"
#include "csiloc/train/loss.hpp"
#include "csiloc/train/optimizer.hpp"

namespace csiloc::train {

struct TrainConfig {
    std::size_t max_epochs = 250;
    std::size_t batch_size = 32;
    double lr0 = 1e-3;
    double momentum = 0.9;
    std::size_t lr_patience = 10;
    double lr_factor = 0.1;
    std::size_t stop_patience = 21;
    double monitor_fraction = 0.1;
    /// Monitor MDE must drop by more than this (meters) to count as improvement.
    double min_improvement = 1e-6;
    std::uint64_t seed = 1;

    void validate() const {
        if (batch_size == 0) throw ConfigError("batch_size must be positive");
        if (!(lr0 > 0)) throw ConfigError("lr0 must be positive");
        if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must lie in [0, 1)");
        if (!(lr_factor > 0 && lr_factor < 1)) throw ConfigError("lr_factor must lie in (0, 1)");
        if (lr_patience == 0 || stop_patience == 0) throw ConfigError("patience values must be positive");
        if (stop_patience <= lr_patience) throw ConfigError("stop_patience must exceed lr_patience");
        if (!(monitor_fraction > 0 && monitor_fraction < 1))
            throw ConfigError("monitor_fraction must lie in (0, 1)");
    }
};

enum class StopReason { max_epochs, early_stop, non_finite };

inline std::string to_string(StopReason r) {
    switch (r) {
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::early_stop: return "early_stop";
    case StopReason::non_finite: return "non_finite";
    }
    return "?";
}

struct EpochRecord {
    std::size_t epoch = 0;  ///< 1-based
    double train_mde = 0;
    double monitor_mde = 0;
    double lr = 0;  ///< rate used during this epoch
    double seconds = 0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    StopReason stop_reason = StopReason::max_epochs;
    std::size_t best_epoch = 0;
    double best_monitor_mde = std::numeric_limits<double>::infinity();
    std::string diagnostic;  ///< set when training aborted
};

/// CSV with header epoch,train_mde,monitor_mde,lr,seconds.
inline std::string history_csv(const TrainHistory& h) {
    std::string out = "epoch,train_mde,monitor_mde,lr,seconds\n";
    for (const auto& e : h.epochs)
        out += std::to_string(e.epoch) + "," + format_double(e.train_mde) + "," +
               format_double(e.monitor_mde) + "," + format_double(e.lr) + "," +
               format_double(e.seconds) + "\n";
    return out;
}

template <typename T>
struct TrainHooks {
    /// Replaces the holdout MDE (used to exercise the schedule in isolation).
    std::function<double(const nn::Network<T>&, std::size_t epoch)> monitor;
    /// Called whenever a new best monitor value is reached.
    std::function<void(const nn::Network<T>&, const EpochRecord&)> on_best;
    std::function<void(const EpochRecord&)> on_epoch;
};

template <typename T>
struct TrainResult {
    nn::Network<T> network;
    TrainHistory history;
};

/// Plateau learning-rate decay and early stopping over a monitored loss.
class PlateauSchedule {
public:
    PlateauSchedule(const TrainConfig& cfg) : cfg_(cfg), lr_(cfg.lr0) {}

    enum class Action { improved, none, stop };

    /// Feeds one epoch's monitor value; may lower lr for subsequent epochs.
    Action observe(double monitor) {
        if (monitor < best_ - cfg_.min_improvement) {
            best_ = monitor;
            since_best_ = 0;
            since_decay_ = 0;
            return Action::improved;
        }
        ++since_best_;
        ++since_decay_;
        if (since_best_ >= cfg_.stop_patience) return Action::stop;
        if (since_decay_ >= cfg_.lr_patience) {
            lr_ *= cfg_.lr_factor;
            since_decay_ = 0;
        }
        return Action::none;
    }

    [[nodiscard]] double lr() const { return lr_; }
    [[nodiscard]] double best() const { return best_; }

private:
    TrainConfig cfg_;
    double lr_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t since_best_ = 0;
    std::size_t since_decay_ = 0;
};

namespace detail {

// Gradients are accumulated in this many fixed sample groups per batch and
// reduced pairwise, so results do not depend on the worker count.
inline constexpr std::size_t kGradGroups = 4;

template <typename T>
struct Prepared {
    std::vector<BasicTensor<T>> inputs;
    std::vector<data::Position> targets;
};

template <typename T>
Prepared<T> prepare(const data::Dataset& ds, const std::vector<std::size_t>& idx) {
    Prepared<T> p;
    p.inputs.reserve(idx.size());
    for (auto i : idx) {
        p.inputs.push_back(ds.samples[i].csi.template cast<T>());
        p.targets.push_back(ds.samples[i].position);
    }
    return p;
}

template <typename T>
double mean_distance(const nn::Network<T>& net, const Prepared<T>& set) {
    std::vector<double> dist(set.inputs.size());
    parallel_for(set.inputs.size(), [&](std::size_t i) {
        const auto y = net.forward(set.inputs[i]);
        double sq = 0;
        for (std::size_t d = 0; d < 3; ++d) {
            const double e = static_cast<double>(y[d]) - set.targets[i][d];
            sq += e * e;
        }
        dist[i] = std::sqrt(sq);
    });
    double s = 0;
    for (double d : dist) s += d;
    return s / static_cast<double>(dist.size());
}

template <typename T>
void zero(nn::GradientSet<T>& g) {
    for (auto& layer : g)
        for (auto& p : layer) {
            p.weights.fill(T{0});
            p.bias.fill(T{0});
        }
}

} // namespace detail

/// Mini-batch SGD with momentum on the MDE loss.
///
/// A seeded monitor_fraction of the training data is held out; after each epoch
/// its MDE drives the plateau schedule. The returned network carries the weights
/// of the best monitor epoch.
template <typename T>
TrainResult<T> train(nn::Network<T> net, const data::Dataset& ds, const TrainConfig& cfg,
                     const TrainHooks<T>& hooks = {}) {
    cfg.validate();
    TrainResult<T> result{net, {}};
    if (cfg.max_epochs == 0) return result;
    const double min_size =
        static_cast<double>(cfg.batch_size) / (1.0 - cfg.monitor_fraction);
    if (!(static_cast<double>(ds.size()) > min_size))
        throw ConfigError("training set of " + std::to_string(ds.size()) +
                          " samples is too small for batch_size " + std::to_string(cfg.batch_size));

    const auto holdout = data::split_indices(
        ds, data::SplitStrategy{data::SplitKind::random, cfg.monitor_fraction, derive_seed(cfg.seed, 0)});
    const auto fit = detail::prepare<T>(ds, holdout.train);
    const auto monitor = detail::prepare<T>(ds, holdout.eval);

    PlateauSchedule schedule(cfg);
    nn::Network<T> best = net;
    std::vector<nn::GradientSet<T>> groups(detail::kGradGroups, net.zero_gradients());
    std::vector<double> group_loss(detail::kGradGroups);
    std::vector<std::size_t> order(fit.inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    auto& hist = result.history;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = schedule.lr();
        Rng rng(derive_seed(cfg.seed, epoch));
        rng.shuffle(order);

        double loss_sum = 0;
        bool finite = true;
        for (std::size_t start = 0; start < order.size() && finite; start += cfg.batch_size) {
            const std::size_t B = std::min(cfg.batch_size, order.size() - start);
            const std::size_t per_group = (B + detail::kGradGroups - 1) / detail::kGradGroups;
            parallel_for(detail::kGradGroups, [&](std::size_t g) {
                detail::zero(groups[g]);
                group_loss[g] = 0;
                std::vector<nn::LayerCache<T>> caches;
                const std::size_t lo = std::min(B, g * per_group), hi = std::min(B, lo + per_group);
                for (std::size_t b = lo; b < hi; ++b) {
                    const std::size_t i = order[start + b];
                    const auto y = net.forward_train(fit.inputs[i], caches);
                    BasicTensor<T> grad(Shape{3});
                    double sq = 0;
                    for (std::size_t d = 0; d < 3; ++d) {
                        const double e = static_cast<double>(y[d]) - fit.targets[i][d];
                        sq += e * e;
                    }
                    const double dist = std::sqrt(sq + kMdeEpsilon);
                    group_loss[g] += dist;
                    for (std::size_t d = 0; d < 3; ++d)
                        grad[d] = static_cast<T>((static_cast<double>(y[d]) - fit.targets[i][d]) /
                                                 (static_cast<double>(B) * dist));
                    net.backward(caches, grad, groups[g]);
                }
            });
            nn::add_into(groups[0], groups[1]);
            nn::add_into(groups[2], groups[3]);
            nn::add_into(groups[0], groups[2]);
            const double batch_loss = (group_loss[0] + group_loss[1]) + (group_loss[2] + group_loss[3]);
            if (!std::isfinite(batch_loss)) {
                finite = false;
                break;
            }
            loss_sum += batch_loss;
            try {
                for (std::size_t l = 0; l < net.size(); ++l) {
                    auto& params = net.layer(l).params();
                    for (std::size_t j = 0; j < params.size(); ++j) {
                        params[j].grad_weights = groups[0][l][j].weights;
                        params[j].grad_bias = groups[0][l][j].bias;
                        sgd_momentum_step(params[j], schedule.lr(), cfg.momentum);
                    }
                }
            } catch (const NumericError&) {
                finite = false;
            }
        }
        if (!finite) {
            hist.stop_reason = StopReason::non_finite;
            hist.diagnostic = "non-finite loss or gradient in epoch " + std::to_string(epoch);
            break;
        }
        rec.train_mde = loss_sum / static_cast<double>(order.size());
        rec.monitor_mde = hooks.monitor ? hooks.monitor(net, epoch) : detail::mean_distance(net, monitor);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!std::isfinite(rec.monitor_mde)) {
            hist.epochs.push_back(rec);
            hist.stop_reason = StopReason::non_finite;
            hist.diagnostic = "non-finite monitor loss in epoch " + std::to_string(epoch);
            break;
        }
        hist.epochs.push_back(rec);
        if (hooks.on_epoch) hooks.on_epoch(rec);

        const auto action = schedule.observe(rec.monitor_mde);
        if (action == PlateauSchedule::Action::improved) {
            best.copy_weights_from(net);
            hist.best_epoch = epoch;
            hist.best_monitor_mde = rec.monitor_mde;
            if (hooks.on_best) hooks.on_best(best, rec);
        } else if (action == PlateauSchedule::Action::stop) {
            hist.stop_reason = StopReason::early_stop;
            break;
        }
    }
    if (hist.best_epoch > 0) net.copy_weights_from(best);
    result.network = std::move(net);
    return result;
}

} // namespace csiloc::train

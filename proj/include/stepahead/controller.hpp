// Training loops: the predict -> forward/backward -> restore -> update scheme,
// the conventional baseline loop, and step-decay learning-rate scheduling.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stepahead/data.hpp"
#include "stepahead/errors.hpp"
#include "stepahead/models.hpp"
#include "stepahead/numerics.hpp"
#include "stepahead/optim.hpp"
#include "stepahead/rng.hpp"

namespace stepahead::controller {

enum class Mode { Baseline, Predictive, PlainAdam };

// A training mode token: "baseline", "plain_adam", or "s<N>" (prediction with
// N steps; s0 collapses to baseline behavior).
struct ModeSpec {
    Mode kind = Mode::Baseline;
    int s = 0;

    std::string token() const {
        switch (kind) {
            case Mode::Baseline: return "baseline";
            case Mode::PlainAdam: return "plain_adam";
            case Mode::Predictive: return "s" + std::to_string(s);
        }
        return "?";
    }

    static ModeSpec parse(const std::string& token, int default_s) {
        if (token == "baseline") return {Mode::Baseline, 0};
        if (token == "plain_adam") return {Mode::PlainAdam, 0};
        if (token == "predictive") return {Mode::Predictive, default_s};
        if (token.size() >= 2 && token[0] == 's') {
            try {
                std::size_t used = 0;
                const int s = std::stoi(token.substr(1), &used);
                if (used == token.size() - 1 && s >= 0) {
                    return {Mode::Predictive, s};
                }
            } catch (const std::exception&) {
            }
        }
        throw ConfigError("unknown mode token '" + token +
                          "' (expected baseline, plain_adam, predictive, or sN)");
    }
};

struct TrainPlan {
    int epochs = 1;
    std::size_t batch_size = 32;
    // (0-based epoch index, multiplier): gamma is multiplied at the start of
    // that epoch, before any of its steps.
    std::vector<std::pair<int, double>> lr_schedule;
    ModeSpec mode;
    std::uint64_t seed = 0;
    bool shuffle = true;
    bool record_steps = false;

    void validate() const {
        if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
        int prev = -1;
        for (const auto& [epoch, mult] : lr_schedule) {
            if (epoch < 0) throw ConfigError("schedule epochs must be >= 0");
            if (epoch <= prev) {
                throw ConfigError("schedule epochs must be strictly increasing");
            }
            if (!(mult > 0.0)) {
                throw ConfigError("schedule multipliers must be > 0");
            }
            prev = epoch;
        }
    }
};

struct StepTrace {
    long long step = 0;        // 1-based update index == state.t after the step
    double loss = 0.0;         // loss at the point the gradient was taken
    double grad_norm = 0.0;    // L2 norm of that gradient
    double gamma = 0.0;        // learning rate in effect
    double pred_distance = 0.0; // max-norm of (predicted - cached); 0 when s=0
};

struct EpochRecord {
    int epoch = 0;          // 1-based
    double train_loss = 0.0; // mean of the minibatch losses observed this epoch
    double val_loss = 0.0;   // validation loss at epoch end
    double val_acc = 0.0;    // validation accuracy at epoch end; NaN if n/a
    double gamma = 0.0;      // learning rate in effect during the epoch
};

struct RunSummary {
    double min_val_loss = std::numeric_limits<double>::quiet_NaN();
    double max_val_acc = std::numeric_limits<double>::quiet_NaN();
    int best_epoch = -1; // epoch (1-based) of the minimum validation loss
    double final_train_loss = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
    std::string mode;
    std::uint64_t seed = 0;
    std::string problem;
    std::vector<EpochRecord> epochs;
    std::vector<StepTrace> steps; // populated when plan.record_steps
    bool diverged = false;
    long long diverged_at_step = -1;
    RunSummary summary;
};

/// One predictive training step:
///   1. cache the current weights,
///   2. move the model to the predicted future weights,
///   3. forward/backward there,
///   4. recover the cached weights,
///   5. apply the AdamW update at the cached weights using the gradient
///      from step 3.
/// Any numerics failure aborts the step with the model restored to the
/// cached weights and the state untouched.
inline StepTrace train_step_predictive(models::Model& model,
                                       const models::Batch& batch,
                                       optim::AdamWState& state,
                                       const optim::AdamWConfig& config) {
    const ParamVector cached = numerics::snapshot(model.params());
    try {
        ParamVector predicted = optim::predict_weights(cached, state, config);
        StepTrace trace;
        trace.pred_distance = numerics::max_abs_diff(predicted, cached);
        model.params() = std::move(predicted);
        const models::ForwardBackward fb = model.loss_and_gradient(batch);
        if (!std::isfinite(fb.loss) || !numerics::all_finite(fb.grad)) {
            throw DivergenceError("non-finite loss or gradient at update " +
                                      std::to_string(state.t + 1),
                                  state.t + 1);
        }
        numerics::restore(model.params(), cached);
        optim::StepResult result = optim::adamw_step(cached, state, fb.grad,
                                                     config);
        model.params() = std::move(result.params);
        state = std::move(result.state);
        trace.step = state.t;
        trace.loss = fb.loss;
        trace.grad_norm = numerics::l2_norm(fb.grad);
        trace.gamma = config.gamma;
        return trace;
    } catch (...) {
        numerics::restore(model.params(), cached);
        throw;
    }
}

namespace detail {

template <typename StepFn>
StepTrace conventional_step(models::Model& model, const models::Batch& batch,
                            optim::AdamWState& state,
                            const optim::AdamWConfig& config, StepFn step_fn) {
    const models::ForwardBackward fb = model.loss_and_gradient(batch);
    if (!std::isfinite(fb.loss) || !numerics::all_finite(fb.grad)) {
        throw DivergenceError("non-finite loss or gradient at update " +
                                  std::to_string(state.t + 1),
                              state.t + 1);
    }
    optim::StepResult result = step_fn(model.params(), state, fb.grad, config);
    model.params() = std::move(result.params);
    state = std::move(result.state);
    StepTrace trace;
    trace.step = state.t;
    trace.loss = fb.loss;
    trace.grad_norm = numerics::l2_norm(fb.grad);
    trace.gamma = config.gamma;
    trace.pred_distance = 0.0;
    return trace;
}

} // namespace detail

/// Conventional step: forward/backward at the current weights, then AdamW.
inline StepTrace train_step_baseline(models::Model& model,
                                     const models::Batch& batch,
                                     optim::AdamWState& state,
                                     const optim::AdamWConfig& config) {
    return detail::conventional_step(
        model, batch, state, config,
        [](const ParamVector& p, const optim::AdamWState& st,
           const GradVector& g, const optim::AdamWConfig& c) {
            return optim::adamw_step(p, st, g, c);
        });
}

/// Baseline loop body with the L2-coupled Adam step instead of AdamW.
inline StepTrace train_step_plain_adam(models::Model& model,
                                       const models::Batch& batch,
                                       optim::AdamWState& state,
                                       const optim::AdamWConfig& config) {
    return detail::conventional_step(
        model, batch, state, config,
        [](const ParamVector& p, const optim::AdamWState& st,
           const GradVector& g, const optim::AdamWConfig& c) {
            return optim::plain_adam_step(p, st, g, c);
        });
}

inline StepTrace dispatch_step(models::Model& model, const models::Batch& batch,
                               optim::AdamWState& state,
                               const optim::AdamWConfig& config,
                               const ModeSpec& mode) {
    switch (mode.kind) {
        case Mode::Predictive:
            return train_step_predictive(model, batch, state, config);
        case Mode::PlainAdam:
            return train_step_plain_adam(model, batch, state, config);
        case Mode::Baseline:
        default:
            return train_step_baseline(model, batch, state, config);
    }
}

/// Learning rate in effect during 0-based epoch `epoch`: the base rate times
/// every schedule multiplier whose epoch index is <= epoch.
inline double effective_gamma(double base_gamma,
                              const std::vector<std::pair<int, double>>& schedule,
                              int epoch) {
    double gamma = base_gamma;
    for (const auto& [at, mult] : schedule) {
        if (at <= epoch) gamma *= mult;
    }
    return gamma;
}

/// The batch sequence of 0-based epoch `epoch`, identical for every mode that
/// shares the plan's seed.
inline std::vector<models::Batch> epoch_batches(const data::Dataset& train,
                                                const TrainPlan& plan,
                                                int epoch) {
    return data::batches(train, plan.batch_size, plan.shuffle,
                         derive_seed(plan.seed, kEpochStreamBase +
                                                    static_cast<std::uint64_t>(
                                                        epoch)));
}

using StepObserver =
    std::function<void(const StepTrace&, const ParamVector&)>;

/// Runs plan.epochs passes over the training set. Per epoch: the schedule is
/// applied first, then every batch is stepped in the mode's scheme, then the
/// training loss (mean of the observed minibatch losses) and validation
/// metrics are recorded. A non-finite loss or parameter stops the run with
/// the failing step index recorded. Fully deterministic given the plan seed.
inline RunRecord run_training(const TrainPlan& plan, models::Model& model,
                              const data::Dataset& train,
                              const data::Dataset& validation,
                              optim::AdamWConfig config,
                              const StepObserver& observer = {}) {
    plan.validate();
    config.validate();
    if (train.size() == 0) throw DataError("run_training: empty training set");

    RunRecord record;
    record.mode = plan.mode.token();
    record.seed = plan.seed;
    if (plan.mode.kind == Mode::Predictive) {
        config.s = plan.mode.s;
    }

    optim::AdamWState state = optim::init_state(model.param_count());
    const models::Batch train_eval = data::as_batch(train);
    const models::Batch val_eval = data::as_batch(validation);

    for (int epoch = 0; epoch < plan.epochs && !record.diverged; ++epoch) {
        optim::AdamWConfig epoch_config = config;
        epoch_config.gamma = effective_gamma(config.gamma, plan.lr_schedule,
                                             epoch);
        double loss_sum = 0.0;
        std::size_t steps_in_epoch = 0;
        for (const models::Batch& batch : epoch_batches(train, plan, epoch)) {
            StepTrace trace;
            try {
                trace = dispatch_step(model, batch, state, epoch_config,
                                      plan.mode);
            } catch (const DivergenceError& err) {
                record.diverged = true;
                record.diverged_at_step = err.step();
                break;
            }
            loss_sum += trace.loss;
            ++steps_in_epoch;
            if (plan.record_steps) record.steps.push_back(trace);
            if (observer) observer(trace, model.params());
        }
        if (record.diverged) break;

        EpochRecord er;
        er.epoch = epoch + 1;
        er.gamma = epoch_config.gamma;
        er.train_loss = loss_sum / static_cast<double>(steps_in_epoch);
        er.val_loss = model.loss(val_eval);
        er.val_acc = model.is_classifier()
                         ? model.accuracy(val_eval)
                         : std::numeric_limits<double>::quiet_NaN();
        record.epochs.push_back(er);
    }

    // summary over whatever epochs completed
    for (const EpochRecord& er : record.epochs) {
        if (std::isnan(record.summary.min_val_loss) ||
            er.val_loss < record.summary.min_val_loss) {
            record.summary.min_val_loss = er.val_loss;
            record.summary.best_epoch = er.epoch;
        }
        if (std::isnan(record.summary.max_val_acc) ||
            er.val_acc > record.summary.max_val_acc) {
            record.summary.max_val_acc = er.val_acc;
        }
    }
    if (!record.epochs.empty()) {
        record.summary.final_train_loss = record.epochs.back().train_loss;
    }
    return record;
}

} // namespace stepahead::controller

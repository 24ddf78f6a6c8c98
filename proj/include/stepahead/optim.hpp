// AdamW with decoupled weight decay, plus the s-step weight predictor that
// extrapolates the latest update direction to estimate future weights.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "stepahead/errors.hpp"
#include "stepahead/numerics.hpp"

namespace stepahead::optim {

struct AdamWConfig {
    double gamma = 1e-3;  // learning rate
    double beta1 = 0.9;   // first-moment decay
    double beta2 = 0.999; // second-moment decay
    double eps = 1e-8;    // denominator smoothing
    double lambda = 5e-4; // decoupled weight decay
    int s = 0;            // weight prediction steps; 0 disables prediction

    // Fault-injection knob for the self-check suite: moves eps inside the
    // square root. Not reachable from any config file.
    bool eps_inside_sqrt = false;

    void validate() const {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw ConfigError("optimizer.gamma must be finite and > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0))
            throw ConfigError("optimizer.beta1 must be in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("optimizer.beta2 must be in [0, 1)");
        if (!(eps > 0.0) || !std::isfinite(eps))
            throw ConfigError("optimizer.eps must be finite and > 0");
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw ConfigError("optimizer.lambda must be finite and >= 0");
        if (s < 0) throw ConfigError("optimizer.s must be >= 0");
    }
};

// t counts applied updates; m and v are the first/second moment averages.
// t = 0 implies m = v = 0.
struct AdamWState {
    long long t = 0;
    ParamVector m;
    ParamVector v;
};

struct BiasCorrectedMoments {
    ParamVector m_hat;
    ParamVector v_hat;
};

inline AdamWState init_state(std::size_t param_count) {
    AdamWState s;
    s.t = 0;
    s.m.assign(param_count, 0.0);
    s.v.assign(param_count, 0.0);
    return s;
}

// m <- beta1 m + (1-beta1) g;  v <- beta2 v + (1-beta2) g^2;  t <- t+1
inline AdamWState update_moments(const AdamWState& state, const GradVector& g,
                                 const AdamWConfig& config) {
    numerics::check_same_size(state.m.size(), g.size(), "update_moments");
    numerics::check_finite(g, "update_moments: gradient");
    AdamWState next;
    next.t = state.t + 1;
    next.m = numerics::elementwise_combine(state.m, g, config.beta1,
                                           1.0 - config.beta1);
    next.v.resize(state.v.size());
    const double b2 = config.beta2;
    for (std::size_t i = 0; i < g.size(); ++i) {
        next.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
        if (!std::isfinite(next.v[i])) {
            throw NumericError("update_moments: second moment overflow at index " +
                               std::to_string(i));
        }
    }
    return next;
}

// m_hat = m / (1 - beta1^t), v_hat = v / (1 - beta2^t). Requires t >= 1; the
// correction denominators vanish at t = 0.
inline BiasCorrectedMoments bias_correct(const AdamWState& state,
                                         const AdamWConfig& config) {
    if (state.t < 1) {
        throw PreconditionError("bias_correct: requires t >= 1, got t = " +
                                std::to_string(state.t));
    }
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    BiasCorrectedMoments bc;
    bc.m_hat.resize(state.m.size());
    bc.v_hat.resize(state.v.size());
    for (std::size_t i = 0; i < state.m.size(); ++i) {
        bc.m_hat[i] = state.m[i] / c1;
        bc.v_hat[i] = state.v[i] / c2;
    }
    return bc;
}

namespace detail {

inline ParamVector update_direction(const BiasCorrectedMoments& bc,
                                    const AdamWConfig& config) {
    if (!config.eps_inside_sqrt) {
        return numerics::elementwise_adam_direction(bc.m_hat, bc.v_hat,
                                                    config.eps);
    }
    // deliberately wrong variant, only for fault injection in self-checks
    ParamVector out(bc.m_hat.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = bc.m_hat[i] / std::sqrt(bc.v_hat[i] + config.eps);
    }
    return out;
}

} // namespace detail

struct StepResult {
    ParamVector params;
    AdamWState state;
};

/// One AdamW update: moments first, then bias correction, then
/// params' = (1 - gamma*lambda) * params - gamma * m_hat / (sqrt(v_hat) + eps).
/// Inputs are untouched; the new parameters and state are returned.
///
/// When applied_update is non-null it receives the gamma * m_hat /
/// (sqrt(v_hat) + eps) term exactly as subtracted, which lets observers
/// rebuild the trajectory sum without re-deriving moments.
inline StepResult adamw_step(const ParamVector& params, const AdamWState& state,
                             const GradVector& g, const AdamWConfig& config,
                             ParamVector* applied_update = nullptr) {
    numerics::check_same_size(params.size(), g.size(), "adamw_step");
    AdamWState next = update_moments(state, g, config);
    const BiasCorrectedMoments bc = bias_correct(next, config);
    const ParamVector dir = detail::update_direction(bc, config);
    if (applied_update) applied_update->assign(params.size(), 0.0);
    ParamVector out(params.size());
    const double keep = 1.0 - config.gamma * config.lambda;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double u = config.gamma * dir[i];
        out[i] = keep * params[i] - u;
        if (applied_update) (*applied_update)[i] = u;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(out[i])) {
            throw DivergenceError("adamw_step: non-finite parameter at index " +
                                      std::to_string(i) + " after update " +
                                      std::to_string(next.t),
                                  next.t);
        }
    }
    return {std::move(out), std::move(next)};
}

/// Baseline Adam with L2 regularization folded into the gradient
/// (g' = g + lambda * params) instead of decoupled decay. For comparison
/// runs; identical to adamw_step when lambda = 0.
inline StepResult plain_adam_step(const ParamVector& params,
                                  const AdamWState& state, const GradVector& g,
                                  const AdamWConfig& config) {
    numerics::check_same_size(params.size(), g.size(), "plain_adam_step");
    GradVector reg = numerics::elementwise_combine(g, params, 1.0, config.lambda);
    AdamWConfig no_decay = config;
    no_decay.lambda = 0.0;
    return adamw_step(params, state, reg, no_decay);
}

/// Estimate the weights s updates ahead by extrapolating the most recent
/// realized update direction:
///   predicted[i] = params[i] - s * gamma * m_hat[i] / (sqrt(v_hat[i]) + eps)
/// with the moments bias-corrected at the state's current t. With s = 0 or
/// no gradient history yet (t = 0) the prediction is the identity. Inputs
/// are never modified.
inline ParamVector predict_weights(const ParamVector& params,
                                   const AdamWState& state,
                                   const AdamWConfig& config) {
    numerics::check_same_size(params.size(), state.m.size(), "predict_weights");
    if (state.t == 0 || config.s == 0) {
        return numerics::snapshot(params);
    }
    const BiasCorrectedMoments bc = bias_correct(state, config);
    const ParamVector dir = detail::update_direction(bc, config);
    const double scale = static_cast<double>(config.s) * config.gamma;
    ParamVector out(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        out[i] = params[i] - scale * dir[i];
    }
    return out;
}

} // namespace stepahead::optim

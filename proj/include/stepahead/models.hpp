// Differentiable objectives with analytic gradients: a quadratic bowl, softmax
// logistic regression, and a small fully connected network with hand-derived
// backpropagation. A central finite-difference oracle is provided for
// checking every analytic gradient.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "stepahead/errors.hpp"
#include "stepahead/numerics.hpp"
#include "stepahead/rng.hpp"

namespace stepahead::models {

// One mini-batch: row-major feature matrix plus one target per row. Class
// labels are stored as exact small integers in double.
struct Batch {
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;

    std::size_t size() const { return targets.size(); }
};

struct ForwardBackward {
    double loss = 0.0;
    GradVector grad;
};

class Model {
public:
    virtual ~Model() = default;

    std::size_t param_count() const { return params_.size(); }
    ParamVector& params() { return params_; }
    const ParamVector& params() const { return params_; }

    // Forward pass: mean loss over the batch. Deterministic in (params, batch).
    virtual double loss(const Batch& batch) const = 0;
    // Forward plus analytic gradient w.r.t. the flattened parameters.
    virtual ForwardBackward loss_and_gradient(const Batch& batch) const = 0;

    virtual bool is_classifier() const { return false; }
    // Fraction of rows whose argmax logit matches the label; NaN when the
    // model is not a classifier.
    virtual double accuracy(const Batch&) const {
        return std::numeric_limits<double>::quiet_NaN();
    }

    virtual std::unique_ptr<Model> clone() const = 0;

protected:
    ParamVector params_;
};

// --- quadratic bowl ---------------------------------------------------------

// 0.5 * sum_i curvature[i] * params[i]^2
inline double quadratic_loss(const ParamVector& params,
                             const std::vector<double>& curvature) {
    numerics::check_same_size(params.size(), curvature.size(), "quadratic_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(curvature[i] > 0.0)) {
            throw InvariantError("quadratic_loss: non-positive curvature at index " +
                                 std::to_string(i));
        }
        acc += 0.5 * curvature[i] * params[i] * params[i];
    }
    return acc;
}

inline GradVector quadratic_gradient(const ParamVector& params,
                                     const std::vector<double>& curvature) {
    numerics::check_same_size(params.size(), curvature.size(),
                              "quadratic_gradient");
    GradVector g(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(curvature[i] > 0.0)) {
            throw InvariantError(
                "quadratic_gradient: non-positive curvature at index " +
                std::to_string(i));
        }
        g[i] = curvature[i] * params[i];
    }
    return g;
}

// Deterministic convex objective; ignores batch contents (the batch only
// clocks the training loop).
class QuadraticModel : public Model {
public:
    QuadraticModel(std::vector<double> curvature, ParamVector initial)
        : curvature_(std::move(curvature)) {
        numerics::check_same_size(initial.size(), curvature_.size(),
                                  "QuadraticModel");
        params_ = std::move(initial);
    }

    // Initial point uniform in [-1, 1] per coordinate.
    static QuadraticModel seeded(std::vector<double> curvature,
                                 std::uint64_t seed) {
        SplitMix64 rng(seed);
        ParamVector init(curvature.size());
        for (double& x : init) x = rng.next_uniform(-1.0, 1.0);
        return QuadraticModel(std::move(curvature), std::move(init));
    }

    double loss(const Batch&) const override {
        return quadratic_loss(params_, curvature_);
    }

    ForwardBackward loss_and_gradient(const Batch&) const override {
        return {quadratic_loss(params_, curvature_),
                quadratic_gradient(params_, curvature_)};
    }

    std::unique_ptr<Model> clone() const override {
        return std::make_unique<QuadraticModel>(*this);
    }

    const std::vector<double>& curvature() const { return curvature_; }

private:
    std::vector<double> curvature_;
};

// --- softmax helpers --------------------------------------------------------

namespace detail {

// log(sum exp(z)) with max subtraction
inline double log_sum_exp(const std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double acc = 0.0;
    for (double x : z) acc += std::exp(x - zmax);
    return zmax + std::log(acc);
}

inline void softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double acc = 0.0;
    for (double& x : z) {
        x = std::exp(x - zmax);
        acc += x;
    }
    for (double& x : z) x /= acc;
}

inline int checked_label(double target, int classes, std::size_t row) {
    const int y = static_cast<int>(target);
    if (static_cast<double>(y) != target || y < 0 || y >= classes) {
        throw DataError("label out of range at batch row " + std::to_string(row) +
                        ": " + std::to_string(target));
    }
    return y;
}

inline std::size_t argmax(const std::vector<double>& z) {
    return static_cast<std::size_t>(
        std::max_element(z.begin(), z.end()) - z.begin());
}

} // namespace detail

// --- logistic regression ----------------------------------------------------

// Multinomial logistic regression. Parameter layout: W row-major
// (classes x features), then bias (classes). Weights start uniform in
// [-1/sqrt(features), 1/sqrt(features)], biases at zero.
class LogisticRegressionModel : public Model {
public:
    LogisticRegressionModel(int features, int classes, std::uint64_t seed)
        : features_(features), classes_(classes) {
        if (features < 1 || classes < 2) {
            throw ConfigError("LogisticRegressionModel: needs features >= 1 and "
                              "classes >= 2");
        }
        params_.assign(static_cast<std::size_t>(classes) * features + classes,
                       0.0);
        SplitMix64 rng(seed);
        const double r = 1.0 / std::sqrt(static_cast<double>(features));
        for (int i = 0; i < classes * features; ++i) {
            params_[static_cast<std::size_t>(i)] = rng.next_uniform(-r, r);
        }
    }

    int features() const { return features_; }
    int classes() const { return classes_; }

    double loss(const Batch& batch) const override {
        check_batch(batch);
        double acc = 0.0;
        std::vector<double> z(static_cast<std::size_t>(classes_));
        for (std::size_t n = 0; n < batch.size(); ++n) {
            logits(batch.inputs[n], z);
            const int y = detail::checked_label(batch.targets[n], classes_, n);
            acc += detail::log_sum_exp(z) - z[static_cast<std::size_t>(y)];
        }
        return acc / static_cast<double>(batch.size());
    }

    ForwardBackward loss_and_gradient(const Batch& batch) const override {
        check_batch(batch);
        ForwardBackward fb;
        fb.grad.assign(params_.size(), 0.0);
        const double inv_n = 1.0 / static_cast<double>(batch.size());
        std::vector<double> z(static_cast<std::size_t>(classes_));
        for (std::size_t n = 0; n < batch.size(); ++n) {
            const auto& x = batch.inputs[n];
            logits(x, z);
            const int y = detail::checked_label(batch.targets[n], classes_, n);
            fb.loss += (detail::log_sum_exp(z) - z[static_cast<std::size_t>(y)]) *
                       inv_n;
            detail::softmax_inplace(z);
            z[static_cast<std::size_t>(y)] -= 1.0;
            for (int c = 0; c < classes_; ++c) {
                const double dz = z[static_cast<std::size_t>(c)] * inv_n;
                double* wrow = fb.grad.data() +
                               static_cast<std::size_t>(c) * features_;
                for (int d = 0; d < features_; ++d) wrow[d] += dz * x[static_cast<std::size_t>(d)];
                fb.grad[bias_offset() + static_cast<std::size_t>(c)] += dz;
            }
        }
        return fb;
    }

    bool is_classifier() const override { return true; }

    double accuracy(const Batch& batch) const override {
        check_batch(batch);
        std::size_t hits = 0;
        std::vector<double> z(static_cast<std::size_t>(classes_));
        for (std::size_t n = 0; n < batch.size(); ++n) {
            logits(batch.inputs[n], z);
            const int y = detail::checked_label(batch.targets[n], classes_, n);
            if (detail::argmax(z) == static_cast<std::size_t>(y)) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(batch.size());
    }

    std::unique_ptr<Model> clone() const override {
        return std::make_unique<LogisticRegressionModel>(*this);
    }

private:
    std::size_t bias_offset() const {
        return static_cast<std::size_t>(classes_) * features_;
    }

    void check_batch(const Batch& batch) const {
        if (batch.size() == 0) throw DataError("empty batch");
        for (const auto& row : batch.inputs) {
            numerics::check_same_size(row.size(),
                                      static_cast<std::size_t>(features_),
                                      "LogisticRegressionModel: feature width");
        }
        numerics::check_same_size(batch.inputs.size(), batch.targets.size(),
                                  "LogisticRegressionModel: rows vs targets");
    }

    void logits(const std::vector<double>& x, std::vector<double>& z) const {
        for (int c = 0; c < classes_; ++c) {
            const double* wrow =
                params_.data() + static_cast<std::size_t>(c) * features_;
            double acc = params_[bias_offset() + static_cast<std::size_t>(c)];
            for (int d = 0; d < features_; ++d) acc += wrow[d] * x[static_cast<std::size_t>(d)];
            z[static_cast<std::size_t>(c)] = acc;
        }
    }

    int features_;
    int classes_;
};

// --- fully connected network ------------------------------------------------

enum class LossKind { CrossEntropy, SquaredError };

// Fully connected layers with tanh hidden activations and a linear output
// layer. CrossEntropy applies softmax over the outputs against integer
// labels; SquaredError needs exactly one output and fits real targets with
// mean 0.5 * (out - target)^2.
//
// Parameter layout, layer by layer: W row-major (fan_out x fan_in), then the
// layer bias. Weights start uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]
// drawn row-major from the seeded generator; biases start at zero.
class MlpModel : public Model {
public:
    MlpModel(std::vector<int> layer_sizes, LossKind loss_kind,
             std::uint64_t seed)
        : sizes_(std::move(layer_sizes)), loss_kind_(loss_kind) {
        if (sizes_.size() < 2) {
            throw ConfigError("MlpModel: needs at least input and output sizes");
        }
        for (int n : sizes_) {
            if (n < 1) throw ConfigError("MlpModel: layer sizes must be >= 1");
        }
        if (loss_kind_ == LossKind::SquaredError && sizes_.back() != 1) {
            throw ConfigError("MlpModel: squared-error loss needs one output");
        }
        std::size_t total = 0;
        for (std::size_t l = 1; l < sizes_.size(); ++l) {
            total += static_cast<std::size_t>(sizes_[l]) * sizes_[l - 1] +
                     sizes_[l];
        }
        params_.assign(total, 0.0);
        SplitMix64 rng(seed);
        std::size_t off = 0;
        for (std::size_t l = 1; l < sizes_.size(); ++l) {
            const double r = 1.0 / std::sqrt(static_cast<double>(sizes_[l - 1]));
            const std::size_t w = static_cast<std::size_t>(sizes_[l]) *
                                  sizes_[l - 1];
            for (std::size_t i = 0; i < w; ++i) {
                params_[off + i] = rng.next_uniform(-r, r);
            }
            off += w + sizes_[l]; // biases stay zero
        }
    }

    const std::vector<int>& layer_sizes() const { return sizes_; }
    LossKind loss_kind() const { return loss_kind_; }

    double loss(const Batch& batch) const override {
        check_batch(batch);
        double acc = 0.0;
        Activations act(sizes_);
        for (std::size_t n = 0; n < batch.size(); ++n) {
            forward(batch.inputs[n], act);
            acc += sample_loss(act.back(), batch.targets[n], n);
        }
        return acc / static_cast<double>(batch.size());
    }

    ForwardBackward loss_and_gradient(const Batch& batch) const override {
        check_batch(batch);
        ForwardBackward fb;
        fb.grad.assign(params_.size(), 0.0);
        const double inv_n = 1.0 / static_cast<double>(batch.size());
        Activations act(sizes_);
        std::vector<double> delta;
        std::vector<double> delta_prev;
        for (std::size_t n = 0; n < batch.size(); ++n) {
            forward(batch.inputs[n], act);
            fb.loss += sample_loss(act.back(), batch.targets[n], n) * inv_n;

            // output delta, already scaled by 1/N
            delta = act.back();
            if (loss_kind_ == LossKind::CrossEntropy) {
                detail::softmax_inplace(delta);
                const int y = detail::checked_label(
                    batch.targets[n], sizes_.back(), n);
                delta[static_cast<std::size_t>(y)] -= 1.0;
            } else {
                delta[0] -= batch.targets[n];
            }
            for (double& d : delta) d *= inv_n;

            for (std::size_t l = sizes_.size() - 1; l >= 1; --l) {
                const std::size_t fan_in = static_cast<std::size_t>(sizes_[l - 1]);
                const std::size_t fan_out = static_cast<std::size_t>(sizes_[l]);
                const std::size_t w_off = weight_offset(l);
                const auto& below = act.layer(l - 1);
                double* gw = fb.grad.data() + w_off;
                for (std::size_t j = 0; j < fan_out; ++j) {
                    const double dj = delta[j];
                    for (std::size_t i = 0; i < fan_in; ++i) {
                        gw[j * fan_in + i] += dj * below[i];
                    }
                    fb.grad[w_off + fan_out * fan_in + j] += dj;
                }
                if (l == 1) break;
                // propagate through W and the tanh derivative of the layer below
                delta_prev.assign(fan_in, 0.0);
                const double* w = params_.data() + w_off;
                for (std::size_t j = 0; j < fan_out; ++j) {
                    const double dj = delta[j];
                    for (std::size_t i = 0; i < fan_in; ++i) {
                        delta_prev[i] += w[j * fan_in + i] * dj;
                    }
                }
                for (std::size_t i = 0; i < fan_in; ++i) {
                    delta_prev[i] *= 1.0 - below[i] * below[i];
                }
                delta.swap(delta_prev);
            }
        }
        return fb;
    }

    bool is_classifier() const override {
        return loss_kind_ == LossKind::CrossEntropy;
    }

    double accuracy(const Batch& batch) const override {
        if (loss_kind_ != LossKind::CrossEntropy) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        check_batch(batch);
        std::size_t hits = 0;
        Activations act(sizes_);
        for (std::size_t n = 0; n < batch.size(); ++n) {
            forward(batch.inputs[n], act);
            const int y =
                detail::checked_label(batch.targets[n], sizes_.back(), n);
            if (detail::argmax(act.back()) == static_cast<std::size_t>(y)) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(batch.size());
    }

    std::unique_ptr<Model> clone() const override {
        return std::make_unique<MlpModel>(*this);
    }

private:
    struct Activations {
        explicit Activations(const std::vector<int>& sizes) {
            values.resize(sizes.size());
            for (std::size_t l = 0; l < sizes.size(); ++l) {
                values[l].assign(static_cast<std::size_t>(sizes[l]), 0.0);
            }
        }
        std::vector<double>& layer(std::size_t l) { return values[l]; }
        const std::vector<double>& layer(std::size_t l) const { return values[l]; }
        std::vector<double>& back() { return values.back(); }
        const std::vector<double>& back() const { return values.back(); }
        std::vector<std::vector<double>> values;
    };

    std::size_t weight_offset(std::size_t layer) const {
        std::size_t off = 0;
        for (std::size_t l = 1; l < layer; ++l) {
            off += static_cast<std::size_t>(sizes_[l]) * sizes_[l - 1] + sizes_[l];
        }
        return off;
    }

    void check_batch(const Batch& batch) const {
        if (batch.size() == 0) throw DataError("empty batch");
        for (const auto& row : batch.inputs) {
            numerics::check_same_size(row.size(),
                                      static_cast<std::size_t>(sizes_.front()),
                                      "MlpModel: feature width");
        }
        numerics::check_same_size(batch.inputs.size(), batch.targets.size(),
                                  "MlpModel: rows vs targets");
    }

    void forward(const std::vector<double>& x, Activations& act) const {
        act.layer(0) = x;
        for (std::size_t l = 1; l < sizes_.size(); ++l) {
            const std::size_t fan_in = static_cast<std::size_t>(sizes_[l - 1]);
            const std::size_t fan_out = static_cast<std::size_t>(sizes_[l]);
            const std::size_t w_off = weight_offset(l);
            const double* w = params_.data() + w_off;
            const double* b = params_.data() + w_off + fan_out * fan_in;
            const auto& below = act.layer(l - 1);
            auto& out = act.layer(l);
            for (std::size_t j = 0; j < fan_out; ++j) {
                double acc = b[j];
                for (std::size_t i = 0; i < fan_in; ++i) {
                    acc += w[j * fan_in + i] * below[i];
                }
                out[j] = (l + 1 < sizes_.size()) ? std::tanh(acc) : acc;
            }
        }
    }

    double sample_loss(const std::vector<double>& out, double target,
                       std::size_t row) const {
        if (loss_kind_ == LossKind::CrossEntropy) {
            const int y = detail::checked_label(target, sizes_.back(), row);
            return detail::log_sum_exp(out) - out[static_cast<std::size_t>(y)];
        }
        const double d = out[0] - target;
        return 0.5 * d * d;
    }

    std::vector<int> sizes_;
    LossKind loss_kind_;
};

// --- finite differences -----------------------------------------------------

/// Central-difference gradient oracle: (f(p + h e_i) - f(p - h e_i)) / (2h)
/// per coordinate. The model's parameters are bitwise unchanged afterward.
inline GradVector finite_difference_gradient(Model& model, const Batch& batch,
                                             double h) {
    if (!(h > 0.0)) {
        throw PreconditionError("finite_difference_gradient: h must be > 0");
    }
    ParamVector& p = model.params();
    GradVector g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double original = p[i];
        p[i] = original + h;
        const double up = model.loss(batch);
        p[i] = original - h;
        const double down = model.loss(batch);
        p[i] = original;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

} // namespace stepahead::models

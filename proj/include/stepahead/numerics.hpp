// Elementwise vector arithmetic and snapshot/restore primitives over flat
// parameter vectors. Everything above this layer is expressed in these
// operations; all arithmetic is 64-bit.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stepahead/errors.hpp"

namespace stepahead {

// Flattened model weights. Fixed length for the lifetime of a model; entries
// are always finite.
using ParamVector = std::vector<double>;
// Per-entry loss derivatives; same length as the paired ParamVector.
using GradVector = std::vector<double>;

namespace numerics {

inline void check_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": length mismatch (" +
                             std::to_string(a) + " vs " + std::to_string(b) +
                             ")");
    }
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void check_finite(const std::vector<double>& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw NumericError(std::string(what) + ": non-finite entry at index " +
                               std::to_string(i));
        }
    }
}

// result[i] = scale_a * a[i] + scale_b * b[i]
inline ParamVector elementwise_combine(const ParamVector& a,
                                       const ParamVector& b, double scale_a,
                                       double scale_b) {
    check_same_size(a.size(), b.size(), "elementwise_combine");
    if (!std::isfinite(scale_a) || !std::isfinite(scale_b)) {
        throw NumericError("elementwise_combine: non-finite scale");
    }
    ParamVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = scale_a * a[i] + scale_b * b[i];
        if (!std::isfinite(out[i])) {
            throw NumericError("elementwise_combine: non-finite result at index " +
                               std::to_string(i));
        }
    }
    return out;
}

// result[i] = m_hat[i] / (sqrt(v_hat[i]) + eps); the adaptive update
// direction. Output magnitude is bounded by max|m_hat| / eps.
inline ParamVector elementwise_adam_direction(const ParamVector& m_hat,
                                              const ParamVector& v_hat,
                                              double eps) {
    check_same_size(m_hat.size(), v_hat.size(), "elementwise_adam_direction");
    if (!(eps > 0.0)) {
        throw PreconditionError("elementwise_adam_direction: eps must be > 0");
    }
    ParamVector out(m_hat.size());
    for (std::size_t i = 0; i < m_hat.size(); ++i) {
        if (v_hat[i] < 0.0) {
            throw InvariantError(
                "elementwise_adam_direction: negative second moment at index " +
                std::to_string(i));
        }
        out[i] = m_hat[i] / (std::sqrt(v_hat[i]) + eps);
    }
    return out;
}

// Independent copy; later mutation of either side does not affect the other.
inline ParamVector snapshot(const ParamVector& p) { return p; }

// Bitwise copy of saved into target. Exact, not approximate.
inline void restore(ParamVector& target, const ParamVector& saved) {
    check_same_size(target.size(), saved.size(), "restore");
    target = saved;
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
    check_same_size(a.size(), b.size(), "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

inline double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace numerics
} // namespace stepahead

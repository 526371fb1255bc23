#pragma once

#include <algorithm>
#include <cmath>

namespace repnet {

/// Binary entropy, h(0) = h(1) = 0.
inline double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

inline double qber_from_werner(double mean_werner) {
    const double q = (1.0 - mean_werner) / 2.0;
    return std::clamp(q, 0.0, 0.5);
}

/// Secret fraction r(w) = max(1 - 2 h((1 - w) / 2), 0).
inline double secret_fraction(double mean_werner) {
    return std::max(1.0 - 2.0 * binary_entropy(qber_from_werner(mean_werner)), 0.0);
}

inline bool secret_fraction_clamped(double mean_werner) {
    return 1.0 - 2.0 * binary_entropy(qber_from_werner(mean_werner)) <= 0.0;
}

/// d/dw of the secret fraction on the unclamped branch, 0 when clamped.
inline double secret_fraction_derivative(double mean_werner) {
    if (secret_fraction_clamped(mean_werner)) return 0.0;
    const double q = qber_from_werner(mean_werner);
    if (q <= 0.0) return 0.0;
    // d/dw [1 - 2 h(q(w))] with dq/dw = -1/2 and h'(q) = log2((1-q)/q).
    return std::log2((1.0 - q) / q);
}

/// Second derivative of the secret fraction w.r.t. w (unclamped branch).
inline double secret_fraction_second_derivative(double mean_werner) {
    if (secret_fraction_clamped(mean_werner)) return 0.0;
    const double q = qber_from_werner(mean_werner);
    if (q <= 0.0) return 0.0;
    constexpr double ln2 = 0.6931471805599453;
    return (1.0 / (2.0 * ln2)) * (1.0 / (1.0 - q) + 1.0 / q);
}

/// SKR = r(mean werner) / mean T_ent.
inline double skr_from_means(double mean_t_ent, double mean_werner) {
    return secret_fraction(mean_werner) / mean_t_ent;
}

}  // namespace repnet

#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "stochad/random.hpp"

namespace stochad {

/// A finite jump that occurs with infinitesimal probability weight * eps.
struct Perturbation {
    double jump = 0.0;
    double weight = 0.0;  // >= 0 always
};

/// Stochastic triple: value + delta * eps + (jump with probability weight * eps).
///
/// The pruned representation carries at most one finite perturbation; when two
/// meet in a binary operation, one is kept with probability proportional to
/// its weight and the weights are summed, which preserves the expectation of
/// the derivative estimator delta + weight * jump.
struct Triple {
    double value = 0.0;
    double delta = 0.0;
    std::optional<Perturbation> perturbation;
};

/// Seed the differentiation variable: (x, 1, none).
inline Triple make_input(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("make_input: x must be finite");
    return Triple{x, 1.0, std::nullopt};
}

/// A constant: (x, 0, none).
inline Triple make_const(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("make_const: x must be finite");
    return Triple{x, 0.0, std::nullopt};
}

/// Single-sample derivative estimator, delta + weight * jump.
inline double derivative_estimate(const Triple& t) {
    if (!t.perturbation) return t.delta;
    return t.delta + t.perturbation->weight * t.perturbation->jump;
}

namespace detail {

inline void check_weight(const Triple& t, const char* op) {
    if (t.perturbation && !(t.perturbation->weight >= 0.0)) {
        throw std::invalid_argument(std::string(op) + ": negative perturbation weight");
    }
}

inline void check_value(double v, const char* op) {
    if (std::isnan(v)) {
        throw std::domain_error(std::string(op) + ": function undefined at evaluation point");
    }
}

}  // namespace detail

/// Push a triple through a smooth scalar map with known derivative.
///
/// value -> f(x), delta -> f'(x) * delta, and a finite jump is propagated by
/// re-evaluation: (f(x + jump) - f(x), weight).
template <class F, class DF>
Triple apply_smooth(F&& f, DF&& df, const Triple& t) {
    detail::check_weight(t, "apply_smooth");
    Triple out;
    out.value = f(t.value);
    detail::check_value(out.value, "apply_smooth");
    out.delta = df(t.value) * t.delta;
    if (t.perturbation) {
        const double jumped = f(t.value + t.perturbation->jump);
        detail::check_value(jumped, "apply_smooth");
        out.perturbation = Perturbation{jumped - out.value, t.perturbation->weight};
    }
    return out;
}

/// Combine two triples through a smooth binary map.
///
/// dfda and dfdb are the partial derivatives evaluated at (a.value, b.value).
/// If both operands carry a perturbation, one is selected with probability
/// proportional to its weight (pruning) and the total weight is kept; the
/// RandomSource supplies the pruning draw from its auxiliary lane.
template <class F>
Triple combine(F&& f, double dfda, double dfdb, const Triple& a, const Triple& b,
               RandomSource& rng) {
    detail::check_weight(a, "combine");
    detail::check_weight(b, "combine");
    Triple out;
    out.value = f(a.value, b.value);
    detail::check_value(out.value, "combine");
    out.delta = dfda * a.delta + dfdb * b.delta;

    const bool pa = a.perturbation.has_value();
    const bool pb = b.perturbation.has_value();
    if (pa && pb) {
        const double wa = a.perturbation->weight;
        const double wb = b.perturbation->weight;
        const double total = wa + wb;
        if (total > 0.0) {
            const bool pick_a = rng.aux_double() * total < wa;
            const double jumped = pick_a ? f(a.value + a.perturbation->jump, b.value)
                                         : f(a.value, b.value + b.perturbation->jump);
            detail::check_value(jumped, "combine");
            out.perturbation = Perturbation{jumped - out.value, total};
        }
    } else if (pa) {
        const double jumped = f(a.value + a.perturbation->jump, b.value);
        detail::check_value(jumped, "combine");
        out.perturbation = Perturbation{jumped - out.value, a.perturbation->weight};
    } else if (pb) {
        const double jumped = f(a.value, b.value + b.perturbation->jump);
        detail::check_value(jumped, "combine");
        out.perturbation = Perturbation{jumped - out.value, b.perturbation->weight};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Named operations. Each has a plain-double overload so that simulation code
// templated on the scalar type compiles for both primal and derivative runs;
// the RandomSource argument is unused in the double versions.
// ---------------------------------------------------------------------------

inline double add(double a, double b, RandomSource&) { return a + b; }
inline double sub(double a, double b, RandomSource&) { return a - b; }
inline double mul(double a, double b, RandomSource&) { return a * b; }
inline double div(double a, double b, RandomSource&) { return a / b; }
inline double smax(double a, double b, RandomSource&) { return a >= b ? a : b; }
inline double smin(double a, double b, RandomSource&) { return a <= b ? a : b; }

inline Triple add(const Triple& a, const Triple& b, RandomSource& rng) {
    return combine([](double x, double y) { return x + y; }, 1.0, 1.0, a, b, rng);
}

inline Triple sub(const Triple& a, const Triple& b, RandomSource& rng) {
    return combine([](double x, double y) { return x - y; }, 1.0, -1.0, a, b, rng);
}

inline Triple mul(const Triple& a, const Triple& b, RandomSource& rng) {
    return combine([](double x, double y) { return x * y; }, b.value, a.value, a, b, rng);
}

inline Triple div(const Triple& a, const Triple& b, RandomSource& rng) {
    return combine([](double x, double y) { return x / y; }, 1.0 / b.value,
                   -a.value / (b.value * b.value), a, b, rng);
}

// Comparisons act on primal values. At an exact tie the delta partials are
// symmetrized (1/2, 1/2), so kinked expectations report the two-sided mean of
// the one-sided derivatives.
inline Triple smax(const Triple& a, const Triple& b, RandomSource& rng) {
    double da = 0.0, db = 0.0;
    if (a.value > b.value) da = 1.0;
    else if (b.value > a.value) db = 1.0;
    else da = db = 0.5;
    return combine([](double x, double y) { return x >= y ? x : y; }, da, db, a, b, rng);
}

inline Triple smin(const Triple& a, const Triple& b, RandomSource& rng) {
    double da = 0.0, db = 0.0;
    if (a.value < b.value) da = 1.0;
    else if (b.value < a.value) db = 1.0;
    else da = db = 0.5;
    return combine([](double x, double y) { return x <= y ? x : y; }, da, db, a, b, rng);
}

// Unary helpers (no pruning needed).

inline double negate(double x) { return -x; }
inline double sabs(double x) { return std::fabs(x); }
inline double exp_of(double x) { return std::exp(x); }
inline double log_of(double x) { return std::log(x); }
inline double sqrt_of(double x) { return std::sqrt(x); }
inline double exp10_of(double x) { return std::pow(10.0, x); }
inline double scale(double x, double c) { return c * x; }
inline double shift(double x, double c) { return x + c; }

inline Triple negate(const Triple& t) {
    Triple out{-t.value, -t.delta, std::nullopt};
    if (t.perturbation) out.perturbation = Perturbation{-t.perturbation->jump, t.perturbation->weight};
    return out;
}

inline Triple sabs(const Triple& t) {
    const double s = t.value > 0.0 ? 1.0 : (t.value < 0.0 ? -1.0 : 0.0);
    return apply_smooth([](double x) { return std::fabs(x); }, [s](double) { return s; }, t);
}

inline Triple exp_of(const Triple& t) {
    return apply_smooth([](double x) { return std::exp(x); },
                        [](double x) { return std::exp(x); }, t);
}

inline Triple log_of(const Triple& t) {
    return apply_smooth([](double x) { return std::log(x); },
                        [](double x) { return 1.0 / x; }, t);
}

inline Triple sqrt_of(const Triple& t) {
    return apply_smooth([](double x) { return std::sqrt(x); },
                        [](double x) { return 0.5 / std::sqrt(x); }, t);
}

inline Triple exp10_of(const Triple& t) {
    constexpr double ln10 = 2.302585092994046;
    return apply_smooth([](double x) { return std::pow(10.0, x); },
                        [](double x) { return ln10 * std::pow(10.0, x); }, t);
}

/// Exact affine maps: c * t and t + c.
inline Triple scale(const Triple& t, double c) {
    Triple out{c * t.value, c * t.delta, std::nullopt};
    if (t.perturbation) out.perturbation = Perturbation{c * t.perturbation->jump, t.perturbation->weight};
    return out;
}

inline Triple shift(const Triple& t, double c) {
    Triple out{t.value + c, t.delta, t.perturbation};
    return out;
}

inline double value_of(double x) { return x; }
inline double value_of(const Triple& t) { return t.value; }

template <class S>
S to_scalar(double c);

template <>
inline double to_scalar<double>(double c) {
    return c;
}

template <>
inline Triple to_scalar<Triple>(double c) {
    return make_const(c);
}

// ---------------------------------------------------------------------------
// Operator sugar for parameter plumbing (pre-sampling code). These never
// prune: combining two perturbation-carrying triples requires an explicit
// RandomSource, so the binary operators reject that case.
// ---------------------------------------------------------------------------

namespace detail {

inline void require_prunable(const Triple& a, const Triple& b, const char* op) {
    if (a.perturbation && b.perturbation) {
        throw std::logic_error(std::string(op) +
                               ": both operands carry perturbations; use combine() "
                               "with a RandomSource");
    }
}

struct NullRng {
    // Only reached when at most one operand is perturbed, so the RandomSource
    // is never consulted; a dummy keeps the operator signatures rng-free.
    static RandomSource& instance() {
        static RandomSource rng(0, 0);
        return rng;
    }
};

}  // namespace detail

inline Triple operator+(const Triple& a, const Triple& b) {
    detail::require_prunable(a, b, "operator+");
    return add(a, b, detail::NullRng::instance());
}

inline Triple operator-(const Triple& a, const Triple& b) {
    detail::require_prunable(a, b, "operator-");
    return sub(a, b, detail::NullRng::instance());
}

inline Triple operator*(const Triple& a, const Triple& b) {
    detail::require_prunable(a, b, "operator*");
    return mul(a, b, detail::NullRng::instance());
}

inline Triple operator/(const Triple& a, const Triple& b) {
    detail::require_prunable(a, b, "operator/");
    return div(a, b, detail::NullRng::instance());
}

inline Triple operator+(const Triple& a, double c) { return shift(a, c); }
inline Triple operator+(double c, const Triple& a) { return shift(a, c); }
inline Triple operator-(const Triple& a, double c) { return shift(a, -c); }
inline Triple operator-(double c, const Triple& a) { return shift(negate(a), c); }
inline Triple operator*(const Triple& a, double c) { return scale(a, c); }
inline Triple operator*(double c, const Triple& a) { return scale(a, c); }
inline Triple operator/(const Triple& a, double c) { return scale(a, 1.0 / c); }
inline Triple operator-(const Triple& a) { return negate(a); }

}  // namespace stochad

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "stochad/random.hpp"
#include "stochad/triple.hpp"

namespace stochad {

namespace detail {

inline void check_probability(double p, const char* who) {
    // (0, 1] is accepted; p == 1 degenerates to a deterministic outcome.
    if (!(p > 0.0) || !(p <= 1.0)) {
        throw std::domain_error(std::string(who) + ": probability must lie in (0, 1]");
    }
}

/// Inverse-transform geometric on {1, 2, ...} from a uniform u in (0, 1).
inline double geometric_icdf(double u, double p) {
    if (p >= 1.0) return 1.0;
    const double n = std::floor(std::log(u) / std::log1p(-p)) + 1.0;
    return n < 1.0 ? 1.0 : n;
}

inline void reject_perturbed_parameter(const Triple& p, const char* who) {
    if (p.perturbation) {
        throw std::invalid_argument(
            std::string(who) +
            ": sampler parameters with finite perturbations are unsupported");
    }
}

}  // namespace detail

/// Bernoulli draw, primal.
inline double sample_bernoulli(double p, RandomSource& rng) {
    detail::check_probability(p, "sample_bernoulli");
    return rng.next_double() < p ? 1.0 : 0.0;
}

/// Attempts until and including the first success, support {1, 2, ...}.
inline double sample_geometric(double p, RandomSource& rng) {
    detail::check_probability(p, "sample_geometric");
    return detail::geometric_icdf(rng.next_open01(), p);
}

/// Bernoulli draw with derivative coupling.
///
/// The sampled value itself never varies infinitesimally (delta = 0); the
/// dependence on p surfaces as a finite flip carried with weight:
///   p.delta > 0 and sample 0:  (+1, p.delta / (1 - p))
///   p.delta < 0 and sample 1:  (-1, -p.delta / p)
/// which makes the estimator average to d E[B] / dp = 1 times p.delta.
inline Triple sample_bernoulli(const Triple& p, RandomSource& rng) {
    detail::check_probability(p.value, "sample_bernoulli");
    detail::reject_perturbed_parameter(p, "sample_bernoulli");
    const double value = sample_bernoulli(p.value, rng);
    Triple out{value, 0.0, std::nullopt};
    if (p.delta > 0.0 && value == 0.0) {
        out.perturbation = Perturbation{+1.0, p.delta / (1.0 - p.value)};
    } else if (p.delta < 0.0 && value == 1.0) {
        out.perturbation = Perturbation{-1.0, -p.delta / p.value};
    }
    return out;
}

/// Geometric draw with derivative coupling.
///
/// For p.delta > 0 an earlier success is proposed: with n >= 2 attempts, a
/// uniformly chosen failure k in {1, ..., n-1} flips to a success, giving
/// jump k - n with weight p.delta * (n - 1) / (1 - p). For p.delta < 0 a
/// fresh geometric tail m is appended: jump +m with weight -p.delta / p.
inline Triple sample_geometric(const Triple& p, RandomSource& rng) {
    detail::check_probability(p.value, "sample_geometric");
    detail::reject_perturbed_parameter(p, "sample_geometric");
    const double n = sample_geometric(p.value, rng);
    Triple out{n, 0.0, std::nullopt};
    if (p.delta > 0.0) {
        if (n >= 2.0) {
            const auto span = static_cast<std::uint64_t>(n - 1.0);
            const double k = 1.0 + static_cast<double>(rng.aux_below(span));
            out.perturbation =
                Perturbation{k - n, p.delta * (n - 1.0) / (1.0 - p.value)};
        }
    } else if (p.delta < 0.0) {
        const double m = detail::geometric_icdf(rng.aux_open01(), p.value);
        out.perturbation = Perturbation{+m, -p.delta / p.value};
    }
    return out;
}

}  // namespace stochad

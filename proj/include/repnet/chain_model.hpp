#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "stochad/triple.hpp"

namespace repnet {

inline constexpr double default_speed_of_light_km_s = 200000.0;

/// A node's quantum memory; infinite coherence time disables decoherence.
struct NodeSpec {
    double coherence_time_s = std::numeric_limits<double>::infinity();
};

/// Elementary link producing Werner pairs with fixed fidelity; the success
/// probability follows from fiber attenuation, p = 10^(-gamma L / 10).
struct FixedWernerLink {
    double fidelity = 0.99;
    double attenuation_db_per_km = 0.2;
};

/// Single-click entanglement generation: p = 2 alpha 10^(-gamma L / 10) and
/// initial Werner parameter 1 - 3 alpha / 4.
struct SingleClickLink {
    double bright_state = 0.05;
    double attenuation_db_per_km = 0.2;
};

/// Link with explicitly given success probability and Werner parameter.
struct DirectLink {
    double success_prob = 1.0;
    double werner = 1.0;
};

using LinkModel = std::variant<FixedWernerLink, SingleClickLink, DirectLink>;

struct LinkSpec {
    double length_km = 0.0;
    LinkModel model;
};

/// Static description of one repeater chain: N nodes, N - 1 links.
struct ChainSpec {
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    double speed_of_light_km_s = default_speed_of_light_km_s;

    std::size_t n_nodes() const { return nodes.size(); }
    std::size_t n_links() const { return links.size(); }

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Pointwise physics. The kernels are templated on the scalar so the same
// formulas serve primal (double) and differentiated (stochad::Triple) runs.
// ---------------------------------------------------------------------------

/// Fiber transmission 10^(-gamma L / 10) for attenuation gamma in dB/km.
template <class S>
S transmission(double gamma_db_per_km, const S& length_km) {
    return stochad::exp10_of(stochad::scale(length_km, -gamma_db_per_km / 10.0));
}

template <class S>
S single_click_success(const S& alpha, double gamma_db_per_km, const S& length_km) {
    return stochad::scale(alpha, 2.0) * transmission(gamma_db_per_km, length_km);
}

template <class S>
S single_click_werner(const S& alpha) {
    return stochad::shift(stochad::scale(alpha, -0.75), 1.0);
}

inline double werner_from_fidelity(double fidelity) { return (4.0 * fidelity - 1.0) / 3.0; }
inline double fidelity_from_werner(double werner) { return (1.0 + 3.0 * werner) / 4.0; }

/// Duration of one entanglement attempt, L / c.
inline double attempt_duration(const LinkSpec& link, double speed_of_light_km_s) {
    if (!(speed_of_light_km_s > 0.0)) {
        throw std::invalid_argument("attempt_duration: speed of light must be > 0");
    }
    return link.length_km / speed_of_light_km_s;
}

/// Per-attempt success probability of a link. Throws if the result underflows
/// to zero (the link is too long to ever succeed numerically).
double success_probability(const LinkSpec& link);

/// Werner parameter of a freshly generated pair on this link.
double initial_werner(const LinkSpec& link);

/// Depolarizing storage noise: w -> w exp(-t / T).
inline double decohere(double werner, double storage_time_s, double coherence_time_s) {
    if (storage_time_s < 0.0) throw std::invalid_argument("decohere: negative storage time");
    if (!(coherence_time_s > 0.0)) throw std::invalid_argument("decohere: coherence time must be > 0");
    if (std::isinf(coherence_time_s) || storage_time_s == 0.0) return werner;
    return werner * std::exp(-storage_time_s / coherence_time_s);
}

/// Entanglement swapping multiplies Werner parameters.
inline double swap_werner(double w_a, double w_b) { return w_a * w_b; }

}  // namespace repnet

#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace repnet {

/// Post-hoc analysis of utility-versus-repeater-count data: a floored
/// logistic fit f(N) = max(c1 / (1 + exp(-c2 (N - c3))) + c4, c5) with c5
/// pinned to the N = 0 utility, plus the derived quantities.
struct ScalingFit {
    std::array<double, 5> c{};
    bool converged = false;
    double residual_rms = 0.0;
    std::optional<int> n_min;                       // smallest N beating 1.03 x f(0); none if flat
    std::vector<std::pair<double, double>> n_suff;  // (delta, real-valued N_suff)
    double skr_best = 0.0;

    double fitted(double n) const;
};

/// Fit the scaling curve. `data` holds (N, utility) pairs with at least 6
/// distinct N values including N = 0; throws std::invalid_argument otherwise.
/// A non-converged least-squares fit is reported, not thrown.
ScalingFit analyze_scaling(const std::vector<std::pair<int, double>>& data,
                           const std::vector<double>& deltas);

}  // namespace repnet

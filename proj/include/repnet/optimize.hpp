#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "repnet/chain_sim.hpp"

namespace repnet {

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

/// Bias-corrected Adam state; adam_step moves parameters against the gradient
/// (minimization; negate the objective gradient to maximize).
struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    std::int64_t step_count = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;

    void reset(std::size_t dim) {
        step_count = 0;
        first_moment.assign(dim, 0.0);
        second_moment.assign(dim, 0.0);
    }
};

void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grad);

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

enum class FdScheme { Forward, Backward, Central };

struct FiniteDiffResult {
    double estimate = 0.0;
    double std_error = 0.0;
    double epsilon = 0.0;
    FdScheme scheme = FdScheme::Central;
};

struct NoisyValue {
    double value = 0.0;
    double std_error = 0.0;
};

/// Difference quotient of a noisy evaluator. Central uses x +- eps/2; forward
/// and backward shift that stencil by +-eps/2. The reported standard error is
/// sqrt(se_hi^2 + se_lo^2) / |eps|, which diverges as eps -> 0.
FiniteDiffResult finite_difference(const std::function<NoisyValue(double)>& f, double x,
                                   double eps, FdScheme scheme);

// ---------------------------------------------------------------------------
// Root of a noisy derivative by unweighted linear fit
// ---------------------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
    double root = 0.0;  // -intercept / slope
};

/// Least-squares line through (x_i, y_i) and its root. Throws
/// std::invalid_argument on a degenerate grid (fewer than 2 distinct x) and
/// std::runtime_error when the slope is not significant (|slope| <= 2 SE).
/// The plain fit is unweighted; pass per-point standard errors to weight by
/// 1/se^2 instead.
LineFit derivative_root_by_linear_fit(const std::vector<double>& x, const std::vector<double>& y);
LineFit derivative_root_by_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                                      const std::vector<double>& se);

// ---------------------------------------------------------------------------
// Annealing schedule
// ---------------------------------------------------------------------------

struct AnnealSchedule {
    double t0 = 10.0;
    double decay = 0.8;
    int epochs = 25;
    int iters_per_epoch = 15;

    /// Temperature during epoch i = 1..epochs: t0 * decay^i.
    double temperature(int epoch) const;

    void validate() const {
        if (!(t0 > 0.0)) throw std::invalid_argument("schedule: t0 must be > 0");
        if (!(decay > 0.0) || !(decay < 1.0)) {
            throw std::invalid_argument("schedule: decay must lie in (0, 1)");
        }
        if (epochs < 1 || iters_per_epoch < 1) {
            throw std::invalid_argument("schedule: epochs and iters_per_epoch must be >= 1");
        }
    }
};

// ---------------------------------------------------------------------------
// Two-phase bright-state optimization
// ---------------------------------------------------------------------------

struct BrightStateOptions {
    double grid_min = 0.005;
    double grid_max = 0.15;
    int grid_points = 30;
    std::int64_t grid_samples = 10000;

    int iterations = 100;
    std::int64_t iteration_samples = 10000;
    double learning_rate = 0.002;
    bool weighted_fit = false;  // weight the phase-1 fit by the gradient SEs

    double alpha_min = 1e-4;
    double alpha_max = 1.0 - 1e-4;

    std::int64_t final_samples = 1000000;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct BrightStateTraceRow {
    int phase = 0;       // 1 = grid, 2 = gradient descent
    int iteration = 0;   // grid index or Adam iteration
    std::vector<double> alphas;
    double skr = 0.0;
    double skr_se = 0.0;
    double grad_norm = 0.0;  // |dSKR/dalpha| (phase 1) or gradient 2-norm
};

struct BrightStateResult {
    std::vector<double> alphas;
    SkrEstimate skr;            // independent final evaluation
    double phase1_root = 0.0;
    bool used_fallback = false; // grid argmax instead of the fit root
    std::vector<BrightStateTraceRow> trace;
};

/// Phase 1 estimates dSKR/dalpha on a uniform-alpha grid and locates the root
/// by linear fit; phase 2 runs Adam over the per-link alpha vector from that
/// start. All links must be single-click.
BrightStateResult optimize_bright_states(const ChainSpec& base, Protocol protocol,
                                         const MultiShotConfig& cfg,
                                         const BrightStateOptions& options);

/// Copy of `base` with the given per-link bright-state parameters.
ChainSpec with_bright_states(const ChainSpec& base, const std::vector<double>& alphas);

}  // namespace repnet

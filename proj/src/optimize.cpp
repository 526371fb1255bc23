#include "repnet/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace repnet {

void adam_step(AdamState& state, std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != grad.size()) {
        throw std::invalid_argument("adam_step: parameter/gradient dimension mismatch");
    }
    if (state.first_moment.size() != params.size()) state.reset(params.size());

    ++state.step_count;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * grad[i];
        state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * grad[i] * grad[i];
        const double m_hat = state.first_moment[i] / bc1;
        const double v_hat = state.second_moment[i] / bc2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

FiniteDiffResult finite_difference(const std::function<NoisyValue(double)>& f, double x,
                                   double eps, FdScheme scheme) {
    if (eps == 0.0) throw std::invalid_argument("finite_difference: eps must be nonzero");
    double shift = 0.0;
    if (scheme == FdScheme::Forward) shift = eps / 2.0;
    if (scheme == FdScheme::Backward) shift = -eps / 2.0;
    const NoisyValue hi = f(x + shift + eps / 2.0);
    const NoisyValue lo = f(x + shift - eps / 2.0);
    FiniteDiffResult out;
    out.estimate = (hi.value - lo.value) / eps;
    out.std_error = std::sqrt(hi.std_error * hi.std_error + lo.std_error * lo.std_error) /
                    std::fabs(eps);
    out.epsilon = eps;
    out.scheme = scheme;
    return out;
}

namespace {

LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& weight) {
    const std::size_t m = x.size();
    if (m < 2 || y.size() != m) {
        throw std::invalid_argument("linear fit: need at least 2 (x, y) points");
    }
    double w_total = 0.0, x_mean = 0.0, y_mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        w_total += weight[i];
        x_mean += weight[i] * x[i];
        y_mean += weight[i] * y[i];
    }
    x_mean /= w_total;
    y_mean /= w_total;

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += weight[i] * (x[i] - x_mean) * (x[i] - x_mean);
        sxy += weight[i] * (x[i] - x_mean) * (y[i] - y_mean);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear fit: degenerate grid (all x equal)");

    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = y_mean - fit.slope * x_mean;

    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        rss += weight[i] * r * r;
    }
    const double sigma2 = m > 2 ? rss / static_cast<double>(m - 2) : 0.0;
    fit.slope_se = std::sqrt(sigma2 / sxx);
    fit.intercept_se = std::sqrt(sigma2 * (1.0 / w_total + x_mean * x_mean / sxx));

    if (!(std::fabs(fit.slope) > 2.0 * fit.slope_se)) {
        throw std::runtime_error("linear fit: slope not significantly nonzero");
    }
    fit.root = -fit.intercept / fit.slope;
    return fit;
}

}  // namespace

LineFit derivative_root_by_linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    return weighted_line_fit(x, y, std::vector<double>(x.size(), 1.0));
}

LineFit derivative_root_by_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                                      const std::vector<double>& se) {
    if (se.size() != x.size()) {
        throw std::invalid_argument("linear fit: one standard error per point required");
    }
    std::vector<double> weight(se.size());
    for (std::size_t i = 0; i < se.size(); ++i) {
        if (!(se[i] > 0.0)) throw std::invalid_argument("linear fit: standard errors must be > 0");
        weight[i] = 1.0 / (se[i] * se[i]);
    }
    return weighted_line_fit(x, y, weight);
}

double AnnealSchedule::temperature(int epoch) const {
    return t0 * std::pow(decay, static_cast<double>(epoch));
}

ChainSpec with_bright_states(const ChainSpec& base, const std::vector<double>& alphas) {
    if (alphas.size() != base.links.size()) {
        throw std::invalid_argument("with_bright_states: one alpha per link required");
    }
    ChainSpec out = base;
    for (std::size_t i = 0; i < out.links.size(); ++i) {
        auto* sc = std::get_if<SingleClickLink>(&out.links[i].model);
        if (!sc) {
            throw std::invalid_argument("with_bright_states: link " + std::to_string(i) +
                                        " is not single-click");
        }
        sc->bright_state = alphas[i];
    }
    return out;
}

BrightStateResult optimize_bright_states(const ChainSpec& base, Protocol protocol,
                                         const MultiShotConfig& cfg,
                                         const BrightStateOptions& options) {
    base.validate();
    const std::size_t n_links = base.links.size();
    for (std::size_t i = 0; i < n_links; ++i) {
        if (!std::holds_alternative<SingleClickLink>(base.links[i].model)) {
            throw std::invalid_argument("optimize_bright_states: all links must be single-click");
        }
    }
    if (options.grid_points < 2) {
        throw std::invalid_argument("optimize_bright_states: need at least 2 grid points");
    }

    BrightStateResult result;
    const auto clamp_alpha = [&](double a) {
        return std::clamp(a, options.alpha_min, options.alpha_max);
    };

    // Phase 1: uniform alpha, derivative along the all-ones direction on a
    // grid, root by linear fit. The SKR estimates come out of the same runs
    // and back the fallback (grid argmax) when the root is unusable.
    std::vector<double> grid(static_cast<std::size_t>(options.grid_points));
    std::vector<double> grid_deriv(grid.size());
    std::vector<double> grid_deriv_se(grid.size());
    std::vector<double> grid_skr(grid.size());
    const double step = (options.grid_max - options.grid_min) /
                        static_cast<double>(options.grid_points - 1);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double alpha = options.grid_min + step * static_cast<double>(j);
        grid[j] = alpha;
        const ChainSpec spec = with_bright_states(base, std::vector<double>(n_links, alpha));
        SamplePlan plan;
        plan.n_samples = options.grid_samples;
        plan.seed = options.seed;
        plan.stream = stochad::derive_stream(1, j);
        plan.threads = options.threads;
        const auto g = skr_gradient(spec, protocol, cfg, SeedUniformBrightState{}, plan);
        grid_deriv[j] = g.gradient;
        grid_deriv_se[j] = g.std_error;
        grid_skr[j] = g.skr.skr;
        result.trace.push_back({1, static_cast<int>(j), std::vector<double>(n_links, alpha),
                                g.skr.skr, g.skr.skr_std_error, std::fabs(g.gradient)});
    }

    if (options.weighted_fit) {
        // clamped grid points report an exact-zero gradient with zero SE;
        // down-weight them to the least informative level instead
        const double worst = *std::max_element(grid_deriv_se.begin(), grid_deriv_se.end());
        for (auto& se : grid_deriv_se) {
            if (!(se > 0.0)) se = worst > 0.0 ? worst : 1.0;
        }
    }

    double start_alpha;
    try {
        const LineFit fit = options.weighted_fit
                                ? derivative_root_by_linear_fit(grid, grid_deriv, grid_deriv_se)
                                : derivative_root_by_linear_fit(grid, grid_deriv);
        result.phase1_root = fit.root;
        if (fit.root > 0.0 && fit.root < 1.0) {
            start_alpha = clamp_alpha(fit.root);
        } else {
            result.used_fallback = true;
            start_alpha = grid[static_cast<std::size_t>(
                std::max_element(grid_skr.begin(), grid_skr.end()) - grid_skr.begin())];
        }
    } catch (const std::exception&) {
        result.used_fallback = true;
        start_alpha = grid[static_cast<std::size_t>(
            std::max_element(grid_skr.begin(), grid_skr.end()) - grid_skr.begin())];
        result.phase1_root = start_alpha;
    }

    // Phase 2: Adam over the per-link alpha vector, maximizing SKR.
    std::vector<double> alphas(n_links, start_alpha);
    AdamState adam;
    adam.learning_rate = options.learning_rate;
    adam.reset(n_links);
    for (int iter = 0; iter < options.iterations; ++iter) {
        const ChainSpec spec = with_bright_states(base, alphas);
        std::vector<double> grad(n_links, 0.0);
        double skr_sum = 0.0, se_sum = 0.0;
        for (std::size_t i = 0; i < n_links; ++i) {
            SamplePlan plan;
            plan.n_samples = options.iteration_samples;
            plan.seed = options.seed;
            plan.stream = stochad::derive_stream(2, static_cast<std::uint64_t>(iter) * n_links + i);
            plan.threads = options.threads;
            const auto g = skr_gradient(spec, protocol, cfg, SeedBrightState{i}, plan);
            grad[i] = -g.gradient;  // minimize the negated objective
            skr_sum += g.skr.skr;
            se_sum += g.skr.skr_std_error;
        }
        adam_step(adam, alphas, grad);
        for (auto& a : alphas) a = clamp_alpha(a);

        double norm = 0.0;
        for (const double g : grad) norm += g * g;
        result.trace.push_back({2, iter, alphas, skr_sum / static_cast<double>(n_links),
                                se_sum / static_cast<double>(n_links), std::sqrt(norm)});
    }

    result.alphas = alphas;
    SamplePlan final_plan;
    final_plan.n_samples = options.final_samples;
    final_plan.seed = options.seed;
    final_plan.stream = stochad::derive_stream(3, 0);
    final_plan.threads = options.threads;
    result.skr = estimate_skr(with_bright_states(base, alphas), protocol, cfg, final_plan);
    return result;
}

}  // namespace repnet

#include "repnet/scaling_fit.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace repnet {

namespace {

double logistic_model(const std::array<double, 4>& p, double c5, double n) {
    const double rise = p[0] / (1.0 + std::exp(-p[1] * (n - p[2]))) + p[3];
    return std::max(rise, c5);
}

double rss_of(const std::array<double, 4>& p, double c5,
              const std::vector<std::pair<int, double>>& data) {
    double rss = 0.0;
    for (const auto& [n, y] : data) {
        const double r = logistic_model(p, c5, static_cast<double>(n)) - y;
        rss += r * r;
    }
    return rss;
}

// Solve A x = b for a 4x4 system by Gaussian elimination with partial
// pivoting; returns false when the system is singular.
bool solve4(std::array<double, 16> a, std::array<double, 4> b, std::array<double, 4>& x) {
    constexpr int n = 4;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int row = col + 1; row < n; ++row) {
            if (std::fabs(a[row * n + col]) > std::fabs(a[pivot * n + col])) pivot = row;
        }
        if (std::fabs(a[pivot * n + col]) < 1e-300) return false;
        if (pivot != col) {
            for (int k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
            std::swap(b[col], b[pivot]);
        }
        for (int row = col + 1; row < n; ++row) {
            const double f = a[row * n + col] / a[col * n + col];
            for (int k = col; k < n; ++k) a[row * n + k] -= f * a[col * n + k];
            b[row] -= f * b[col];
        }
    }
    for (int row = n - 1; row >= 0; --row) {
        double s = b[row];
        for (int k = row + 1; k < n; ++k) s -= a[row * n + k] * x[k];
        x[row] = s / a[row * n + row];
    }
    return true;
}

// Levenberg-Marquardt on (c1, c2, c3, c4) with a numeric Jacobian.
bool fit_logistic(std::array<double, 4>& p, double c5,
                  const std::vector<std::pair<int, double>>& data) {
    const std::size_t m = data.size();
    double lambda = 1e-3;
    double rss = rss_of(p, c5, data);

    for (int iter = 0; iter < 400; ++iter) {
        // residuals and Jacobian at p
        std::vector<double> res(m);
        std::vector<std::array<double, 4>> jac(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double n = static_cast<double>(data[i].first);
            res[i] = logistic_model(p, c5, n) - data[i].second;
            for (int k = 0; k < 4; ++k) {
                const double h = std::max(1e-7, 1e-7 * std::fabs(p[k]));
                auto hi = p, lo = p;
                hi[k] += h;
                lo[k] -= h;
                jac[i][k] = (logistic_model(hi, c5, n) - logistic_model(lo, c5, n)) / (2.0 * h);
            }
        }

        std::array<double, 16> jtj{};
        std::array<double, 4> jtr{};
        for (std::size_t i = 0; i < m; ++i) {
            for (int a = 0; a < 4; ++a) {
                jtr[a] += jac[i][a] * res[i];
                for (int b = 0; b < 4; ++b) jtj[a * 4 + b] += jac[i][a] * jac[i][b];
            }
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
            auto damped = jtj;
            for (int k = 0; k < 4; ++k) damped[k * 4 + k] += lambda * std::max(jtj[k * 4 + k], 1e-12);
            std::array<double, 4> delta{};
            std::array<double, 4> rhs{};
            for (int k = 0; k < 4; ++k) rhs[k] = -jtr[k];
            if (!solve4(damped, rhs, delta)) {
                lambda *= 10.0;
                continue;
            }
            auto trial = p;
            for (int k = 0; k < 4; ++k) trial[k] += delta[k];
            const double trial_rss = rss_of(trial, c5, data);
            if (trial_rss < rss) {
                double step = 0.0;
                for (int k = 0; k < 4; ++k) step += delta[k] * delta[k];
                p = trial;
                const double improvement = rss - trial_rss;
                rss = trial_rss;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (step < 1e-20 || improvement < 1e-15 * (rss + 1e-30)) return true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) return iter > 0;  // stalled; accept if any progress was made
    }
    return true;
}

}  // namespace

double ScalingFit::fitted(double n) const {
    return logistic_model({c[0], c[1], c[2], c[3]}, c[4], n);
}

ScalingFit analyze_scaling(const std::vector<std::pair<int, double>>& data,
                           const std::vector<double>& deltas) {
    std::set<int> distinct;
    for (const auto& [n, y] : data) {
        if (n < 0) throw std::invalid_argument("analyze_scaling: negative N");
        (void)y;
        distinct.insert(n);
    }
    if (distinct.size() < 6 || !distinct.count(0)) {
        throw std::invalid_argument(
            "analyze_scaling: need at least 6 distinct N values including N = 0");
    }

    // c5 pinned to the measured N = 0 utility (mean over duplicates).
    double u0 = 0.0;
    int u0_count = 0;
    for (const auto& [n, y] : data) {
        if (n == 0) {
            u0 += y;
            ++u0_count;
        }
    }
    u0 /= static_cast<double>(u0_count);

    ScalingFit out;
    out.c[4] = u0;
    for (const auto& [n, y] : data) {
        (void)n;
        out.skr_best = std::max(out.skr_best, y);
    }

    // smallest N whose measured utility clears the statistical threshold
    std::vector<std::pair<int, double>> sorted = data;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [n, y] : sorted) {
        if (y > 1.03 * u0) {
            out.n_min = n;
            break;
        }
    }

    // initial parameter guesses from the curve shape
    const double u_max = out.skr_best;
    std::array<double, 4> p{};
    p[0] = std::max(u_max - u0, 1e-12);  // c1: rise height
    p[3] = u0;                           // c4: pre-floor offset
    double half_n = 1.0;
    for (const auto& [n, y] : sorted) {
        if (y > u0 + 0.5 * (u_max - u0)) {
            half_n = static_cast<double>(n);
            break;
        }
    }
    p[2] = half_n;  // c3: midpoint
    p[1] = 1.0;     // c2: steepness

    out.converged = fit_logistic(p, u0, data);
    out.c[0] = p[0];
    out.c[1] = p[1];
    out.c[2] = p[2];
    out.c[3] = p[3];
    out.residual_rms = std::sqrt(rss_of(p, u0, data) / static_cast<double>(data.size()));

    // N_suff(delta): smallest real N within delta of the fit's supremum
    const double sup = p[0] + p[3];
    for (const double delta : deltas) {
        double n_suff = 0.0;
        if (sup > 0.0 && p[0] > 0.0 && p[1] > 0.0) {
            const double target = (1.0 - delta) * sup - p[3];
            if (target > 0.0) {
                const double q = p[0] / target - 1.0;
                if (q > 0.0) n_suff = std::max(0.0, p[2] - std::log(q) / p[1]);
            }
        }
        out.n_suff.emplace_back(delta, n_suff);
    }
    return out;
}

}  // namespace repnet

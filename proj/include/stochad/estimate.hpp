#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "stochad/random.hpp"
#include "stochad/triple.hpp"

namespace stochad {

/// Monte Carlo estimate of a program's output and its derivative.
struct EstimatorResult {
    double mean = 0.0;
    double std_error = 0.0;
    double derivative_mean = 0.0;
    double derivative_std_error = 0.0;
    std::int64_t n_samples = 0;
};

namespace detail {

struct MeanVar {
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
    }

    void merge(const MeanVar& other) {
        sum += other.sum;
        sum_sq += other.sum_sq;
    }

    double mean(std::int64_t n) const { return sum / static_cast<double>(n); }

    double std_error(std::int64_t n) const {
        if (n < 2) return 0.0;
        const double m = mean(n);
        double var = (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        if (var < 0.0) var = 0.0;
        return std::sqrt(var / static_cast<double>(n));
    }
};

/// Chunked parallel loop; partials are merged in chunk order so the result
/// depends only on the thread count, not on scheduling.
template <class Partial, class Body>
Partial parallel_reduce(std::int64_t n, int threads, Body&& body) {
    if (threads < 1) threads = 1;
    if (threads == 1 || n < 2 * threads) {
        Partial acc{};
        for (std::int64_t i = 0; i < n; ++i) body(acc, i);
        return acc;
    }
    std::vector<Partial> partials(static_cast<std::size_t>(threads));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    const std::int64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::int64_t lo = static_cast<std::int64_t>(t) * chunk;
        const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n);
        workers.emplace_back([&, t, lo, hi] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) body(partials[static_cast<std::size_t>(t)], i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    Partial acc{};
    for (const auto& p : partials) acc.merge(p);
    return acc;
}

}  // namespace detail

/// Run `program` n_samples times on independent streams (master_seed, i) and
/// return the sample means and standard errors of the output value and of the
/// derivative estimator delta + weight * jump.
///
/// Deterministic for a given master_seed in single-threaded mode; with more
/// threads the per-sample streams are unchanged and only the floating-point
/// reduction order may differ.
template <class Program>
EstimatorResult estimate(Program&& program, double p, std::int64_t n_samples,
                         std::uint64_t master_seed, int threads = 1) {
    if (n_samples < 2) throw std::invalid_argument("estimate: n_samples must be >= 2");

    struct Partial {
        detail::MeanVar value;
        detail::MeanVar deriv;

        void merge(const Partial& other) {
            value.merge(other.value);
            deriv.merge(other.deriv);
        }
    };

    const Partial acc = detail::parallel_reduce<Partial>(
        n_samples, threads, [&](Partial& part, std::int64_t i) {
            RandomSource rng(master_seed, static_cast<std::uint64_t>(i));
            Triple out;
            try {
                out = program(make_input(p), rng);
            } catch (const std::exception& e) {
                throw std::runtime_error("estimate: sample " + std::to_string(i) +
                                         " failed: " + e.what());
            }
            part.value.add(out.value);
            part.deriv.add(derivative_estimate(out));
        });

    EstimatorResult result;
    result.n_samples = n_samples;
    result.mean = acc.value.mean(n_samples);
    result.std_error = acc.value.std_error(n_samples);
    result.derivative_mean = acc.deriv.mean(n_samples);
    result.derivative_std_error = acc.deriv.std_error(n_samples);
    return result;
}

}  // namespace stochad

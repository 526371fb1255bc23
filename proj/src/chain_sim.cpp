#include "repnet/chain_sim.hpp"

#include <array>

namespace repnet {

namespace {

using stochad::make_const;
using stochad::make_input;

SimLink<Triple> lower_link_const(const LinkSpec& link, double c) {
    return {make_const(attempt_duration(link, c)), make_const(success_probability(link)),
            make_const(initial_werner(link))};
}

SimLink<Triple> lower_single_click(const Triple& alpha, const SingleClickLink& m,
                                   const Triple& length, double c) {
    SimLink<Triple> out;
    out.attempt_duration = stochad::scale(length, 1.0 / c);
    out.success_prob = single_click_success(alpha, m.attenuation_db_per_km, length);
    out.initial_werner = single_click_werner(alpha);
    if (stochad::value_of(out.success_prob) <= 0.0) {
        throw std::domain_error("success_probability: underflowed to zero; reduce the link length");
    }
    return out;
}

SimLink<Triple> lower_with_length(const LinkSpec& link, const Triple& length, double c) {
    SimLink<Triple> out;
    out.attempt_duration = stochad::scale(length, 1.0 / c);
    if (const auto* fw = std::get_if<FixedWernerLink>(&link.model)) {
        out.success_prob = transmission(fw->attenuation_db_per_km, length);
        out.initial_werner = make_const(werner_from_fidelity(fw->fidelity));
    } else if (const auto* sc = std::get_if<SingleClickLink>(&link.model)) {
        out.success_prob = single_click_success(make_const(sc->bright_state),
                                                sc->attenuation_db_per_km, length);
        out.initial_werner = make_const(single_click_werner(sc->bright_state));
    } else {
        const auto& d = std::get<DirectLink>(link.model);
        out.success_prob = make_const(d.success_prob);
        out.initial_werner = make_const(d.werner);
    }
    if (stochad::value_of(out.success_prob) <= 0.0) {
        throw std::domain_error("success_probability: underflowed to zero; reduce the link length");
    }
    return out;
}

double bright_state_of(const ChainSpec& spec, std::size_t link, const char* who) {
    const auto* sc = std::get_if<SingleClickLink>(&spec.links.at(link).model);
    if (!sc) {
        throw std::invalid_argument(std::string(who) + ": link " + std::to_string(link) +
                                    " is not a single-click link");
    }
    return sc->bright_state;
}

struct SeededLowering {
    const ChainSpec& spec;
    SimChain<Triple>& out;

    void operator()(const SeedBrightState& sel) const {
        const double alpha = bright_state_of(spec, sel.link, "skr_gradient");
        const auto& m = std::get<SingleClickLink>(spec.links[sel.link].model);
        out.links[sel.link] = lower_single_click(make_input(alpha), m,
                                                 make_const(spec.links[sel.link].length_km),
                                                 spec.speed_of_light_km_s);
    }

    void operator()(const SeedUniformBrightState&) const {
        // Directional derivative along (1, 1, ..., 1): every link's bright
        // state is alpha_i + x with x the seeded offset.
        const Triple x = make_input(0.0);
        for (std::size_t i = 0; i < spec.links.size(); ++i) {
            const double alpha = bright_state_of(spec, i, "skr_gradient");
            const auto& m = std::get<SingleClickLink>(spec.links[i].model);
            out.links[i] = lower_single_click(stochad::shift(x, alpha), m,
                                              make_const(spec.links[i].length_km),
                                              spec.speed_of_light_km_s);
        }
    }

    void operator()(const SeedCoherenceTime& sel) const {
        const double t = spec.nodes.at(sel.node).coherence_time_s;
        out.coherence_times[sel.node] = make_input(t);
    }

    void operator()(const SeedLinkLength& sel) const {
        const Triple length = make_input(spec.links.at(sel.link).length_km);
        out.links[sel.link] =
            lower_with_length(spec.links[sel.link], length, spec.speed_of_light_km_s);
    }

    void operator()(const SeedNodePosition& sel) const {
        if (sel.node == 0 || sel.node + 1 >= spec.nodes.size()) {
            throw std::invalid_argument("skr_gradient: node position must be interior");
        }
        const Triple x = make_input(0.0);
        const std::size_t left = sel.node - 1;
        const std::size_t right = sel.node;
        const Triple l_left = stochad::shift(x, spec.links[left].length_km);
        const Triple l_right = stochad::shift(stochad::negate(x), spec.links[right].length_km);
        out.links[left] = lower_with_length(spec.links[left], l_left, spec.speed_of_light_km_s);
        out.links[right] = lower_with_length(spec.links[right], l_right, spec.speed_of_light_km_s);
    }
};

// Running sums for a K-dimensional sample vector and its second moments.
template <std::size_t K>
struct MomentAcc {
    std::array<double, K> sum{};
    std::array<double, K * K> cross{};
    std::int64_t n = 0;

    void add(const std::array<double, K>& x) {
        ++n;
        for (std::size_t i = 0; i < K; ++i) {
            sum[i] += x[i];
            for (std::size_t j = 0; j < K; ++j) cross[i * K + j] += x[i] * x[j];
        }
    }

    void merge(const MomentAcc& other) {
        n += other.n;
        for (std::size_t i = 0; i < K; ++i) sum[i] += other.sum[i];
        for (std::size_t i = 0; i < K * K; ++i) cross[i] += other.cross[i];
    }

    double mean(std::size_t i) const { return sum[i] / static_cast<double>(n); }

    // Sample covariance of components i and j.
    double cov(std::size_t i, std::size_t j) const {
        if (n < 2) return 0.0;
        const double c = (cross[i * K + j] - static_cast<double>(n) * mean(i) * mean(j)) /
                         static_cast<double>(n - 1);
        return c;
    }

    double se(std::size_t i) const {
        const double v = cov(i, i);
        return v > 0.0 ? std::sqrt(v / static_cast<double>(n)) : 0.0;
    }

    // Delta-method variance of g(x) with gradient j at the sample means.
    double var_of(const std::array<double, K>& j) const {
        double v = 0.0;
        for (std::size_t a = 0; a < K; ++a) {
            for (std::size_t b = 0; b < K; ++b) v += j[a] * cov(a, b) * j[b];
        }
        return v > 0.0 ? v / static_cast<double>(n) : 0.0;
    }
};

void check_plan(const SamplePlan& plan) {
    if (plan.n_samples < 2) throw std::invalid_argument("estimate: n_samples must be >= 2");
}

SkrEstimate skr_from_moments(const MomentAcc<2>& acc) {
    SkrEstimate est;
    est.n_samples = acc.n;
    est.mean_t_ent = acc.mean(0);
    est.mean_t_ent_se = acc.se(0);
    est.mean_werner = acc.mean(1);
    est.mean_werner_se = acc.se(1);
    est.qber = qber_from_werner(est.mean_werner);
    est.clamped = secret_fraction_clamped(est.mean_werner);
    const double r = secret_fraction(est.mean_werner);
    est.skr = r / est.mean_t_ent;
    const std::array<double, 2> grad = {-r / (est.mean_t_ent * est.mean_t_ent),
                                        secret_fraction_derivative(est.mean_werner) / est.mean_t_ent};
    est.skr_std_error = std::sqrt(acc.var_of(grad));
    return est;
}

}  // namespace

SimChain<double> lower_chain(const ChainSpec& spec, bool end_node_storage) {
    spec.validate();
    SimChain<double> out;
    out.end_node_storage = end_node_storage;
    out.links.reserve(spec.links.size());
    for (const auto& link : spec.links) {
        out.links.push_back({attempt_duration(link, spec.speed_of_light_km_s),
                             success_probability(link), initial_werner(link)});
    }
    out.coherence_times.reserve(spec.nodes.size());
    for (const auto& node : spec.nodes) out.coherence_times.push_back(node.coherence_time_s);
    return out;
}

SimChain<Triple> lower_chain_seeded(const ChainSpec& spec, const ParamSelector& selector,
                                    bool end_node_storage) {
    spec.validate();
    SimChain<Triple> out;
    out.end_node_storage = end_node_storage;
    out.links.reserve(spec.links.size());
    for (const auto& link : spec.links) {
        out.links.push_back(lower_link_const(link, spec.speed_of_light_km_s));
    }
    out.coherence_times.reserve(spec.nodes.size());
    for (const auto& node : spec.nodes) {
        // Infinite coherence times mark disabled memories; the simulator skips
        // their decay factors, so the carrier triple never enters arithmetic.
        out.coherence_times.push_back(Triple{node.coherence_time_s, 0.0, std::nullopt});
    }
    std::visit(SeededLowering{spec, out}, selector);
    return out;
}

SkrEstimate estimate_skr(const ChainSpec& spec, Protocol protocol, const MultiShotConfig& cfg,
                         const SamplePlan& plan, bool end_node_storage) {
    check_plan(plan);
    cfg.validate();
    const SimChain<double> chain = lower_chain(spec, end_node_storage);

    const auto acc = stochad::detail::parallel_reduce<MomentAcc<2>>(
        plan.n_samples, plan.threads, [&](MomentAcc<2>& part, std::int64_t i) {
            RandomSource rng(plan.seed, plan.stream + static_cast<std::uint64_t>(i));
            const auto sample = run_once(chain, protocol, cfg, rng);
            part.add({sample.t_ent, sample.werner});
        });

    return skr_from_moments(acc);
}

namespace {

// Shared by skr_gradient (bonus = 0) and the annealed placement objective
// SKR + bonus / mean(T_ent).
GradientEstimate gradient_from_triple_runs(const SimChain<Triple>& chain, Protocol protocol,
                                           const MultiShotConfig& cfg, double bonus,
                                           const SamplePlan& plan) {
    const auto acc = stochad::detail::parallel_reduce<MomentAcc<4>>(
        plan.n_samples, plan.threads, [&](MomentAcc<4>& part, std::int64_t i) {
            RandomSource rng(plan.seed, plan.stream + static_cast<std::uint64_t>(i));
            const auto sample = run_once(chain, protocol, cfg, rng);
            part.add({sample.t_ent.value, sample.werner.value,
                      stochad::derivative_estimate(sample.t_ent),
                      stochad::derivative_estimate(sample.werner)});
        });

    MomentAcc<2> primal;
    primal.n = acc.n;
    primal.sum = {acc.sum[0], acc.sum[1]};
    primal.cross = {acc.cross[0], acc.cross[1], acc.cross[4], acc.cross[5]};

    GradientEstimate out;
    out.skr = skr_from_moments(primal);
    out.derivative_t_ent = acc.mean(2);
    out.derivative_werner = acc.mean(3);
    out.clamped = out.skr.clamped;
    if (out.clamped && bonus == 0.0) return out;  // exact zero on the clamped branch

    const double t_bar = acc.mean(0);
    const double w_bar = acc.mean(1);
    const double d_t = acc.mean(2);
    const double d_w = acc.mean(3);
    // Clamped secret fraction contributes nothing, but the rate bonus still
    // has a well-defined derivative.
    const double r = secret_fraction(w_bar);
    const double rp = secret_fraction_derivative(w_bar);
    const double rpp = secret_fraction_second_derivative(w_bar);

    out.gradient = -(r + bonus) * d_t / (t_bar * t_bar) + rp * d_w / t_bar;
    const std::array<double, 4> jac = {
        2.0 * (r + bonus) * d_t / (t_bar * t_bar * t_bar) - rp * d_w / (t_bar * t_bar),
        -d_t * rp / (t_bar * t_bar) + rpp * d_w / t_bar,
        -(r + bonus) / (t_bar * t_bar),
        rp / t_bar,
    };
    out.std_error = std::sqrt(acc.var_of(jac));
    return out;
}

}  // namespace

GradientEstimate skr_gradient(const ChainSpec& spec, Protocol protocol, const MultiShotConfig& cfg,
                              const ParamSelector& selector, const SamplePlan& plan,
                              bool end_node_storage) {
    check_plan(plan);
    cfg.validate();

    // Derivatives with respect to a disabled (infinite) memory are exactly 0.
    if (const auto* ct = std::get_if<SeedCoherenceTime>(&selector)) {
        if (std::isinf(spec.nodes.at(ct->node).coherence_time_s)) {
            GradientEstimate out;
            out.skr = estimate_skr(spec, protocol, cfg, plan, end_node_storage);
            out.clamped = out.skr.clamped;
            return out;
        }
    }

    const SimChain<Triple> chain = lower_chain_seeded(spec, selector, end_node_storage);
    return gradient_from_triple_runs(chain, protocol, cfg, 0.0, plan);
}

GradientEstimate annealed_utility_gradient(const SimChain<Triple>& chain, Protocol protocol,
                                           const MultiShotConfig& cfg, double bonus,
                                           const SamplePlan& plan) {
    check_plan(plan);
    cfg.validate();
    return gradient_from_triple_runs(chain, protocol, cfg, bonus, plan);
}

std::vector<GradientEstimate> sensitivity(const ChainSpec& spec, Protocol protocol,
                                          const MultiShotConfig& cfg, const SamplePlan& plan,
                                          bool end_node_storage) {
    spec.validate();
    std::vector<GradientEstimate> out;
    out.reserve(spec.nodes.size());
    for (std::size_t n = 0; n < spec.nodes.size(); ++n) {
        out.push_back(skr_gradient(spec, protocol, cfg, SeedCoherenceTime{n}, plan,
                                   end_node_storage));
    }
    return out;
}

std::vector<SampleDump> dump_samples(const ChainSpec& spec, Protocol protocol,
                                     const MultiShotConfig& cfg, const SamplePlan& plan,
                                     bool end_node_storage) {
    check_plan(plan);
    cfg.validate();
    const SimChain<double> chain = lower_chain(spec, end_node_storage);
    std::vector<SampleDump> out;
    for (std::int64_t i = 0; i < plan.n_samples; ++i) {
        RandomSource rng(plan.seed, plan.stream + static_cast<std::uint64_t>(i));
        if (protocol == Protocol::Single) {
            const auto s = simulate_single_shot(chain, rng);
            out.push_back({i, s.t_ent, s.werner});
        } else {
            for (const auto& s : simulate_multi_shot(chain, cfg, rng)) {
                out.push_back({i, s.t_ent, s.werner});
            }
        }
    }
    return out;
}

}  // namespace repnet

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include "repnet/chain_model.hpp"
#include "repnet/skr.hpp"
#include "stochad/estimate.hpp"
#include "stochad/random.hpp"
#include "stochad/samplers.hpp"
#include "stochad/triple.hpp"

namespace repnet {

using stochad::RandomSource;
using stochad::Triple;

enum class Protocol { Single, Multi };

/// Sampling window of the multi-shot protocol: each Monte Carlo sample runs
/// the chain until `deliveries_per_sample` end-to-end states have been
/// produced and keeps those after the first `burn_in`.
struct MultiShotConfig {
    int deliveries_per_sample = 16;
    int burn_in = 4;

    void validate() const {
        if (deliveries_per_sample < 1) {
            throw std::invalid_argument("protocol: deliveries_per_sample must be >= 1");
        }
        if (burn_in < 0 || burn_in >= deliveries_per_sample) {
            throw std::invalid_argument("protocol: burn_in must lie in [0, deliveries_per_sample)");
        }
    }
};

// ---------------------------------------------------------------------------
// Lowered chain: per-link attempt duration, success probability and initial
// Werner parameter, plus per-node coherence times, all in the scalar type of
// the run (double for primal, stochad::Triple for derivative passes).
// ---------------------------------------------------------------------------

template <class S>
struct SimLink {
    S attempt_duration;
    S success_prob;
    S initial_werner;
};

template <class S>
struct SimChain {
    std::vector<SimLink<S>> links;
    std::vector<S> coherence_times;  // one per node, links.size() + 1 entries
    bool end_node_storage = true;
};

template <class S>
struct ChainSampleT {
    S t_ent;
    S werner;
};

using ChainSample = ChainSampleT<double>;

// Parameter selectors: which scalar of the chain a derivative pass seeds.
struct SeedBrightState { std::size_t link = 0; };
struct SeedUniformBrightState {};
struct SeedCoherenceTime { std::size_t node = 0; };
struct SeedLinkLength { std::size_t link = 0; };
/// Moves an interior node along the chain axis: link node-1 grows as the
/// seeded offset, link node shrinks by it.
struct SeedNodePosition { std::size_t node = 0; };

using ParamSelector = std::variant<SeedBrightState, SeedUniformBrightState,
                                   SeedCoherenceTime, SeedLinkLength, SeedNodePosition>;

SimChain<double> lower_chain(const ChainSpec& spec, bool end_node_storage = true);
SimChain<Triple> lower_chain_seeded(const ChainSpec& spec, const ParamSelector& selector,
                                    bool end_node_storage = true);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace detail {

// w *= exp(-storage / T), skipping disabled (infinite-T) memories.
template <class S>
void apply_decay(S& werner, const S& storage, const S& coherence_time, RandomSource& rng) {
    if (std::isinf(stochad::value_of(coherence_time))) return;
    const S factor = stochad::exp_of(stochad::negate(stochad::div(storage, coherence_time, rng)));
    werner = stochad::mul(werner, factor, rng);
}

}  // namespace detail

/// One round of the single-shot protocol: every link starts at time zero,
/// T_ent is the time the slowest link finishes, and the Werner parameter
/// collects the swap product plus storage decay at interior and end nodes.
template <class S>
ChainSampleT<S> simulate_single_shot(const SimChain<S>& chain, RandomSource& rng) {
    const std::size_t m = chain.links.size();
    std::vector<S> t(m);
    S t_ent{};
    for (std::size_t i = 0; i < m; ++i) {
        const S attempts = stochad::sample_geometric(chain.links[i].success_prob, rng);
        t[i] = stochad::mul(attempts, chain.links[i].attempt_duration, rng);
        t_ent = (i == 0) ? t[i] : stochad::smax(t_ent, t[i], rng);
    }

    S werner = chain.links[0].initial_werner;
    for (std::size_t i = 1; i < m; ++i) {
        werner = stochad::mul(werner, chain.links[i].initial_werner, rng);
    }
    for (std::size_t n = 1; n < m; ++n) {  // interior nodes
        const S gap = stochad::sabs(stochad::sub(t[n - 1], t[n], rng));
        detail::apply_decay(werner, gap, chain.coherence_times[n], rng);
    }
    if (chain.end_node_storage) {
        const S left = stochad::sub(t_ent, t[0], rng);
        detail::apply_decay(werner, left, chain.coherence_times[0], rng);
        const S right = stochad::sub(t_ent, t[m - 1], rng);
        detail::apply_decay(werner, right, chain.coherence_times[m], rng);
    }
    return {t_ent, werner};
}

/// Audit trail of one multi-shot run (primal values).
struct EventLog {
    struct LinkSuccess {
        int link;
        double start_time;
        double attempts;
        double success_time;
    };
    struct Swap {
        int node;
        double time;
        int left_node;
        int right_node;
    };
    struct Delivery {
        double time;
        double t_ent;
        double werner;
    };
    std::vector<LinkSuccess> successes;
    std::vector<Swap> swaps;
    std::vector<Delivery> deliveries;
};

namespace detail {

/// Attempt counts for the multi-shot engine, keyed by (link, sequence index)
/// on counter-based streams. The j-th draw of link i has the same value in
/// every execution that shares the (seed, stream) pair, which is what lets a
/// counterfactual re-run replay all randomness except one overridden draw.
class LinkDraws {
  public:
    LinkDraws(std::uint64_t seed, std::uint64_t stream, std::size_t n_links)
        : seed_(seed) {
        link_streams_.reserve(n_links);
        for (std::size_t i = 0; i < n_links; ++i) {
            link_streams_.push_back(stochad::derive_stream(stream, 0xD00 + i));
        }
    }

    double operator()(int link, int seq, double p) const {
        if (override_ && override_->link == link && override_->seq == seq) {
            return override_->value;
        }
        RandomSource rng(seed_, stochad::derive_stream(link_streams_[static_cast<std::size_t>(link)],
                                                       static_cast<std::uint64_t>(seq)));
        return stochad::detail::geometric_icdf(rng.next_open01(), p);
    }

    void set_override(int link, int seq, double value) { override_ = Override{link, seq, value}; }

  private:
    struct Override {
        int link;
        int seq;
        double value;
    };
    std::uint64_t seed_;
    std::vector<std::uint64_t> link_streams_;
    std::optional<Override> override_;
};

/// A sampler invocation whose distribution depends on the differentiation
/// parameter; weight follows the geometric coupling for the sign of d p/d x.
struct CouplingProposal {
    int link;
    int seq;
    double count;
    double weight;
};

/// Event-driven multi-shot (concurrent) swap-ASAP engine. Links restart the
/// moment both their qubit slots are free; interior nodes swap the instant
/// they hold entanglement on both sides; a segment spanning the whole chain
/// is delivered and the end slots freed. Returns deliveries after burn-in as
/// (time since previous delivery, werner).
///
/// Event ordering branches on primal times only. `pick_tie` resolves exact
/// ties among pending successes: index 0 (ascending link order) for primal
/// runs, uniform for derivative passes so that kinked expectations at
/// symmetric configurations report the symmetrized derivative. `ops_rng` is
/// consulted only for those tie draws; the triple algebra below never prunes
/// because sampler outputs carry no perturbations here.
template <class S, class Draws, class TiePick>
std::vector<ChainSampleT<S>> multi_shot_events(const SimChain<S>& chain,
                                               const MultiShotConfig& cfg, const Draws& draw,
                                               TiePick&& pick_tie, RandomSource& ops_rng,
                                               EventLog* log,
                                               std::vector<CouplingProposal>* proposals) {
    cfg.validate();
    const int n_links = static_cast<int>(chain.links.size());
    const int n_nodes = n_links + 1;
    const int last_node = n_nodes - 1;
    RandomSource& rng = ops_rng;

    struct Segment {
        int left = -1;
        int right = -1;
        S werner{};
        S left_time{};
        S right_time{};
        bool active = false;
    };

    struct Pending {
        bool scheduled = false;
        double time = 0.0;  // primal, for event ordering
        S time_s{};
        double attempts = 0.0;
        double start = 0.0;
    };

    std::vector<Segment> segments(static_cast<std::size_t>(n_links));
    std::vector<int> free_ids;
    for (int i = n_links - 1; i >= 0; --i) free_ids.push_back(i);

    // left_slot[n]: segment whose right end sits at node n (via link n-1);
    // right_slot[n]: segment whose left end sits at node n (via link n).
    std::vector<int> left_slot(static_cast<std::size_t>(n_nodes), -1);
    std::vector<int> right_slot(static_cast<std::size_t>(n_nodes), -1);
    std::vector<Pending> pending(static_cast<std::size_t>(n_links));
    std::vector<int> draw_seq(static_cast<std::size_t>(n_links), 0);

    std::vector<ChainSampleT<S>> deliveries;
    deliveries.reserve(static_cast<std::size_t>(cfg.deliveries_per_sample));
    S last_delivery_time = stochad::to_scalar<S>(0.0);

    auto try_start = [&](int link, const S& now) {
        const auto li = static_cast<std::size_t>(link);
        if (pending[li].scheduled) return;
        if (right_slot[li] != -1) return;
        if (left_slot[li + 1] != -1) return;
        const S& p = chain.links[li].success_prob;
        const double p_value = stochad::value_of(p);
        const int seq = draw_seq[li]++;
        const double count = draw(link, seq, p_value);
        if (proposals) {
            const double delta = [&] {
                if constexpr (std::is_same_v<S, Triple>) return p.delta;
                else return 0.0;
            }();
            if (delta > 0.0 && count >= 2.0) {
                proposals->push_back({link, seq, count, delta * (count - 1.0) / (1.0 - p_value)});
            } else if (delta < 0.0) {
                proposals->push_back({link, seq, count, -delta / p_value});
            }
        }
        const S duration =
            stochad::scale(chain.links[li].attempt_duration, count);
        const S done = stochad::add(now, duration, rng);
        auto& ev = pending[li];
        ev.scheduled = true;
        ev.time = stochad::value_of(done);
        ev.time_s = done;
        ev.attempts = count;
        ev.start = stochad::value_of(now);
    };

    auto alloc_segment = [&]() {
        if (free_ids.empty()) throw std::logic_error("multi-shot: segment pool exhausted");
        const int id = free_ids.back();
        free_ids.pop_back();
        segments[static_cast<std::size_t>(id)].active = true;
        return id;
    };

    auto release_segment = [&](int id) {
        segments[static_cast<std::size_t>(id)].active = false;
        free_ids.push_back(id);
    };

    auto deliver = [&](int id, const S& now) {
        Segment& seg = segments[static_cast<std::size_t>(id)];
        S w = seg.werner;
        if (chain.end_node_storage) {
            const S left_storage = stochad::sub(now, seg.left_time, rng);
            apply_decay(w, left_storage, chain.coherence_times[0], rng);
            const S right_storage = stochad::sub(now, seg.right_time, rng);
            apply_decay(w, right_storage, chain.coherence_times[static_cast<std::size_t>(last_node)], rng);
        }
        const S t_ent = stochad::sub(now, last_delivery_time, rng);
        if (log) {
            log->deliveries.push_back({stochad::value_of(now), stochad::value_of(t_ent),
                                       stochad::value_of(w)});
        }
        deliveries.push_back({t_ent, w});
        last_delivery_time = now;
        right_slot[0] = -1;
        left_slot[static_cast<std::size_t>(last_node)] = -1;
        release_segment(id);
    };

    // Merge segments at every interior node currently holding both qubits;
    // simultaneous swaps are processed in ascending node order (the order
    // does not change the delivered values, swaps being instantaneous).
    auto settle = [&](const S& now) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (int n = 1; n < last_node; ++n) {
                const int lid = left_slot[static_cast<std::size_t>(n)];
                const int rid = right_slot[static_cast<std::size_t>(n)];
                if (lid == -1 || rid == -1) continue;
                Segment& segl = segments[static_cast<std::size_t>(lid)];
                Segment& segr = segments[static_cast<std::size_t>(rid)];

                S w_left = segl.werner;
                const S stor_left = stochad::sub(now, segl.right_time, rng);
                apply_decay(w_left, stor_left, chain.coherence_times[static_cast<std::size_t>(n)], rng);
                S w_right = segr.werner;
                const S stor_right = stochad::sub(now, segr.left_time, rng);
                apply_decay(w_right, stor_right, chain.coherence_times[static_cast<std::size_t>(n)], rng);

                if (log) log->swaps.push_back({n, stochad::value_of(now), segl.left, segr.right});

                // Merge into the left segment's storage slot.
                segl.werner = stochad::mul(w_left, w_right, rng);
                segl.right = segr.right;
                segl.right_time = segr.right_time;
                left_slot[static_cast<std::size_t>(segr.right)] = lid;
                left_slot[static_cast<std::size_t>(n)] = -1;
                right_slot[static_cast<std::size_t>(n)] = -1;
                release_segment(rid);
                changed = true;

                if (segl.left == 0 && segl.right == last_node) deliver(lid, now);
                break;  // restart the scan: slots changed
            }
        }
    };

    const S zero = stochad::to_scalar<S>(0.0);
    for (int i = 0; i < n_links; ++i) try_start(i, zero);

    while (static_cast<int>(deliveries.size()) < cfg.deliveries_per_sample) {
        // Earliest pending success; pick_tie resolves exact time ties.
        int next = -1;
        int n_tied = 0;
        for (int i = 0; i < n_links; ++i) {
            const auto& ev = pending[static_cast<std::size_t>(i)];
            if (!ev.scheduled) continue;
            if (next == -1 || ev.time < pending[static_cast<std::size_t>(next)].time) {
                next = i;
                n_tied = 1;
            } else if (ev.time == pending[static_cast<std::size_t>(next)].time) {
                ++n_tied;
            }
        }
        if (next == -1) throw std::logic_error("multi-shot: no pending events");
        if (n_tied > 1) {
            const int wanted = pick_tie(n_tied);
            int seen = 0;
            for (int i = 0; i < n_links; ++i) {
                const auto& ev = pending[static_cast<std::size_t>(i)];
                if (!ev.scheduled || ev.time != pending[static_cast<std::size_t>(next)].time) continue;
                if (seen++ == wanted) {
                    next = i;
                    break;
                }
            }
        }

        Pending ev = pending[static_cast<std::size_t>(next)];
        pending[static_cast<std::size_t>(next)].scheduled = false;
        if (log) log->successes.push_back({next, ev.start, ev.attempts, ev.time});

        const int id = alloc_segment();
        Segment& seg = segments[static_cast<std::size_t>(id)];
        seg.left = next;
        seg.right = next + 1;
        seg.werner = chain.links[static_cast<std::size_t>(next)].initial_werner;
        seg.left_time = ev.time_s;
        seg.right_time = ev.time_s;
        right_slot[static_cast<std::size_t>(next)] = id;
        left_slot[static_cast<std::size_t>(next) + 1] = id;

        if (seg.left == 0 && seg.right == last_node) {
            deliver(id, ev.time_s);
        } else {
            settle(ev.time_s);
        }

        for (int i = 0; i < n_links; ++i) try_start(i, ev.time_s);
    }

    deliveries.erase(deliveries.begin(), deliveries.begin() + cfg.burn_in);
    return deliveries;
}

inline SimChain<double> primal_of(const SimChain<Triple>& chain) {
    SimChain<double> out;
    out.end_node_storage = chain.end_node_storage;
    out.links.reserve(chain.links.size());
    for (const auto& link : chain.links) {
        out.links.push_back({link.attempt_duration.value, link.success_prob.value,
                             link.initial_werner.value});
    }
    out.coherence_times.reserve(chain.coherence_times.size());
    for (const auto& t : chain.coherence_times) out.coherence_times.push_back(t.value);
    return out;
}

struct MultiShotTripleRun {
    std::vector<ChainSampleT<Triple>> deliveries;   // delta parts, no perturbations
    std::vector<ChainSample> counterfactual;        // jumped re-run, empty if no jump
    double total_weight = 0.0;
};

/// Derivative pass of the multi-shot protocol. Finite perturbations are
/// propagated by counterfactual re-execution: the delta pass records one
/// coupling proposal per parameter-dependent draw, one proposal is selected
/// with probability proportional to its weight (pruning, total weight kept),
/// and the whole run is replayed with only that draw jumped. Re-running is
/// what keeps the estimator unbiased when a jump would reorder events.
inline MultiShotTripleRun multi_shot_triple_run(const SimChain<Triple>& chain,
                                                const MultiShotConfig& cfg, RandomSource& rng,
                                                EventLog* log = nullptr) {
    for (const auto& link : chain.links) {
        if (link.success_prob.perturbation) {
            throw std::invalid_argument(
                "multi-shot: sampler parameters with finite perturbations are unsupported");
        }
        stochad::detail::check_probability(link.success_prob.value, "multi-shot");
    }

    MultiShotTripleRun out;
    // Per-call nonce: repeated runs on one source draw fresh counts, while a
    // primal run on a paired source consumes the same nonce and so shares
    // every attempt count with this pass.
    const std::uint64_t nonce = rng.next_u64();
    LinkDraws draws(rng.seed(), stochad::derive_stream(rng.stream(), nonce), chain.links.size());
    std::vector<CouplingProposal> proposals;
    const auto uniform_tie = [&rng](int n) {
        return static_cast<int>(rng.aux_below(static_cast<std::uint64_t>(n)));
    };
    out.deliveries = multi_shot_events(chain, cfg, draws, uniform_tie, rng, log, &proposals);

    for (const auto& prop : proposals) out.total_weight += prop.weight;
    if (out.total_weight <= 0.0) return out;

    // Select the jumped draw proportionally to weight.
    double pick = rng.aux_double() * out.total_weight;
    const CouplingProposal* chosen = &proposals.back();
    for (const auto& prop : proposals) {
        pick -= prop.weight;
        if (pick < 0.0) {
            chosen = &prop;
            break;
        }
    }
    const Triple& p = chain.links[static_cast<std::size_t>(chosen->link)].success_prob;
    double jumped = chosen->count;
    if (p.delta > 0.0) {
        const auto span = static_cast<std::uint64_t>(chosen->count - 1.0);
        jumped = 1.0 + static_cast<double>(rng.aux_below(span));
    } else {
        jumped = chosen->count +
                 stochad::detail::geometric_icdf(rng.aux_open01(), p.value);
    }

    LinkDraws jumped_draws = draws;
    jumped_draws.set_override(chosen->link, chosen->seq, jumped);
    const SimChain<double> primal = primal_of(chain);
    const auto first_tie = [](int) { return 0; };
    out.counterfactual =
        multi_shot_events(primal, cfg, jumped_draws, first_tie, rng, nullptr, nullptr);
    return out;
}

}  // namespace detail

/// Multi-shot run, primal scalars. Draws are keyed by (link, sequence) on
/// sub-streams of `rng`, so runs sharing (seed, stream) are repeatable.
inline std::vector<ChainSample> simulate_multi_shot(const SimChain<double>& chain,
                                                    const MultiShotConfig& cfg, RandomSource& rng,
                                                    EventLog* log = nullptr) {
    const std::uint64_t nonce = rng.next_u64();
    const detail::LinkDraws draws(rng.seed(), stochad::derive_stream(rng.stream(), nonce),
                                  chain.links.size());
    for (const auto& link : chain.links) {
        stochad::detail::check_probability(link.success_prob, "multi-shot");
    }
    const auto first_tie = [](int) { return 0; };
    return detail::multi_shot_events(chain, cfg, draws, first_tie, rng, log, nullptr);
}

/// Multi-shot run, derivative scalars: delta parts from the realized event
/// order plus one pruned finite perturbation per delivery obtained from a
/// counterfactual re-run (all deliveries share the selected jump and carry
/// the total proposal weight).
inline std::vector<ChainSampleT<Triple>> simulate_multi_shot(const SimChain<Triple>& chain,
                                                             const MultiShotConfig& cfg,
                                                             RandomSource& rng,
                                                             EventLog* log = nullptr) {
    auto run = detail::multi_shot_triple_run(chain, cfg, rng, log);
    if (!run.counterfactual.empty()) {
        for (std::size_t k = 0; k < run.deliveries.size(); ++k) {
            run.deliveries[k].t_ent.perturbation = stochad::Perturbation{
                run.counterfactual[k].t_ent - run.deliveries[k].t_ent.value, run.total_weight};
            run.deliveries[k].werner.perturbation = stochad::Perturbation{
                run.counterfactual[k].werner - run.deliveries[k].werner.value, run.total_weight};
        }
    }
    return run.deliveries;
}

/// One Monte Carlo sample: a single-shot round, or the per-run mean over the
/// retained multi-shot deliveries.
template <class S>
ChainSampleT<S> run_once(const SimChain<S>& chain, Protocol protocol,
                         const MultiShotConfig& cfg, RandomSource& rng) {
    if (protocol == Protocol::Single) return simulate_single_shot(chain, rng);

    if constexpr (std::is_same_v<S, Triple>) {
        const auto run = detail::multi_shot_triple_run(chain, cfg, rng);
        const double inv = 1.0 / static_cast<double>(run.deliveries.size());
        Triple t_mean{0.0, 0.0, std::nullopt};
        Triple w_mean{0.0, 0.0, std::nullopt};
        for (const auto& d : run.deliveries) {
            t_mean.value += d.t_ent.value;
            t_mean.delta += d.t_ent.delta;
            w_mean.value += d.werner.value;
            w_mean.delta += d.werner.delta;
        }
        t_mean.value *= inv;
        t_mean.delta *= inv;
        w_mean.value *= inv;
        w_mean.delta *= inv;
        if (!run.counterfactual.empty()) {
            double t_jumped = 0.0, w_jumped = 0.0;
            for (const auto& d : run.counterfactual) {
                t_jumped += d.t_ent;
                w_jumped += d.werner;
            }
            t_mean.perturbation =
                stochad::Perturbation{t_jumped * inv - t_mean.value, run.total_weight};
            w_mean.perturbation =
                stochad::Perturbation{w_jumped * inv - w_mean.value, run.total_weight};
        }
        return {t_mean, w_mean};
    } else {
        const auto samples = simulate_multi_shot(chain, cfg, rng);
        double t_sum = 0.0, w_sum = 0.0;
        for (const auto& d : samples) {
            t_sum += d.t_ent;
            w_sum += d.werner;
        }
        const double inv = 1.0 / static_cast<double>(samples.size());
        return {t_sum * inv, w_sum * inv};
    }
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

/// How a chain-level estimate draws its samples.
struct SamplePlan {
    std::int64_t n_samples = 10000;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    int threads = 1;
};

struct SkrEstimate {
    double skr = 0.0;
    double skr_std_error = 0.0;
    double mean_t_ent = 0.0;
    double mean_t_ent_se = 0.0;
    double mean_werner = 0.0;
    double mean_werner_se = 0.0;
    double qber = 0.0;
    std::int64_t n_samples = 0;
    bool clamped = false;
};

struct GradientEstimate {
    double gradient = 0.0;
    double std_error = 0.0;
    bool clamped = false;
    SkrEstimate skr;          // primal estimate from the same run
    double derivative_t_ent = 0.0;
    double derivative_werner = 0.0;
};

/// Estimate the secret-key rate of a chain. The standard error is propagated
/// to first order (delta method) through SKR = r(mean w) / mean T.
SkrEstimate estimate_skr(const ChainSpec& spec, Protocol protocol, const MultiShotConfig& cfg,
                         const SamplePlan& plan, bool end_node_storage = true);

/// Derivative of the SKR with respect to the selected parameter, estimated by
/// a triple-valued forward pass. On the clamped branch (zero secret fraction)
/// the gradient is exactly zero and flagged.
GradientEstimate skr_gradient(const ChainSpec& spec, Protocol protocol, const MultiShotConfig& cfg,
                              const ParamSelector& selector, const SamplePlan& plan,
                              bool end_node_storage = true);

/// dSKR/dT_n for every node, in Hz per second of coherence time.
std::vector<GradientEstimate> sensitivity(const ChainSpec& spec, Protocol protocol,
                                          const MultiShotConfig& cfg, const SamplePlan& plan,
                                          bool end_node_storage = true);

/// Gradient of the annealed utility SKR + bonus / mean(T_ent) for an already
/// lowered (and seeded) chain; `bonus` is 0.1 * temperature in the annealed
/// placement objective and 0 recovers the plain SKR gradient. On the clamped
/// branch only the rate bonus contributes.
GradientEstimate annealed_utility_gradient(const SimChain<Triple>& chain, Protocol protocol,
                                           const MultiShotConfig& cfg, double bonus,
                                           const SamplePlan& plan);

/// Per-sample (t_ent, werner) dump for debugging; multi-shot runs emit one
/// entry per retained delivery, all sharing the run's sample index.
struct SampleDump {
    std::int64_t sample_index;
    double t_ent;
    double werner;
};

std::vector<SampleDump> dump_samples(const ChainSpec& spec, Protocol protocol,
                                     const MultiShotConfig& cfg, const SamplePlan& plan,
                                     bool end_node_storage = true);

}  // namespace repnet

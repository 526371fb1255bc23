#include "repnet/placement.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace repnet {

namespace {

std::uint64_t path_stream_key(const std::vector<int>& path) {
    // FNV-1a over the node sequence; keys the per-path sampling stream.
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const int node : path) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(node));
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Path nodes with repeaters closer than merge_distance_km to their previous
/// neighbor dropped; keeps at least the two end points.
std::vector<int> merged_path(const Coordinates& coords, const std::vector<int>& path,
                             std::vector<int>* dropped = nullptr) {
    std::vector<int> out;
    out.reserve(path.size());
    out.push_back(path.front());
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (distance(coords.position(out.back()), coords.position(path[i])) < merge_distance_km) {
            if (i + 1 == path.size()) {
                // never drop the terminal end node; drop its twin instead
                if (out.size() > 1) {
                    if (dropped) dropped->push_back(out.back());
                    out.back() = path[i];
                } else {
                    out.push_back(path[i]);
                }
            } else if (dropped) {
                dropped->push_back(path[i]);
            }
            continue;
        }
        out.push_back(path[i]);
    }
    return out;
}

ChainSpec chain_along(const Coordinates& coords, const std::vector<int>& nodes,
                      const Hardware& hw) {
    ChainSpec spec;
    spec.nodes.assign(nodes.size(), NodeSpec{hw.coherence_time_s});
    spec.links.reserve(nodes.size() - 1);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double length = distance(coords.position(nodes[i]), coords.position(nodes[i + 1]));
        spec.links.push_back({length, FixedWernerLink{hw.fidelity, hw.attenuation_db_per_km}});
    }
    return spec;
}

SamplePlan plan_for_path(const RandomSource& eval_base, const std::vector<int>& path,
                         std::int64_t n_samples, int threads) {
    SamplePlan plan;
    plan.n_samples = n_samples;
    plan.seed = eval_base.seed();
    plan.stream = stochad::derive_stream(eval_base.stream(), path_stream_key(path));
    plan.threads = threads;
    return plan;
}

}  // namespace

PathResult path_utility(const Coordinates& coords, const std::vector<int>& path,
                        const Hardware& hw, const PathEvalOptions& eval, RandomSource eval_base) {
    if (path.size() < 2) throw std::invalid_argument("path_utility: path needs >= 2 nodes");
    PathResult out;
    out.nodes = path;

    const std::vector<int> nodes = merged_path(coords, path);
    const SamplePlan plan = plan_for_path(eval_base, path, eval.n_samples, eval.threads);
    SkrEstimate est;
    try {
        const ChainSpec spec = chain_along(coords, nodes, hw);
        est = estimate_skr(spec, eval.protocol, eval.window, plan);
    } catch (const std::domain_error&) {
        // a link long enough to underflow its success probability
        out.zero_utility = true;
        return out;
    }
    out.skr = est.skr;
    out.skr_se = est.skr_std_error;
    out.mean_t_ent = est.mean_t_ent;
    out.mean_werner = est.mean_werner;
    out.annealed_utility = est.skr + 0.1 * eval.temperature / est.mean_t_ent;
    out.zero_utility = out.annealed_utility <= 0.0;
    return out;
}

PathResult best_path(const Coordinates& coords, int s, int t, const Hardware& hw,
                     const PathSearchOptions& options, RandomSource eval_base) {
    const int n_end = static_cast<int>(coords.n_end());
    const int n_total = static_cast<int>(coords.n_total());
    if (s == t || s >= n_end || t >= n_end || s < 0 || t < 0) {
        throw std::invalid_argument("best_path: s and t must be distinct end nodes");
    }

    long evaluations = 0;
    const auto evaluate = [&](const std::vector<int>& path) {
        ++evaluations;
        return path_utility(coords, path, hw, options.eval, eval_base);
    };

    const auto edge_allowed = [&](int a, int b) {
        if (!options.edge_cap_km) return true;
        return distance(coords.position(a), coords.position(b)) <= *options.edge_cap_km;
    };

    PathResult best;
    bool have_best = false;

    if (options.warm_start && options.warm_start->size() >= 2 &&
        options.warm_start->front() == s && options.warm_start->back() == t) {
        best = evaluate(*options.warm_start);
        have_best = true;
    }

    // Depth-first over simple paths; candidates pushed in reverse so the pop
    // order is lexicographic.
    std::vector<std::vector<int>> frontier;
    frontier.push_back({s});
    std::vector<char> on_path(static_cast<std::size_t>(n_total), 0);

    while (!frontier.empty()) {
        const std::vector<int> partial = std::move(frontier.back());
        frontier.pop_back();

        std::fill(on_path.begin(), on_path.end(), 0);
        for (const int v : partial) on_path[static_cast<std::size_t>(v)] = 1;
        const int tail = partial.back();

        // any node may relay, end nodes included: greenfield links exist
        // between every pair of nodes
        std::vector<std::vector<int>> extensions;
        for (int u = 0; u < n_total; ++u) {
            if (on_path[static_cast<std::size_t>(u)]) continue;
            if (!edge_allowed(tail, u)) continue;
            std::vector<int> next = partial;
            next.push_back(u);
            if (u == t) {
                PathResult candidate = evaluate(next);
                if (!have_best || candidate.annealed_utility > best.annealed_utility) {
                    best = std::move(candidate);
                    have_best = true;
                }
            } else {
                const PathResult prefix = evaluate(next);
                if (!have_best || prefix.annealed_utility > best.annealed_utility) {
                    extensions.push_back(std::move(next));
                }
            }
        }
        for (auto it = extensions.rbegin(); it != extensions.rend(); ++it) {
            frontier.push_back(std::move(*it));
        }
    }

    if (!have_best || best.annealed_utility <= 0.0) {
        PathResult fallback;
        fallback.nodes = {s, t};
        fallback.zero_utility = true;
        fallback.evaluations = evaluations;
        return fallback;
    }
    best.evaluations = evaluations;
    return best;
}

NetworkEvaluation network_utility(const Coordinates& coords, const Hardware& hw,
                                  const PathSearchOptions& options, RandomSource eval_base,
                                  std::vector<std::vector<int>>* warm_starts) {
    const int n_end = static_cast<int>(coords.n_end());
    if (n_end < 2) throw std::invalid_argument("network_utility: need at least 2 end nodes");

    NetworkEvaluation out;
    std::size_t pair_index = 0;
    for (int i = 0; i < n_end; ++i) {
        for (int j = i + 1; j < n_end; ++j, ++pair_index) {
            PathSearchOptions pair_options = options;
            if (warm_starts && pair_index < warm_starts->size() &&
                (*warm_starts)[pair_index].size() >= 2) {
                pair_options.warm_start = &(*warm_starts)[pair_index];
            }
            PathResult result = best_path(coords, i, j, hw, pair_options, eval_base);
            out.pairs.emplace_back(i, j);
            out.paths.push_back(std::move(result));
        }
    }
    if (warm_starts) {
        warm_starts->resize(out.paths.size());
        for (std::size_t k = 0; k < out.paths.size(); ++k) {
            if (!out.paths[k].zero_utility) (*warm_starts)[k] = out.paths[k].nodes;
        }
    }

    out.worst_index = 0;
    for (std::size_t k = 1; k < out.paths.size(); ++k) {
        if (out.paths[k].annealed_utility < out.paths[out.worst_index].annealed_utility) {
            out.worst_index = k;
        }
    }
    out.utility_min = out.paths[out.worst_index].annealed_utility;
    out.skr_min = out.paths[out.worst_index].skr;
    return out;
}

CoordinateGradient utility_gradient(const Coordinates& coords, const std::vector<int>& path,
                                    const Hardware& hw, const PathEvalOptions& eval,
                                    RandomSource eval_base) {
    const std::size_t n_end = coords.n_end();
    CoordinateGradient out;
    out.gradient.assign(coords.repeaters.size(), Vec2{});
    out.std_error.assign(coords.repeaters.size(), Vec2{});

    std::vector<int> dropped;
    const std::vector<int> nodes = merged_path(coords, path, &dropped);
    out.degenerate = !dropped.empty();

    const double bonus = 0.1 * eval.temperature;
    for (std::size_t pos = 0; pos < nodes.size(); ++pos) {
        const int node = nodes[pos];
        if (static_cast<std::size_t>(node) < n_end) continue;  // end nodes are fixed
        const std::size_t rep = static_cast<std::size_t>(node) - n_end;

        for (int axis = 0; axis < 2; ++axis) {
            // Lower the path chain with this coordinate seeded; only the links
            // adjacent to `node` depend on it.
            SimChain<Triple> chain;
            chain.coherence_times.assign(nodes.size(),
                                         Triple{hw.coherence_time_s, 0.0, std::nullopt});
            chain.links.reserve(nodes.size() - 1);
            const double werner = werner_from_fidelity(hw.fidelity);
            for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
                const Vec2& a = coords.position(nodes[i]);
                const Vec2& b = coords.position(nodes[i + 1]);
                Triple length;
                if (nodes[i] == node || nodes[i + 1] == node) {
                    const bool seed_a = nodes[i] == node;
                    const Triple ax = (seed_a && axis == 0) ? stochad::make_input(a.x)
                                                            : stochad::make_const(a.x);
                    const Triple ay = (seed_a && axis == 1) ? stochad::make_input(a.y)
                                                            : stochad::make_const(a.y);
                    const Triple bx = (!seed_a && axis == 0) ? stochad::make_input(b.x)
                                                             : stochad::make_const(b.x);
                    const Triple by = (!seed_a && axis == 1) ? stochad::make_input(b.y)
                                                             : stochad::make_const(b.y);
                    const Triple dx = ax - bx;
                    const Triple dy = ay - by;
                    length = stochad::sqrt_of(dx * dx + dy * dy);
                } else {
                    length = stochad::make_const(distance(a, b));
                }
                SimLink<Triple> link;
                link.attempt_duration = stochad::scale(length, 1.0 / default_speed_of_light_km_s);
                link.success_prob = transmission(hw.attenuation_db_per_km, length);
                link.initial_werner = stochad::make_const(werner);
                chain.links.push_back(std::move(link));
            }

            SamplePlan plan = plan_for_path(eval_base, nodes, eval.n_samples, eval.threads);
            plan.stream = stochad::derive_stream(plan.stream, 2 * rep + static_cast<std::size_t>(axis) + 1);
            const auto grad = annealed_utility_gradient(chain, eval.protocol, eval.window, bonus, plan);
            if (axis == 0) {
                out.gradient[rep].x = grad.gradient;
                out.std_error[rep].x = grad.std_error;
            } else {
                out.gradient[rep].y = grad.gradient;
                out.std_error[rep].y = grad.std_error;
            }
        }
    }
    return out;
}

void PlacementConfig::validate() const {
    schedule.validate();
    window.validate();
    if (restarts < 1) throw std::invalid_argument("placement: restarts must be >= 1");
    if (final_samples < 2 || restart_eval_samples < 2 || search_samples < 2) {
        throw std::invalid_argument("placement: sample counts must be >= 2");
    }
    if (!(hardware.fidelity > 0.25) || hardware.fidelity > 1.0) {
        throw std::invalid_argument("placement: fidelity must lie in (0.25, 1]");
    }
    if (!(hardware.coherence_time_s > 0.0)) {
        throw std::invalid_argument("placement: coherence_time must be > 0");
    }
    for (const double t0 : t0_values) {
        if (!(t0 > 0.0)) throw std::invalid_argument("placement: t0 values must be > 0");
    }
}

std::vector<double> default_t0_values(const std::vector<Vec2>& end_nodes) {
    double max_dist = 0.0;
    for (std::size_t i = 0; i < end_nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < end_nodes.size(); ++j) {
            max_dist = std::max(max_dist, distance(end_nodes[i], end_nodes[j]));
        }
    }
    // normalized so a 300 km square (diagonal ~424.26 km) gives {5, 10, 15}
    const double scale = max_dist > 0.0 ? max_dist / (300.0 * std::sqrt(2.0)) : 1.0;
    return {5.0 * scale, 10.0 * scale, 15.0 * scale};
}

namespace {

struct RestartOutcome {
    RestartRecord record;
    std::vector<PathResult> final_paths;
    std::vector<std::pair<int, int>> pairs;
    std::size_t worst_index = 0;
    std::vector<PlacementTraceRow> trace;
};

RestartOutcome run_restart(const std::vector<Vec2>& end_nodes, int n_repeaters,
                           const PlacementConfig& config, int restart, double t0,
                           int inner_threads) {
    RestartOutcome out;
    out.record.restart = restart;
    out.record.t0 = t0;

    RandomSource restart_rng(config.seed, stochad::derive_stream(0x9c0de, static_cast<std::uint64_t>(restart)));

    Coordinates coords;
    coords.end_nodes = end_nodes;
    double min_x = end_nodes[0].x, max_x = end_nodes[0].x;
    double min_y = end_nodes[0].y, max_y = end_nodes[0].y;
    for (const auto& node : end_nodes) {
        min_x = std::min(min_x, node.x);
        max_x = std::max(max_x, node.x);
        min_y = std::min(min_y, node.y);
        max_y = std::max(max_y, node.y);
    }
    for (int rep = 0; rep < n_repeaters; ++rep) {
        const double x = min_x + (max_x - min_x) * restart_rng.next_double();
        const double y = min_y + (max_y - min_y) * restart_rng.next_double();
        coords.repeaters.push_back({x, y});
    }

    PathSearchOptions search;
    search.edge_cap_km = config.edge_cap_km;
    search.eval.protocol = config.protocol;
    search.eval.window = config.window;
    search.eval.threads = inner_threads;

    if (n_repeaters > 0) {
        AdamState adam;
        std::vector<std::vector<int>> warm_starts;
        std::uint64_t eval_counter = 0;

        for (int epoch = 1; epoch <= config.schedule.epochs; ++epoch) {
            const double temperature = t0 * std::pow(config.schedule.decay, epoch);
            adam.learning_rate = temperature;
            search.eval.temperature = temperature;
            search.eval.n_samples = annealed_sample_count(temperature);

            for (int iter = 1; iter <= config.schedule.iters_per_epoch; ++iter) {
                const RandomSource eval_base = restart_rng.sub(++eval_counter);
                const auto net =
                    network_utility(coords, config.hardware, search, eval_base, &warm_starts);
                const auto& worst = net.paths[net.worst_index];

                CoordinateGradient grad;
                if (!worst.zero_utility) {
                    grad = utility_gradient(coords, worst.nodes, config.hardware, search.eval,
                                            eval_base);
                } else {
                    grad.gradient.assign(coords.repeaters.size(), Vec2{});
                }

                // Maximize: Adam minimizes, so feed the negated gradient as a
                // flat vector over (x, y) pairs.
                std::vector<double> params(2 * coords.repeaters.size());
                std::vector<double> g(2 * coords.repeaters.size());
                for (std::size_t rep = 0; rep < coords.repeaters.size(); ++rep) {
                    params[2 * rep] = coords.repeaters[rep].x;
                    params[2 * rep + 1] = coords.repeaters[rep].y;
                    g[2 * rep] = -grad.gradient[rep].x;
                    g[2 * rep + 1] = -grad.gradient[rep].y;
                }
                adam_step(adam, params, g);
                for (std::size_t rep = 0; rep < coords.repeaters.size(); ++rep) {
                    coords.repeaters[rep] = {params[2 * rep], params[2 * rep + 1]};
                }

                double norm = 0.0;
                for (const double gi : g) norm += gi * gi;
                out.trace.push_back({restart, epoch, iter, temperature, net.utility_min,
                                     std::sqrt(norm), net.pairs[net.worst_index].first,
                                     net.pairs[net.worst_index].second});
            }
        }
    }

    // Final evaluation at temperature zero: search with moderate samples, then
    // re-estimate each pair's winning path precisely.
    search.eval.temperature = 0.0;
    search.eval.n_samples = config.search_samples;
    const RandomSource final_base = restart_rng.sub(0xF17A1);
    auto net = network_utility(coords, config.hardware, search, final_base);

    PathEvalOptions precise = search.eval;
    precise.n_samples = config.restart_eval_samples;
    double worst_skr = 0.0, worst_se = 0.0;
    std::size_t worst_index = 0;
    for (std::size_t k = 0; k < net.paths.size(); ++k) {
        if (!net.paths[k].zero_utility) {
            const auto refined = path_utility(coords, net.paths[k].nodes, config.hardware, precise,
                                              final_base.sub(0x5eed + k));
            net.paths[k].skr = refined.skr;
            net.paths[k].skr_se = refined.skr_se;
            net.paths[k].annealed_utility = refined.skr;
            net.paths[k].mean_t_ent = refined.mean_t_ent;
            net.paths[k].mean_werner = refined.mean_werner;
        }
        if (k == 0 || net.paths[k].skr < worst_skr) {
            worst_skr = net.paths[k].skr;
            worst_se = net.paths[k].skr_se;
            worst_index = k;
        }
    }

    out.record.coords = coords;
    out.record.skr_min = worst_skr;
    out.record.skr_min_se = worst_se;
    out.final_paths = std::move(net.paths);
    out.pairs = std::move(net.pairs);
    out.worst_index = worst_index;
    return out;
}

}  // namespace

PlacementResult place_repeaters(const std::vector<Vec2>& end_nodes, int n_repeaters,
                                const PlacementConfig& config) {
    if (end_nodes.size() < 2) throw std::invalid_argument("placement: need at least 2 end nodes");
    if (n_repeaters < 0) throw std::invalid_argument("placement: n_repeaters must be >= 0");
    config.validate();

    const std::vector<double> t0_values =
        config.t0_values.empty() ? default_t0_values(end_nodes) : config.t0_values;

    const int restarts = n_repeaters == 0 ? 1 : config.restarts;
    const int workers = std::max(1, std::min<int>(config.threads, restarts));
    const int inner_threads = workers > 1 ? 1 : config.threads;

    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(restarts));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int r = w; r < restarts; r += workers) {
                    const double t0 = t0_values[static_cast<std::size_t>(r) % t0_values.size()];
                    outcomes[static_cast<std::size_t>(r)] =
                        run_restart(end_nodes, n_repeaters, config, r, t0, inner_threads);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& thread : pool) thread.join();
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }

    std::size_t best = 0;
    for (std::size_t r = 1; r < outcomes.size(); ++r) {
        if (outcomes[r].record.skr_min > outcomes[best].record.skr_min) best = r;
    }

    PlacementResult result;
    const auto& winner = outcomes[best];
    result.best = winner.record.coords;
    result.worst_pair = winner.pairs[winner.worst_index];
    result.final_paths = winner.final_paths;
    result.t0_used = winner.record.t0;

    // Re-evaluate the winner's worst pair at the full final budget.
    PathEvalOptions precise;
    precise.temperature = 0.0;
    precise.n_samples = config.final_samples;
    precise.protocol = config.protocol;
    precise.window = config.window;
    precise.threads = config.threads;
    double skr_min = 0.0, skr_se = 0.0;
    bool first = true;
    const RandomSource final_base(config.seed, stochad::derive_stream(0xBE57, 0));
    for (std::size_t k = 0; k < result.final_paths.size(); ++k) {
        auto& path = result.final_paths[k];
        if (!path.zero_utility) {
            const auto refined =
                path_utility(result.best, path.nodes, config.hardware, precise, final_base.sub(k));
            path.skr = refined.skr;
            path.skr_se = refined.skr_se;
            path.annealed_utility = refined.skr;
            path.mean_t_ent = refined.mean_t_ent;
            path.mean_werner = refined.mean_werner;
        }
        if (first || path.skr < skr_min) {
            skr_min = path.skr;
            skr_se = path.skr_se;
            result.worst_pair = winner.pairs[k];
            first = false;
        }
    }
    result.skr_min = skr_min;
    result.skr_min_se = skr_se;

    for (auto& outcome : outcomes) {
        result.restarts.push_back(std::move(outcome.record));
        result.trace.insert(result.trace.end(), outcome.trace.begin(), outcome.trace.end());
    }
    return result;
}

}  // namespace repnet

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "repnet/chain_sim.hpp"
#include "repnet/optimize.hpp"

namespace repnet {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// Fixed end nodes plus free repeater positions; node ids index the end nodes
/// first (0 .. E-1) and then the repeaters (E .. E+N-1).
struct Coordinates {
    std::vector<Vec2> end_nodes;
    std::vector<Vec2> repeaters;

    std::size_t n_end() const { return end_nodes.size(); }
    std::size_t n_total() const { return end_nodes.size() + repeaters.size(); }

    const Vec2& position(int node) const {
        const auto id = static_cast<std::size_t>(node);
        return id < end_nodes.size() ? end_nodes[id] : repeaters[id - end_nodes.size()];
    }
};

/// Uniform hardware assumed on every greenfield link and node.
struct Hardware {
    double fidelity = 0.99;
    double attenuation_db_per_km = 0.2;
    double coherence_time_s = 10.0;
};

/// Repeaters closer than this to a path neighbor are merged before building
/// the chain, so zero-length links never reach the simulator.
inline constexpr double merge_distance_km = 1e-6;

/// How path utilities are sampled during search and gradient evaluation.
struct PathEvalOptions {
    double temperature = 0.0;
    std::int64_t n_samples = 30;
    Protocol protocol = Protocol::Multi;
    MultiShotConfig window{};
    int threads = 1;
};

/// Number of per-path samples dictated by the annealing temperature.
inline std::int64_t annealed_sample_count(double temperature) {
    const auto n = static_cast<std::int64_t>(std::ceil(30.0 / (1.0 + temperature)));
    return n < 2 ? 2 : n;
}

struct PathResult {
    std::vector<int> nodes;          // from s to t
    double skr = 0.0;
    double skr_se = 0.0;
    double annealed_utility = 0.0;   // skr + 0.1 * t / mean(T_ent)
    double mean_t_ent = 0.0;
    double mean_werner = 0.0;
    bool zero_utility = false;       // underflow or no feasible path
    long evaluations = 0;            // utility evaluations spent by the search
};

/// Build the chain along `path` (consecutive Euclidean links, FixedWerner
/// hardware, uniform coherence time) and estimate its SKR and annealed
/// utility. The sampling stream is keyed on the path nodes, so any algorithm
/// evaluating the same path under the same eval seed sees identical numbers.
PathResult path_utility(const Coordinates& coords, const std::vector<int>& path,
                        const Hardware& hw, const PathEvalOptions& eval, RandomSource eval_base);

struct PathSearchOptions {
    PathEvalOptions eval{};
    std::optional<double> edge_cap_km;          // only use edges of length <= cap
    const std::vector<int>* warm_start = nullptr;
};

/// Exact best-utility simple path from s to t by branch and prune: partial
/// paths are evaluated as chains and dropped once their utility no longer
/// beats the incumbent (extending a path can only lower the utility). A warm
/// start seeds the incumbent before the frontier is expanded.
PathResult best_path(const Coordinates& coords, int s, int t, const Hardware& hw,
                     const PathSearchOptions& options, RandomSource eval_base);

struct NetworkEvaluation {
    double utility_min = 0.0;           // min over pairs of the annealed utility
    double skr_min = 0.0;               // the worst pair's plain SKR
    std::size_t worst_index = 0;        // into pairs/paths
    std::vector<std::pair<int, int>> pairs;
    std::vector<PathResult> paths;
};

/// best_path for every unordered end-node pair (lexicographic order); the
/// utility is the minimum and the worst pair is kept for gradient targeting.
/// `warm_starts`, when given, must align with the pair order and is updated
/// in place with the newly found best paths.
NetworkEvaluation network_utility(const Coordinates& coords, const Hardware& hw,
                                  const PathSearchOptions& options, RandomSource eval_base,
                                  std::vector<std::vector<int>>* warm_starts = nullptr);

struct CoordinateGradient {
    std::vector<Vec2> gradient;    // one entry per repeater; off-path exactly 0
    std::vector<Vec2> std_error;
    bool degenerate = false;       // some repeater merged with a path neighbor
};

/// Stochastic-AD gradient of the worst path's annealed utility with respect
/// to every repeater coordinate. Repeaters off the path get exactly (0, 0);
/// repeaters merged into a neighbor get (0, 0) with the degeneracy flag.
CoordinateGradient utility_gradient(const Coordinates& coords, const std::vector<int>& path,
                                    const Hardware& hw, const PathEvalOptions& eval,
                                    RandomSource eval_base);

struct PlacementConfig {
    Hardware hardware{};
    AnnealSchedule schedule{};           // epochs, iters, decay; t0 comes from t0_values
    std::vector<double> t0_values;       // cycled over restarts; empty = {5,10,15} scaled to size
    int restarts = 8;
    std::optional<double> edge_cap_km;   // nullopt = unconstrained complete graph
    Protocol protocol = Protocol::Multi;
    MultiShotConfig window{};
    std::int64_t search_samples = 200;   // per-path samples in the final (t = 0) searches
    std::int64_t restart_eval_samples = 20000;  // per-restart ranking evaluation
    std::int64_t final_samples = 100000;        // winning configuration evaluation
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

struct PlacementTraceRow {
    int restart = 0;
    int epoch = 0;
    int iteration = 0;
    double temperature = 0.0;
    double utility_min = 0.0;
    double grad_norm = 0.0;
    int worst_s = 0;
    int worst_t = 0;
};

struct RestartRecord {
    int restart = 0;
    double t0 = 0.0;
    Coordinates coords;
    double skr_min = 0.0;
    double skr_min_se = 0.0;
};

struct PlacementResult {
    Coordinates best;
    double skr_min = 0.0;
    double skr_min_se = 0.0;
    std::pair<int, int> worst_pair{0, 0};
    std::vector<PathResult> final_paths;   // per pair, for the winning restart
    std::vector<RestartRecord> restarts;
    std::vector<PlacementTraceRow> trace;
    double t0_used = 0.0;
};

/// Annealed gradient-descent placement of n_repeaters among the end nodes:
/// random restarts, per-epoch temperature t0 * decay^epoch controlling the
/// Adam learning rate, the per-path sample count and the utility's rate
/// bonus. Deterministic for a fixed seed regardless of the thread count.
PlacementResult place_repeaters(const std::vector<Vec2>& end_nodes, int n_repeaters,
                                const PlacementConfig& config);

/// Default t0 triple {5, 10, 15} scaled proportionally to the network size
/// (normalized so a 300 km square reproduces {5, 10, 15} exactly).
std::vector<double> default_t0_values(const std::vector<Vec2>& end_nodes);

}  // namespace repnet

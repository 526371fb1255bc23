#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "repnet/chain_sim.hpp"
#include "repnet/optimize.hpp"
#include "repnet/placement.hpp"

namespace repnet {

/// Configuration problem (missing/malformed field); the message names the
/// offending field. Maps to exit code 2 in the CLI.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Parse a JSON document, wrapping syntax errors in ConfigError.
nlohmann::json parse_config_text(const std::string& text);
nlohmann::json load_config_file(const std::string& path);

/// `chain` section: explicit nodes/links or the homogeneous shorthand
/// {"homogeneous": {"n_links": .., "length_km": .., "coherence_time_s": ..,
///  "model": {...}}}. Model objects carry a "type" of fixed_werner,
/// single_click or direct.
ChainSpec chain_from_config(const nlohmann::json& root);
nlohmann::json chain_to_json(const ChainSpec& spec);

/// `protocol` section (all optional): type single|multi, deliveries_per_sample,
/// burn_in, end_node_storage.
struct ProtocolConfig {
    Protocol protocol = Protocol::Multi;
    MultiShotConfig window{};
    bool end_node_storage = true;
};
ProtocolConfig protocol_from_config(const nlohmann::json& root);
nlohmann::json protocol_to_json(const ProtocolConfig& cfg);

/// `optimize` section onto BrightStateOptions (seed/threads filled by the CLI).
BrightStateOptions optimize_from_config(const nlohmann::json& root);
nlohmann::json optimize_to_json(const BrightStateOptions& options);

/// `placement` section: end_nodes [[x,y],...], n_repeaters, hardware,
/// schedule, restarts, edge_cap_km, sample counts.
struct PlacementJob {
    std::vector<Vec2> end_nodes;
    int n_repeaters = 0;
    PlacementConfig config{};
};
PlacementJob placement_from_config(const nlohmann::json& root);
nlohmann::json placement_to_json(const PlacementJob& job);

/// `fd_compare` section: the repeater-position sweep of the two-link chain.
struct FdCompareConfig {
    double total_length_km = 100.0;
    double coherence_time_s = 0.13;
    double gamma_left = 0.2;
    double gamma_right = 0.6;
    double position_min_km = 60.0;
    double position_max_km = 80.0;
    int points = 41;
    std::vector<double> epsilons_km = {0.4, 2.0};
    std::int64_t skr_samples = 100000;
    std::int64_t derivative_samples = 100000;
};
FdCompareConfig fd_compare_from_config(const nlohmann::json& root);
nlohmann::json fd_compare_to_json(const FdCompareConfig& cfg);

/// `benchmark` section: chain sizes and per-point work for the
/// time-per-sample table.
struct BenchmarkConfig {
    int min_links = 2;
    int max_links = 25;
    int alpha_values = 20;
    std::int64_t samples_per_alpha = 250;
    double length_km = 65.0;
    double coherence_time_s = 10.0;
    bool single_shot = true;
    bool multi_shot = true;
};
BenchmarkConfig benchmark_from_config(const nlohmann::json& root);
nlohmann::json benchmark_to_json(const BenchmarkConfig& cfg);

}  // namespace repnet

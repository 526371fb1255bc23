#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "repnet/config.hpp"

using namespace repnet;
using nlohmann::json;
namespace fs = std::filesystem;

#ifndef REPNET_CLI_PATH
#error "REPNET_CLI_PATH must point at the repnet binary"
#endif

namespace {

struct RunOutcome {
    int exit_code;
    std::string output;  // stdout + stderr
};

RunOutcome run_cli(const std::string& cli_args, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const fs::path log = out_dir / "cli.log";
    const std::string command =
        std::string(REPNET_CLI_PATH) + " " + cli_args + " >" + log.string() + " 2>&1";
    const int status = std::system(command.c_str());
    std::ifstream in(log);
    std::stringstream text;
    text << in.rdbuf();
    return {WEXITSTATUS(status), text.str()};
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "repnet_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path path = dir / "config.json";
    std::ofstream out(path);
    out << text;
    return path;
}

const char* small_chain_config = R"({
  "chain": {"homogeneous": {"n_links": 2, "length_km": 50.0, "coherence_time_s": 5.0,
            "model": {"type": "single_click", "bright_state": 0.05}}},
  "protocol": {"type": "single"},
  "samples": 5000
})";

std::string first_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST_CASE("config: explicit chain and homogeneous shorthand") {
    const json root = json::parse(R"({
      "chain": {
        "speed_of_light_km_s": 150000,
        "nodes": [{"coherence_time_s": 1.0}, {"coherence_time_s": "inf"}, {}],
        "links": [
          {"length_km": 10, "model": {"type": "fixed_werner", "fidelity": 0.95}},
          {"length_km": 20, "model": {"type": "direct", "success_prob": 0.5, "werner": 0.9}}
        ]
      }
    })");
    const ChainSpec spec = chain_from_config(root);
    CHECK(spec.speed_of_light_km_s == 150000.0);
    REQUIRE(spec.nodes.size() == 3);
    CHECK(spec.nodes[0].coherence_time_s == 1.0);
    CHECK(std::isinf(spec.nodes[1].coherence_time_s));
    CHECK(std::isinf(spec.nodes[2].coherence_time_s));
    CHECK(std::holds_alternative<DirectLink>(spec.links[1].model));

    const json homog = json::parse(R"({
      "chain": {"homogeneous": {"n_links": 5, "length_km": 65, "coherence_time_s": 10,
                "model": {"type": "single_click", "bright_state": 0.05}}}
    })");
    const ChainSpec h = chain_from_config(homog);
    CHECK(h.nodes.size() == 6);
    CHECK(h.links.size() == 5);
    CHECK(h.links[4].length_km == 65.0);

    // round trip through serialization
    json doc;
    doc["chain"] = chain_to_json(spec);
    const ChainSpec again = chain_from_config(doc);
    CHECK(again.nodes[1].coherence_time_s == spec.nodes[1].coherence_time_s);
    CHECK(again.links[0].length_km == spec.links[0].length_km);
}

TEST_CASE("config: errors name the offending field") {
    try {
        chain_from_config(json::parse(R"({"chain": {"nodes": []}})"));
        FAIL("expected error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("chain.links") != std::string::npos);
    }
    try {
        chain_from_config(json::parse(
            R"({"chain": {"nodes": [{}, {}], "links": [{"model": {"type": "direct"}}]}})"));
        FAIL("expected error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("length_km") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
    CHECK_THROWS_AS(
        protocol_from_config(json::parse(R"({"protocol": {"type": "sometimes"}})")),
        ConfigError);
    CHECK_THROWS_AS(
        chain_from_config(json::parse(
            R"({"chain": {"nodes": [{}, {}], "links": [{"length_km": 5, "model": {"type": "warp"}}]}})")),
        ConfigError);
}

TEST_CASE("config: protocol, fd-compare and benchmark sections") {
    const json root = json::parse(R"({
      "protocol": {"type": "single", "deliveries_per_sample": 8, "burn_in": 2,
                   "end_node_storage": false},
      "fd_compare": {"points": 5, "position_min_km": 40, "position_max_km": 60},
      "benchmark": {"max_links": 10, "alpha_values": 3}
    })");
    const ProtocolConfig p = protocol_from_config(root);
    CHECK(p.protocol == Protocol::Single);
    CHECK(p.window.deliveries_per_sample == 8);
    CHECK(!p.end_node_storage);

    const FdCompareConfig f = fd_compare_from_config(root);
    CHECK(f.points == 5);
    CHECK(f.position_min_km == 40.0);
    CHECK(f.epsilons_km.size() == 2);  // defaults kept

    const BenchmarkConfig b = benchmark_from_config(root);
    CHECK(b.max_links == 10);
    CHECK(b.alpha_values == 3);

    CHECK_THROWS_AS(
        protocol_from_config(json::parse(R"({"protocol": {"burn_in": 99}})")), ConfigError);
    CHECK_THROWS_AS(
        fd_compare_from_config(json::parse(R"({"fd_compare": {"position_min_km": 200}})")),
        ConfigError);
}

TEST_CASE("config: placement section") {
    const json root = json::parse(R"({
      "placement": {
        "end_nodes": [[0, 0], [300, 0], [300, 300], [0, 300]],
        "n_repeaters": 4,
        "hardware": {"fidelity": 0.98},
        "schedule": {"t0": [5, 10, 15], "epochs": 10, "iters_per_epoch": 5},
        "restarts": 3,
        "edge_cap_km": 300
      }
    })");
    const PlacementJob job = placement_from_config(root);
    CHECK(job.end_nodes.size() == 4);
    CHECK(job.n_repeaters == 4);
    CHECK(job.config.hardware.fidelity == 0.98);
    CHECK(job.config.t0_values == std::vector<double>{5.0, 10.0, 15.0});
    CHECK(job.config.edge_cap_km.has_value());

    CHECK_THROWS_AS(placement_from_config(json::parse(R"({"placement": {"end_nodes": [[0, 0]]}})")),
                    ConfigError);
    try {
        placement_from_config(json::parse(R"({"placement": {"end_nodes": [[0,0],[1,1]]}})"));
        FAIL("expected error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("n_repeaters") != std::string::npos);
    }
}

TEST_CASE("cli: missing config field exits 2 and names the field") {
    const auto dir = scratch_dir("bad_config");
    const auto config = write_config(dir, R"({"chain": {"nodes": [{}, {}]}})");
    const auto outcome = run_cli("chain-sim --config " + config.string() +
                                 " --out " + dir.string(), dir);
    CHECK(outcome.exit_code == 2);
    CHECK(outcome.output.find("chain.links") != std::string::npos);
}

TEST_CASE("cli: unparsable JSON exits 2") {
    const auto dir = scratch_dir("bad_json");
    const auto config = write_config(dir, "{broken");
    const auto outcome = run_cli("chain-sim --config " + config.string(), dir);
    CHECK(outcome.exit_code == 2);
    CHECK(outcome.output.find("invalid JSON") != std::string::npos);
}

TEST_CASE("cli: chain-sim runs, writes a record and echoes the seed") {
    const auto dir = scratch_dir("chain_sim");
    const auto config = write_config(dir, small_chain_config);
    const auto outcome = run_cli("chain-sim --config " + config.string() + " --seed 99 --out " +
                                     (dir / "out").string() + " --emit-samples",
                                 dir);
    CHECK(outcome.exit_code == 0);
    CHECK(outcome.output.find("seed 99") != std::string::npos);
    REQUIRE(fs::exists(dir / "out" / "run.json"));

    json record;
    std::ifstream(dir / "out" / "run.json") >> record;
    CHECK(record["subcommand"] == "chain-sim");
    CHECK(record["master_seed"] == 99);
    CHECK(record["estimates"].contains("skr_hz"));
    CHECK(record["config"]["chain"]["links"].size() == 2);

    CHECK(first_line(dir / "out" / "samples.csv") == "# repnet samples v1");
}

TEST_CASE("cli: rerunning with the recorded seed reproduces estimates bitwise") {
    const auto dir = scratch_dir("repro");
    const auto config = write_config(dir, small_chain_config);
    for (const char* run : {"a", "b"}) {
        const auto outcome = run_cli("chain-sim --config " + config.string() +
                                         " --seed 31337 --threads 1 --out " +
                                         (dir / run).string(),
                                     dir);
        REQUIRE(outcome.exit_code == 0);
    }
    json first, second;
    std::ifstream(dir / "a" / "run.json") >> first;
    std::ifstream(dir / "b" / "run.json") >> second;
    CHECK(first["estimates"].dump() == second["estimates"].dump());
}

TEST_CASE("cli: protocol flag beats the config") {
    const auto dir = scratch_dir("protocol_flag");
    const auto config = write_config(dir, small_chain_config);
    const auto outcome = run_cli("chain-sim --config " + config.string() +
                                     " --seed 5 --protocol multi --out " + (dir / "o").string(),
                                 dir);
    REQUIRE(outcome.exit_code == 0);
    json record;
    std::ifstream(dir / "o" / "run.json") >> record;
    CHECK(record["config"]["protocol"]["type"] == "multi");
}

TEST_CASE("cli: multi-shot delivers at least as fast as single-shot on one seed") {
    const auto dir = scratch_dir("multi_vs_single");
    const auto config = write_config(dir, small_chain_config);
    json records[2];
    int i = 0;
    for (const char* protocol : {"single", "multi"}) {
        const auto outcome = run_cli("chain-sim --config " + config.string() + " --seed 2024 " +
                                         "--samples 20000 --protocol " + std::string(protocol) +
                                         " --out " + (dir / protocol).string(),
                                     dir);
        REQUIRE(outcome.exit_code == 0);
        std::ifstream(dir / protocol / "run.json") >> records[i++];
    }
    const double single_t = records[0]["estimates"]["mean_t_ent_s"].get<double>();
    const double multi_t = records[1]["estimates"]["mean_t_ent_s"].get<double>();
    const double se = std::hypot(records[0]["estimates"]["mean_t_ent_se"].get<double>(),
                                 records[1]["estimates"]["mean_t_ent_se"].get<double>());
    CHECK(multi_t <= single_t + 4.0 * se);
}

TEST_CASE("cli: analyze with too few points exits 2") {
    const auto dir = scratch_dir("analyze_few");
    fs::create_directories(dir / "results");
    std::ofstream(dir / "results" / "p0.json")
        << R"({"repnet_placement": true, "n_repeaters": 0, "skr_min_hz": 1e-6})";
    const auto outcome =
        run_cli("analyze --results-dir " + (dir / "results").string() + " --seed 1", dir);
    CHECK(outcome.exit_code == 2);
    CHECK(outcome.output.find("6 distinct") != std::string::npos);
}

TEST_CASE("cli: sensitivity emits fixed CSV headers") {
    const auto dir = scratch_dir("sens");
    const auto config = write_config(dir, small_chain_config);
    const auto outcome = run_cli("sensitivity --config " + config.string() +
                                     " --seed 4 --samples 2000 --out " + (dir / "o").string(),
                                 dir);
    REQUIRE(outcome.exit_code == 0);
    CHECK(first_line(dir / "o" / "sensitivity.csv") == "# repnet sensitivity v1");
    json record;
    std::ifstream(dir / "o" / "run.json") >> record;
    CHECK(record["estimates"]["sensitivities"].size() == 3);
}

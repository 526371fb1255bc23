#include "repnet/config.hpp"

#include <fstream>
#include <sstream>

namespace repnet {

namespace {

using nlohmann::json;

[[noreturn]] void missing(const std::string& path) {
    throw ConfigError("config: missing field \"" + path + "\"");
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) missing(path.empty() ? key : path + "." + key);
    return obj.at(key);
}

template <class T>
T as(const json& value, const std::string& path) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: field \"" + path + "\" has the wrong type");
    }
}

template <class T>
T get_or(const json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return as<T>(obj.at(key), path.empty() ? key : path + "." + key);
}

LinkModel model_from_json(const json& m, const std::string& path) {
    const std::string type = as<std::string>(require(m, "type", path), path + ".type");
    if (type == "fixed_werner") {
        FixedWernerLink out;
        out.fidelity = get_or(m, "fidelity", path, out.fidelity);
        out.attenuation_db_per_km = get_or(m, "attenuation_db_per_km", path, out.attenuation_db_per_km);
        return out;
    }
    if (type == "single_click") {
        SingleClickLink out;
        out.bright_state = get_or(m, "bright_state", path, out.bright_state);
        out.attenuation_db_per_km = get_or(m, "attenuation_db_per_km", path, out.attenuation_db_per_km);
        return out;
    }
    if (type == "direct") {
        DirectLink out;
        out.success_prob = get_or(m, "success_prob", path, out.success_prob);
        out.werner = get_or(m, "werner", path, out.werner);
        return out;
    }
    throw ConfigError("config: field \"" + path + ".type\" must be fixed_werner, single_click or direct");
}

json model_to_json(const LinkModel& model) {
    json out;
    if (const auto* fw = std::get_if<FixedWernerLink>(&model)) {
        out["type"] = "fixed_werner";
        out["fidelity"] = fw->fidelity;
        out["attenuation_db_per_km"] = fw->attenuation_db_per_km;
    } else if (const auto* sc = std::get_if<SingleClickLink>(&model)) {
        out["type"] = "single_click";
        out["bright_state"] = sc->bright_state;
        out["attenuation_db_per_km"] = sc->attenuation_db_per_km;
    } else {
        const auto& d = std::get<DirectLink>(model);
        out["type"] = "direct";
        out["success_prob"] = d.success_prob;
        out["werner"] = d.werner;
    }
    return out;
}

double coherence_from_json(const json& value, const std::string& path) {
    if (value.is_string()) {
        const auto text = value.get<std::string>();
        if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
        throw ConfigError("config: field \"" + path + "\" must be a number or \"inf\"");
    }
    return as<double>(value, path);
}

}  // namespace

json parse_config_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

ChainSpec chain_from_config(const json& root) {
    const json& chain = require(root, "chain", "");
    ChainSpec spec;
    spec.speed_of_light_km_s =
        get_or(chain, "speed_of_light_km_s", "chain", default_speed_of_light_km_s);

    if (chain.contains("homogeneous")) {
        const json& h = chain.at("homogeneous");
        const int n_links = as<int>(require(h, "n_links", "chain.homogeneous"),
                                    "chain.homogeneous.n_links");
        const double length = as<double>(require(h, "length_km", "chain.homogeneous"),
                                         "chain.homogeneous.length_km");
        const double coherence =
            h.contains("coherence_time_s")
                ? coherence_from_json(h.at("coherence_time_s"), "chain.homogeneous.coherence_time_s")
                : std::numeric_limits<double>::infinity();
        const LinkModel model =
            model_from_json(require(h, "model", "chain.homogeneous"), "chain.homogeneous.model");
        if (n_links < 1) throw ConfigError("config: chain.homogeneous.n_links must be >= 1");
        spec.nodes.assign(static_cast<std::size_t>(n_links) + 1, NodeSpec{coherence});
        spec.links.assign(static_cast<std::size_t>(n_links), LinkSpec{length, model});
    } else {
        const json& nodes = require(chain, "nodes", "chain");
        const json& links = require(chain, "links", "chain");
        if (!nodes.is_array() || !links.is_array()) {
            throw ConfigError("config: chain.nodes and chain.links must be arrays");
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const std::string path = "chain.nodes[" + std::to_string(i) + "]";
            NodeSpec node;
            if (nodes[i].contains("coherence_time_s")) {
                node.coherence_time_s =
                    coherence_from_json(nodes[i].at("coherence_time_s"), path + ".coherence_time_s");
            }
            spec.nodes.push_back(node);
        }
        for (std::size_t i = 0; i < links.size(); ++i) {
            const std::string path = "chain.links[" + std::to_string(i) + "]";
            LinkSpec link;
            link.length_km = as<double>(require(links[i], "length_km", path), path + ".length_km");
            link.model = model_from_json(require(links[i], "model", path), path + ".model");
            spec.links.push_back(link);
        }
    }

    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: chain: ") + e.what());
    }
    return spec;
}

json chain_to_json(const ChainSpec& spec) {
    json chain;
    chain["speed_of_light_km_s"] = spec.speed_of_light_km_s;
    chain["nodes"] = json::array();
    for (const auto& node : spec.nodes) {
        json n;
        if (std::isinf(node.coherence_time_s)) n["coherence_time_s"] = "inf";
        else n["coherence_time_s"] = node.coherence_time_s;
        chain["nodes"].push_back(n);
    }
    chain["links"] = json::array();
    for (const auto& link : spec.links) {
        json l;
        l["length_km"] = link.length_km;
        l["model"] = model_to_json(link.model);
        chain["links"].push_back(l);
    }
    return chain;
}

ProtocolConfig protocol_from_config(const json& root) {
    ProtocolConfig out;
    if (!root.contains("protocol")) return out;
    const json& p = root.at("protocol");
    const std::string type = get_or<std::string>(p, "type", "protocol", "multi");
    if (type == "single") out.protocol = Protocol::Single;
    else if (type == "multi") out.protocol = Protocol::Multi;
    else throw ConfigError("config: protocol.type must be \"single\" or \"multi\"");
    out.window.deliveries_per_sample =
        get_or(p, "deliveries_per_sample", "protocol", out.window.deliveries_per_sample);
    out.window.burn_in = get_or(p, "burn_in", "protocol", out.window.burn_in);
    out.end_node_storage = get_or(p, "end_node_storage", "protocol", out.end_node_storage);
    try {
        out.window.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return out;
}

json protocol_to_json(const ProtocolConfig& cfg) {
    json out;
    out["type"] = cfg.protocol == Protocol::Single ? "single" : "multi";
    out["deliveries_per_sample"] = cfg.window.deliveries_per_sample;
    out["burn_in"] = cfg.window.burn_in;
    out["end_node_storage"] = cfg.end_node_storage;
    return out;
}

BrightStateOptions optimize_from_config(const json& root) {
    BrightStateOptions out;
    if (!root.contains("optimize")) return out;
    const json& o = root.at("optimize");
    out.grid_min = get_or(o, "grid_min", "optimize", out.grid_min);
    out.grid_max = get_or(o, "grid_max", "optimize", out.grid_max);
    out.grid_points = get_or(o, "grid_points", "optimize", out.grid_points);
    out.grid_samples = get_or(o, "grid_samples", "optimize", out.grid_samples);
    out.iterations = get_or(o, "iterations", "optimize", out.iterations);
    out.iteration_samples = get_or(o, "samples_per_iteration", "optimize", out.iteration_samples);
    out.learning_rate = get_or(o, "learning_rate", "optimize", out.learning_rate);
    out.weighted_fit = get_or(o, "weighted_fit", "optimize", out.weighted_fit);
    out.final_samples = get_or(o, "final_samples", "optimize", out.final_samples);
    return out;
}

json optimize_to_json(const BrightStateOptions& options) {
    json out;
    out["grid_min"] = options.grid_min;
    out["grid_max"] = options.grid_max;
    out["grid_points"] = options.grid_points;
    out["grid_samples"] = options.grid_samples;
    out["iterations"] = options.iterations;
    out["samples_per_iteration"] = options.iteration_samples;
    out["learning_rate"] = options.learning_rate;
    out["weighted_fit"] = options.weighted_fit;
    out["final_samples"] = options.final_samples;
    return out;
}

PlacementJob placement_from_config(const json& root) {
    const json& p = require(root, "placement", "");
    PlacementJob job;
    const json& ends = require(p, "end_nodes", "placement");
    if (!ends.is_array() || ends.size() < 2) {
        throw ConfigError("config: placement.end_nodes must list at least 2 [x, y] pairs");
    }
    for (std::size_t i = 0; i < ends.size(); ++i) {
        const std::string path = "placement.end_nodes[" + std::to_string(i) + "]";
        if (!ends[i].is_array() || ends[i].size() != 2) {
            throw ConfigError("config: field \"" + path + "\" must be an [x, y] pair");
        }
        job.end_nodes.push_back({as<double>(ends[i][0], path), as<double>(ends[i][1], path)});
    }
    job.n_repeaters = as<int>(require(p, "n_repeaters", "placement"), "placement.n_repeaters");

    if (p.contains("hardware")) {
        const json& h = p.at("hardware");
        job.config.hardware.fidelity = get_or(h, "fidelity", "placement.hardware",
                                              job.config.hardware.fidelity);
        job.config.hardware.attenuation_db_per_km =
            get_or(h, "attenuation_db_per_km", "placement.hardware",
                   job.config.hardware.attenuation_db_per_km);
        job.config.hardware.coherence_time_s = get_or(h, "coherence_time_s", "placement.hardware",
                                                      job.config.hardware.coherence_time_s);
    }
    if (p.contains("schedule")) {
        const json& s = p.at("schedule");
        job.config.schedule.decay = get_or(s, "decay", "placement.schedule", job.config.schedule.decay);
        job.config.schedule.epochs = get_or(s, "epochs", "placement.schedule", job.config.schedule.epochs);
        job.config.schedule.iters_per_epoch =
            get_or(s, "iters_per_epoch", "placement.schedule", job.config.schedule.iters_per_epoch);
        if (s.contains("t0")) {
            const json& t0 = s.at("t0");
            if (t0.is_array()) {
                for (const auto& v : t0) job.config.t0_values.push_back(as<double>(v, "placement.schedule.t0"));
            } else {
                job.config.t0_values.push_back(as<double>(t0, "placement.schedule.t0"));
            }
        }
    }
    job.config.restarts = get_or(p, "restarts", "placement", job.config.restarts);
    if (p.contains("edge_cap_km")) {
        job.config.edge_cap_km = as<double>(p.at("edge_cap_km"), "placement.edge_cap_km");
    }
    const ProtocolConfig protocol = protocol_from_config(root);
    job.config.protocol = protocol.protocol;
    job.config.window = protocol.window;
    job.config.search_samples = get_or(p, "search_samples", "placement", job.config.search_samples);
    job.config.restart_eval_samples =
        get_or(p, "restart_eval_samples", "placement", job.config.restart_eval_samples);
    job.config.final_samples = get_or(p, "final_samples", "placement", job.config.final_samples);
    try {
        job.config.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: placement: ") + e.what());
    }
    return job;
}

json placement_to_json(const PlacementJob& job) {
    json out;
    out["end_nodes"] = json::array();
    for (const auto& node : job.end_nodes) out["end_nodes"].push_back({node.x, node.y});
    out["n_repeaters"] = job.n_repeaters;
    out["hardware"] = {{"fidelity", job.config.hardware.fidelity},
                       {"attenuation_db_per_km", job.config.hardware.attenuation_db_per_km},
                       {"coherence_time_s", job.config.hardware.coherence_time_s}};
    out["schedule"] = {{"t0", job.config.t0_values.empty()
                                  ? json(default_t0_values(job.end_nodes))
                                  : json(job.config.t0_values)},
                       {"decay", job.config.schedule.decay},
                       {"epochs", job.config.schedule.epochs},
                       {"iters_per_epoch", job.config.schedule.iters_per_epoch}};
    out["restarts"] = job.config.restarts;
    if (job.config.edge_cap_km) out["edge_cap_km"] = *job.config.edge_cap_km;
    out["search_samples"] = job.config.search_samples;
    out["restart_eval_samples"] = job.config.restart_eval_samples;
    out["final_samples"] = job.config.final_samples;
    return out;
}

FdCompareConfig fd_compare_from_config(const json& root) {
    FdCompareConfig out;
    if (!root.contains("fd_compare")) return out;
    const json& f = root.at("fd_compare");
    out.total_length_km = get_or(f, "total_length_km", "fd_compare", out.total_length_km);
    out.coherence_time_s = get_or(f, "coherence_time_s", "fd_compare", out.coherence_time_s);
    out.gamma_left = get_or(f, "gamma_left", "fd_compare", out.gamma_left);
    out.gamma_right = get_or(f, "gamma_right", "fd_compare", out.gamma_right);
    out.position_min_km = get_or(f, "position_min_km", "fd_compare", out.position_min_km);
    out.position_max_km = get_or(f, "position_max_km", "fd_compare", out.position_max_km);
    out.points = get_or(f, "points", "fd_compare", out.points);
    if (f.contains("epsilons_km")) {
        out.epsilons_km.clear();
        for (const auto& v : f.at("epsilons_km")) {
            out.epsilons_km.push_back(as<double>(v, "fd_compare.epsilons_km"));
        }
    }
    out.skr_samples = get_or(f, "skr_samples", "fd_compare", out.skr_samples);
    out.derivative_samples = get_or(f, "derivative_samples", "fd_compare", out.derivative_samples);
    if (out.points < 2) throw ConfigError("config: fd_compare.points must be >= 2");
    if (!(out.position_min_km > 0.0) || !(out.position_max_km < out.total_length_km) ||
        !(out.position_min_km < out.position_max_km)) {
        throw ConfigError("config: fd_compare positions must satisfy 0 < min < max < total_length");
    }
    return out;
}

json fd_compare_to_json(const FdCompareConfig& cfg) {
    json out;
    out["total_length_km"] = cfg.total_length_km;
    out["coherence_time_s"] = cfg.coherence_time_s;
    out["gamma_left"] = cfg.gamma_left;
    out["gamma_right"] = cfg.gamma_right;
    out["position_min_km"] = cfg.position_min_km;
    out["position_max_km"] = cfg.position_max_km;
    out["points"] = cfg.points;
    out["epsilons_km"] = cfg.epsilons_km;
    out["skr_samples"] = cfg.skr_samples;
    out["derivative_samples"] = cfg.derivative_samples;
    return out;
}

BenchmarkConfig benchmark_from_config(const json& root) {
    BenchmarkConfig out;
    if (!root.contains("benchmark")) return out;
    const json& b = root.at("benchmark");
    out.min_links = get_or(b, "min_links", "benchmark", out.min_links);
    out.max_links = get_or(b, "max_links", "benchmark", out.max_links);
    out.alpha_values = get_or(b, "alpha_values", "benchmark", out.alpha_values);
    out.samples_per_alpha = get_or(b, "samples_per_alpha", "benchmark", out.samples_per_alpha);
    out.length_km = get_or(b, "length_km", "benchmark", out.length_km);
    out.coherence_time_s = get_or(b, "coherence_time_s", "benchmark", out.coherence_time_s);
    out.single_shot = get_or(b, "single_shot", "benchmark", out.single_shot);
    out.multi_shot = get_or(b, "multi_shot", "benchmark", out.multi_shot);
    if (out.max_links < 2) throw ConfigError("config: benchmark.max_links must be >= 2");
    if (out.min_links < 1 || out.min_links > out.max_links) {
        throw ConfigError("config: benchmark.min_links must lie in [1, max_links]");
    }
    return out;
}

json benchmark_to_json(const BenchmarkConfig& cfg) {
    json out;
    out["min_links"] = cfg.min_links;
    out["max_links"] = cfg.max_links;
    out["alpha_values"] = cfg.alpha_values;
    out["samples_per_alpha"] = cfg.samples_per_alpha;
    out["length_km"] = cfg.length_km;
    out["coherence_time_s"] = cfg.coherence_time_s;
    out["single_shot"] = cfg.single_shot;
    out["multi_shot"] = cfg.multi_shot;
    return out;
}

}  // namespace repnet

#include "repnet/chain_model.hpp"

#include <cmath>

namespace repnet {

namespace {

struct SuccessVisitor {
    double length_km;

    double operator()(const FixedWernerLink& m) const {
        return transmission(m.attenuation_db_per_km, length_km);
    }
    double operator()(const SingleClickLink& m) const {
        return single_click_success(m.bright_state, m.attenuation_db_per_km, length_km);
    }
    double operator()(const DirectLink& m) const { return m.success_prob; }
};

struct WernerVisitor {
    double operator()(const FixedWernerLink& m) const { return werner_from_fidelity(m.fidelity); }
    double operator()(const SingleClickLink& m) const { return single_click_werner(m.bright_state); }
    double operator()(const DirectLink& m) const { return m.werner; }
};

void validate_model(const LinkModel& model, std::size_t index) {
    const std::string where = "link " + std::to_string(index);
    if (const auto* fw = std::get_if<FixedWernerLink>(&model)) {
        if (!(fw->fidelity > 0.25) || fw->fidelity > 1.0) {
            throw std::invalid_argument(where + ": fidelity must lie in (0.25, 1]");
        }
        if (!(fw->attenuation_db_per_km >= 0.0)) {
            throw std::invalid_argument(where + ": attenuation must be >= 0");
        }
    } else if (const auto* sc = std::get_if<SingleClickLink>(&model)) {
        if (!(sc->bright_state > 0.0) || !(sc->bright_state < 1.0)) {
            throw std::invalid_argument(where + ": bright_state must lie in (0, 1)");
        }
        if (!(sc->attenuation_db_per_km >= 0.0)) {
            throw std::invalid_argument(where + ": attenuation must be >= 0");
        }
    } else if (const auto* d = std::get_if<DirectLink>(&model)) {
        if (!(d->success_prob > 0.0) || d->success_prob > 1.0) {
            throw std::invalid_argument(where + ": success_prob must lie in (0, 1]");
        }
        if (d->werner < 0.0 || d->werner > 1.0) {
            throw std::invalid_argument(where + ": werner must lie in [0, 1]");
        }
    }
}

}  // namespace

double success_probability(const LinkSpec& link) {
    const double p = std::visit(SuccessVisitor{link.length_km}, link.model);
    if (p <= 0.0) {
        throw std::domain_error(
            "success_probability: underflowed to zero at length " +
            std::to_string(link.length_km) + " km; reduce the link length");
    }
    if (p > 1.0) {
        throw std::domain_error("success_probability: exceeds 1, check link parameters");
    }
    return p;
}

double initial_werner(const LinkSpec& link) {
    const double w = std::visit(WernerVisitor{}, link.model);
    if (w < 0.0 || w > 1.0) {
        throw std::domain_error("initial_werner: outside [0, 1], check link parameters");
    }
    return w;
}

void ChainSpec::validate() const {
    if (nodes.size() < 2) throw std::invalid_argument("chain: needs at least 2 nodes");
    if (links.size() != nodes.size() - 1) {
        throw std::invalid_argument("chain: expected " + std::to_string(nodes.size() - 1) +
                                    " links for " + std::to_string(nodes.size()) +
                                    " nodes, got " + std::to_string(links.size()));
    }
    if (!(speed_of_light_km_s > 0.0)) {
        throw std::invalid_argument("chain: speed_of_light must be > 0");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!(nodes[i].coherence_time_s > 0.0)) {
            throw std::invalid_argument("node " + std::to_string(i) +
                                        ": coherence_time must be > 0");
        }
    }
    for (std::size_t i = 0; i < links.size(); ++i) {
        if (!(links[i].length_km >= 0.0)) {
            throw std::invalid_argument("link " + std::to_string(i) + ": length must be >= 0");
        }
        validate_model(links[i].model, i);
        // Evaluates the derived quantities so range errors surface here.
        success_probability(links[i]);
        initial_werner(links[i]);
    }
}

}  // namespace repnet

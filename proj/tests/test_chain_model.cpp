#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "repnet/chain_model.hpp"
#include "repnet/skr.hpp"

using namespace repnet;

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();
}

TEST_CASE("attempt_duration is L / c") {
    CHECK(attempt_duration({100.0, FixedWernerLink{}}, 200000.0) == doctest::Approx(5e-4));
    CHECK(attempt_duration({0.0, FixedWernerLink{}}, 200000.0) == 0.0);
    CHECK(attempt_duration({65.0, FixedWernerLink{}}, 200000.0) == doctest::Approx(3.25e-4));
    CHECK_THROWS_AS(attempt_duration({1.0, FixedWernerLink{}}, 0.0), std::invalid_argument);
}

TEST_CASE("success_probability per link model") {
    CHECK(success_probability({50.0, FixedWernerLink{0.99, 0.2}}) == doctest::Approx(0.1));
    CHECK(success_probability({0.0, SingleClickLink{0.05, 0.2}}) == doctest::Approx(0.1));
    CHECK(success_probability({0.0, FixedWernerLink{0.99, 0.2}}) == doctest::Approx(1.0));
    CHECK(success_probability({10.0, DirectLink{0.37, 0.9}}) == 0.37);

    // overly long links underflow with advice
    try {
        (void)success_probability({20000.0, FixedWernerLink{0.99, 0.2}});
        FAIL("expected underflow");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("length") != std::string::npos);
    }
}

TEST_CASE("success_probability is non-increasing in length") {
    for (const double gamma : {0.2, 0.6}) {
        double prev_fixed = 2.0, prev_click = 2.0;
        for (double length = 0.0; length <= 200.0; length += 12.5) {
            const double p_fixed = success_probability({length, FixedWernerLink{0.99, gamma}});
            const double p_click = success_probability({length, SingleClickLink{0.07, gamma}});
            CHECK(p_fixed <= prev_fixed);
            CHECK(p_click <= prev_click);
            CHECK(p_fixed > 0.0);
            CHECK(p_fixed <= 1.0);
            prev_fixed = p_fixed;
            prev_click = p_click;
        }
    }
}

TEST_CASE("initial_werner per link model") {
    // alpha -> 0 limit gives a perfect pair
    CHECK(initial_werner({1.0, SingleClickLink{1e-12, 0.2}}) == doctest::Approx(1.0));
    CHECK(initial_werner({1.0, FixedWernerLink{0.99, 0.2}}) == doctest::Approx(0.9866666666666667));
    CHECK(initial_werner({1.0, FixedWernerLink{0.25 + 1e-12, 0.2}}) == doctest::Approx(0.0));
    CHECK(initial_werner({1.0, DirectLink{0.5, 0.85}}) == 0.85);
}

TEST_CASE("fidelity <-> werner round trip") {
    for (double f = 0.26; f <= 1.0; f += 0.01) {
        CHECK(fidelity_from_werner(werner_from_fidelity(f)) == doctest::Approx(f).epsilon(1e-15));
    }
}

TEST_CASE("decohere") {
    CHECK(decohere(0.9, 0.0, 5.0) == 0.9);
    CHECK(decohere(1.0, 5.0, 5.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(decohere(0.7, 123.0, inf) == 0.7);
    CHECK_THROWS_AS(decohere(0.9, -1.0, 5.0), std::invalid_argument);

    // multiplicative in time
    for (double t1 : {0.1, 1.0, 3.0}) {
        for (double t2 : {0.2, 2.0}) {
            CHECK(decohere(decohere(0.93, t1, 7.0), t2, 7.0) ==
                  doctest::Approx(decohere(0.93, t1 + t2, 7.0)).epsilon(1e-14));
        }
    }
}

TEST_CASE("swap_werner is commutative and associative") {
    CHECK(swap_werner(1.0, 1.0) == 1.0);
    CHECK(swap_werner(0.9, 0.0) == 0.0);
    CHECK(swap_werner(0.9, 0.8) == doctest::Approx(0.72));
    const double a = 0.91, b = 0.87, c = 0.79;
    CHECK(swap_werner(a, b) == swap_werner(b, a));
    CHECK(swap_werner(swap_werner(a, b), c) == doctest::Approx(swap_werner(a, swap_werner(b, c))).epsilon(1e-15));
}

TEST_CASE("chain validation") {
    ChainSpec chain;
    chain.nodes = {NodeSpec{10.0}, NodeSpec{10.0}, NodeSpec{10.0}};
    chain.links = {LinkSpec{65.0, SingleClickLink{0.05, 0.2}},
                   LinkSpec{65.0, SingleClickLink{0.05, 0.2}}};
    CHECK_NOTHROW(chain.validate());

    ChainSpec short_links = chain;
    short_links.links.pop_back();
    CHECK_THROWS_AS(short_links.validate(), std::invalid_argument);

    ChainSpec bad_node = chain;
    bad_node.nodes[1].coherence_time_s = 0.0;
    CHECK_THROWS_AS(bad_node.validate(), std::invalid_argument);

    ChainSpec bad_alpha = chain;
    bad_alpha.links[0].model = SingleClickLink{1.5, 0.2};
    CHECK_THROWS_AS(bad_alpha.validate(), std::invalid_argument);

    ChainSpec bad_c = chain;
    bad_c.speed_of_light_km_s = -1.0;
    CHECK_THROWS_AS(bad_c.validate(), std::invalid_argument);
}

TEST_CASE("binary entropy and secret fraction") {
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
    CHECK(secret_fraction(1.0) == doctest::Approx(1.0));
    // QBER 0.15 gives 1 - 2h < 0, clamped
    CHECK(secret_fraction(0.7) == 0.0);
    CHECK(secret_fraction_clamped(0.7));
    CHECK(secret_fraction_derivative(0.7) == 0.0);

    // finite-difference check of the secret fraction derivative
    const double w = 0.95, h = 1e-6;
    const double fd = (secret_fraction(w + h) - secret_fraction(w - h)) / (2.0 * h);
    CHECK(secret_fraction_derivative(w) == doctest::Approx(fd).epsilon(1e-6));
}

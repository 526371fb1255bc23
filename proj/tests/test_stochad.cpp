#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "stochad/estimate.hpp"
#include "stochad/random.hpp"
#include "stochad/samplers.hpp"
#include "stochad/triple.hpp"

using namespace stochad;

namespace {

bool within_se(double estimate, double truth, double se, double n_se = 4.0) {
    return std::fabs(estimate - truth) <= n_se * std::max(se, 1e-300);
}

}  // namespace

TEST_CASE("random source is deterministic per (seed, stream)") {
    RandomSource a(42, 7);
    RandomSource b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RandomSource c(42, 8);
    RandomSource d(43, 7);
    int diff_stream = 0, diff_seed = 0;
    RandomSource a2(42, 7);
    for (int i = 0; i < 64; ++i) {
        const auto x = a2.next_u64();
        if (x != c.next_u64()) ++diff_stream;
        if (x != d.next_u64()) ++diff_seed;
    }
    CHECK(diff_stream > 60);
    CHECK(diff_seed > 60);
}

TEST_CASE("auxiliary lane does not disturb the primary sequence") {
    RandomSource plain(9, 3);
    std::vector<std::uint64_t> expected;
    for (int i = 0; i < 32; ++i) expected.push_back(plain.next_u64());

    RandomSource mixed(9, 3);
    for (int i = 0; i < 32; ++i) {
        (void)mixed.aux_u64();
        CHECK(mixed.next_u64() == expected[static_cast<std::size_t>(i)]);
        (void)mixed.aux_double();
    }
}

TEST_CASE("sub-streams are deterministic and distinct") {
    RandomSource base(5, 0);
    RandomSource s1 = base.sub(1);
    RandomSource s1b = RandomSource(5, 0).sub(1);
    RandomSource s2 = base.sub(2);
    CHECK(s1.stream() == s1b.stream());
    CHECK(s1.stream() != s2.stream());
    CHECK(s1.next_u64() == s1b.next_u64());
}

TEST_CASE("uniform doubles stay in range") {
    RandomSource rng(1234, 0);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.next_open01();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("make_input and make_const") {
    const Triple x = make_input(3.0);
    CHECK(x.value == 3.0);
    CHECK(x.delta == 1.0);
    CHECK(!x.perturbation);

    const Triple z = make_input(0.0);
    CHECK(z.value == 0.0);
    CHECK(z.delta == 1.0);

    const Triple c = make_const(3.0);
    CHECK(c.delta == 0.0);
    CHECK(!c.perturbation);

    CHECK_THROWS_AS(make_input(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(make_input(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("derivative_estimate is delta + weight * jump") {
    CHECK(derivative_estimate(Triple{3.0, 0.5, Perturbation{-2.0, 0.25}}) == doctest::Approx(0.0));
    CHECK(derivative_estimate(Triple{3.0, 1.5, std::nullopt}) == 1.5);
    CHECK(derivative_estimate(Triple{0.0, 0.0, Perturbation{7.0, 0.0}}) == 0.0);
}

TEST_CASE("apply_smooth propagates value, delta and jumps") {
    // exp on (0, 1, (ln 2, 1.0)) -> (1, 1, (1, 1)) since e^{ln 2} - e^0 = 1.
    const Triple t{0.0, 1.0, Perturbation{std::log(2.0), 1.0}};
    const Triple e = exp_of(t);
    CHECK(e.value == doctest::Approx(1.0));
    CHECK(e.delta == doctest::Approx(1.0));
    REQUIRE(e.perturbation.has_value());
    CHECK(e.perturbation->jump == doctest::Approx(1.0));
    CHECK(e.perturbation->weight == doctest::Approx(1.0));

    // identity leaves any triple unchanged
    const Triple id = apply_smooth([](double x) { return x; }, [](double) { return 1.0; }, t);
    CHECK(id.value == t.value);
    CHECK(id.delta == t.delta);
    CHECK(id.perturbation->jump == t.perturbation->jump);
    CHECK(id.perturbation->weight == t.perturbation->weight);

    // x^2 on (3, 1, none) -> (9, 6, none)
    const Triple sq =
        apply_smooth([](double x) { return x * x; }, [](double x) { return 2.0 * x; }, make_input(3.0));
    CHECK(sq.value == 9.0);
    CHECK(sq.delta == 6.0);
    CHECK(!sq.perturbation);

    // log of a negative jump target is a domain error
    const Triple bad{1.0, 0.0, Perturbation{-2.0, 1.0}};
    CHECK_THROWS_AS(log_of(bad), std::domain_error);
}

TEST_CASE("combine: additive jump passthrough and product rule") {
    RandomSource rng(7, 0);
    const Triple a{1.0, 0.0, Perturbation{2.0, 0.5}};
    const Triple b{4.0, 0.0, std::nullopt};
    const Triple s = add(a, b, rng);
    CHECK(s.value == 5.0);
    CHECK(s.delta == 0.0);
    REQUIRE(s.perturbation.has_value());
    CHECK(s.perturbation->jump == 2.0);
    CHECK(s.perturbation->weight == 0.5);

    const Triple p = mul(Triple{3.0, 1.0, std::nullopt}, Triple{5.0, 2.0, std::nullopt}, rng);
    CHECK(p.value == 15.0);
    CHECK(p.delta == doctest::Approx(11.0));
    CHECK(!p.perturbation);
}

TEST_CASE("combine rejects negative weights") {
    RandomSource rng(7, 0);
    const Triple bad{1.0, 0.0, Perturbation{1.0, -0.5}};
    CHECK_THROWS_AS(add(bad, make_const(1.0), rng), std::invalid_argument);
}

TEST_CASE("pruning preserves the first moment of w * jump") {
    // add on (1,0,(2,1)) and (1,0,(-2,1)): each outcome has weight 2 and
    // jump +-2 with probability 1/2; the average of w * jump must equal
    // w_a j_a + w_b j_b = 0. Also check an asymmetric pair.
    RandomSource rng(11, 0);
    const int n = 200000;

    double mean_sym = 0.0;
    for (int i = 0; i < n; ++i) {
        const Triple s = add(Triple{1.0, 0.0, Perturbation{2.0, 1.0}},
                             Triple{1.0, 0.0, Perturbation{-2.0, 1.0}}, rng);
        REQUIRE(s.perturbation.has_value());
        CHECK(s.perturbation->weight == doctest::Approx(2.0));
        CHECK(std::fabs(s.perturbation->jump) == doctest::Approx(2.0));
        mean_sym += s.perturbation->weight * s.perturbation->jump;
    }
    mean_sym /= n;
    // each trial contributes +-4, so se = 4 / sqrt(n)
    CHECK(within_se(mean_sym, 0.0, 4.0 / std::sqrt(static_cast<double>(n))));

    const double wa = 0.3, ja = 1.7, wb = 1.1, jb = -0.4;
    double mean_asym = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const Triple s = add(Triple{0.0, 0.0, Perturbation{ja, wa}},
                             Triple{0.0, 0.0, Perturbation{jb, wb}}, rng);
        const double contrib = s.perturbation->weight * s.perturbation->jump;
        mean_asym += contrib;
        sq += contrib * contrib;
    }
    mean_asym /= n;
    const double se = std::sqrt((sq / n - mean_asym * mean_asym) / n);
    CHECK(within_se(mean_asym, wa * ja + wb * jb, se));
}

TEST_CASE("triple operators reject double perturbations without an rng") {
    const Triple a{1.0, 0.0, Perturbation{1.0, 1.0}};
    const Triple b{2.0, 0.0, Perturbation{1.0, 1.0}};
    CHECK_THROWS_AS(a * b, std::logic_error);
    CHECK((a * 2.0).value == 2.0);
    CHECK((a * 2.0).perturbation->jump == 2.0);
    CHECK((3.0 - a).value == 2.0);
    CHECK((3.0 - a).perturbation->jump == -1.0);
}

TEST_CASE("bernoulli sampler: coupling structure") {
    RandomSource rng(21, 0);
    const Triple p{0.3, 1.0, std::nullopt};
    int zeros = 0, ones = 0;
    for (int i = 0; i < 2000; ++i) {
        const Triple s = sample_bernoulli(p, rng);
        CHECK(s.delta == 0.0);
        if (s.value == 0.0) {
            ++zeros;
            REQUIRE(s.perturbation.has_value());
            CHECK(s.perturbation->jump == 1.0);
            CHECK(s.perturbation->weight == doctest::Approx(1.0 / 0.7));
        } else {
            ++ones;
            CHECK(s.value == 1.0);
            CHECK(!s.perturbation);
        }
    }
    CHECK(zeros > 0);
    CHECK(ones > 0);

    // zero delta: a plain sample, never perturbed
    for (int i = 0; i < 100; ++i) {
        const Triple s = sample_bernoulli(Triple{0.3, 0.0, std::nullopt}, rng);
        CHECK(!s.perturbation);
    }

    CHECK_THROWS_AS(sample_bernoulli(Triple{1.5, 1.0, std::nullopt}, rng), std::domain_error);
    CHECK_THROWS_AS(sample_bernoulli(Triple{0.3, 1.0, Perturbation{0.1, 1.0}}, rng),
                    std::invalid_argument);
}

TEST_CASE("geometric sampler: coupling structure") {
    RandomSource rng(22, 0);
    const double p = 0.2;
    bool saw_long = false;
    for (int i = 0; i < 5000; ++i) {
        const Triple s = sample_geometric(Triple{p, 1.0, std::nullopt}, rng);
        CHECK(s.value >= 1.0);
        CHECK(s.delta == 0.0);
        if (s.value == 1.0) {
            CHECK(!s.perturbation);
        } else {
            REQUIRE(s.perturbation.has_value());
            // weight is delta * (n-1) / (1-p); jump is k - n for k in [1, n-1]
            CHECK(s.perturbation->weight == doctest::Approx((s.value - 1.0) / (1.0 - p)));
            CHECK(s.perturbation->jump <= -1.0);
            CHECK(s.perturbation->jump >= 1.0 - s.value);
            if (s.value == 5.0) saw_long = true;
        }
    }
    CHECK(saw_long);

    // decreasing direction appends a fresh geometric tail
    for (int i = 0; i < 1000; ++i) {
        const Triple s = sample_geometric(Triple{p, -1.0, std::nullopt}, rng);
        REQUIRE(s.perturbation.has_value());
        CHECK(s.perturbation->jump >= 1.0);
        CHECK(s.perturbation->weight == doctest::Approx(1.0 / p));
    }
}

TEST_CASE("geometric derivative estimator is unbiased: d E[N] / dp = -1/p^2") {
    for (const double p : {0.1, 0.2, 0.5}) {
        const auto res = estimate(
            [](const Triple& param, RandomSource& rng) { return sample_geometric(param, rng); }, p,
            100000, 2024);
        CHECK(within_se(res.mean, 1.0 / p, res.std_error));
        CHECK(within_se(res.derivative_mean, -1.0 / (p * p), res.derivative_std_error));
    }
}

TEST_CASE("bernoulli derivative estimator is unbiased: d E[B] / dp = 1") {
    for (const double p : {0.3, 0.5}) {
        const auto res = estimate(
            [](const Triple& param, RandomSource& rng) { return sample_bernoulli(param, rng); }, p,
            100000, 99);
        CHECK(within_se(res.mean, p, res.std_error));
        CHECK(within_se(res.derivative_mean, 1.0, res.derivative_std_error));
    }
}

TEST_CASE("smooth-only programs reduce to exact forward AD") {
    // f(x) = log(1 + x^2 exp(-x/3)) + x sqrt(x)
    const auto program = [](const Triple& x, RandomSource& rng) {
        const Triple x2 = mul(x, x, rng);
        const Triple decay = exp_of(scale(x, -1.0 / 3.0));
        const Triple inner = shift(mul(x2, decay, rng), 1.0);
        return add(log_of(inner), mul(x, sqrt_of(x), rng), rng);
    };
    const double x = 1.7;
    RandomSource rng(3, 0);
    const Triple out = program(make_input(x), rng);

    const double u = x * x * std::exp(-x / 3.0);
    const double du = (2.0 * x - x * x / 3.0) * std::exp(-x / 3.0);
    const double expected = du / (1.0 + u) + 1.5 * std::sqrt(x);
    CHECK(out.value == doctest::Approx(std::log(1.0 + u) + x * std::sqrt(x)).epsilon(1e-14));
    CHECK(derivative_estimate(out) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("estimate: analytic means and determinism") {
    const auto geom = [](const Triple& p, RandomSource& rng) { return sample_geometric(p, rng); };
    const auto a = estimate(geom, 0.2, 50000, 7777);
    CHECK(within_se(a.mean, 5.0, a.std_error));
    CHECK(within_se(a.derivative_mean, -25.0, a.derivative_std_error));

    const auto b = estimate(geom, 0.2, 50000, 7777);
    CHECK(a.mean == b.mean);
    CHECK(a.derivative_mean == b.derivative_mean);
    CHECK(a.std_error == b.std_error);

    // parallel mode is statistically identical: same per-sample streams
    const auto c = estimate(geom, 0.2, 50000, 7777, 2);
    CHECK(c.mean == doctest::Approx(a.mean).epsilon(1e-12));
    CHECK(c.derivative_mean == doctest::Approx(a.derivative_mean).epsilon(1e-12));

    CHECK_THROWS_AS(estimate(geom, 0.2, 1, 7777), std::invalid_argument);
}

TEST_CASE("estimate: sample failures carry the sample index") {
    const auto program = [](const Triple& p, RandomSource& rng) -> Triple {
        const Triple g = sample_geometric(p, rng);
        if (rng.stream() == 13) throw std::runtime_error("boom");
        return g;
    };
    try {
        (void)estimate(program, 0.5, 100, 0);
        FAIL("expected failure");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("sample 13") != std::string::npos);
    }
}

TEST_CASE("weights stay non-negative through random op chains") {
    RandomSource rng(31337, 0);
    for (int trial = 0; trial < 2000; ++trial) {
        Triple t = sample_geometric(Triple{0.1 + 0.8 * rng.next_double(), 1.0, std::nullopt}, rng);
        for (int step = 0; step < 8; ++step) {
            const Triple other =
                sample_geometric(Triple{0.1 + 0.8 * rng.next_double(), -1.0, std::nullopt}, rng);
            switch (rng.next_below(4)) {
                case 0: t = add(t, other, rng); break;
                case 1: t = mul(scale(t, 0.5), other, rng); break;
                case 2: t = smax(t, other, rng); break;
                default: t = sub(t, other, rng); break;
            }
            if (t.perturbation) CHECK(t.perturbation->weight >= 0.0);
        }
    }
}

TEST_CASE("derivative variance is bounded with no tolerance knob") {
    // The estimator has no epsilon hyperparameter at all; its per-sample
    // variance is a fixed, finite property of the sampler and p.
    for (const double p : {0.05, 0.2, 0.5}) {
        const auto res = estimate(
            [](const Triple& q, RandomSource& rng) { return sample_geometric(q, rng); }, p,
            100000, 771);
        const double sample_var = res.derivative_std_error * res.derivative_std_error * 100000;
        CHECK(std::isfinite(sample_var));
        CHECK(sample_var > 0.0);
        // within an order of magnitude of the analytic scale 1/p^4
        CHECK(sample_var < 100.0 / (p * p * p * p));
    }
}

TEST_CASE("smax ties symmetrize the delta") {
    RandomSource rng(1, 0);
    const Triple a{2.0, 1.0, std::nullopt};
    const Triple b{2.0, -1.0, std::nullopt};
    const Triple m = smax(a, b, rng);
    CHECK(m.value == 2.0);
    CHECK(m.delta == 0.0);
    const Triple c{3.0, 1.0, std::nullopt};
    CHECK(smax(c, b, rng).delta == 1.0);
    CHECK(smax(b, c, rng).delta == 1.0);
}

#include <doctest.h>

#include "mcmarket/json_io.hpp"
#include "mcmarket/scenario.hpp"

#include <cmath>

using namespace mcmarket;

namespace {

/// Three states chained 0 -> 1 -> 2 with distinct total rates (1, 2, 0).
MarketModel chain_model() {
    MarketModel m;
    m.n = 3;
    m.m = 1;
    m.lambda = Eigen::MatrixXd::Zero(3, 3);
    m.lambda(0, 1) = 1.0;
    m.lambda(1, 2) = 2.0;
    m.r = Eigen::VectorXd::Zero(3);
    m.mu = Eigen::MatrixXd::Zero(1, 3);
    m.mu << 0.1, -0.2, 0.0;
    m.beta.assign(1, Eigen::MatrixXd::Zero(3, 3));
    m.beta[0](0, 1) = 0.05;
    m.beta[0](1, 2) = -0.07;
    m.s0 = Eigen::VectorXd::Ones(1);
    m.horizon = 1.0;
    m.y0 = 0;
    return m;
}

}  // namespace

TEST_CASE("scenario structure helpers") {
    Scenario h{{0, 1, 0, 1}};
    CHECK(h.length() == 3);
    CHECK(h.initial() == 0);
    CHECK(h.terminal() == 1);
    CHECK(h.prefix(1).states == std::vector<int>{0, 1});
    CHECK(h.suffix(2).states == std::vector<int>{0, 1});
    CHECK(h.str() == "1>2>1>2");
    CHECK(h.valid(2));
    CHECK_FALSE(Scenario{{0, 0}}.valid(2));

    auto joined = concat(Scenario{{0, 1}}, Scenario{{1, 0}});
    REQUIRE(joined.has_value());
    CHECK(joined->states == std::vector<int>{0, 1, 0});
    CHECK_FALSE(concat(Scenario{{0, 1}}, Scenario{{0, 1}}).has_value());
}

TEST_CASE("admissibility and enumeration") {
    MarketModel ts = builtin_model("twostate");
    CHECK(admissible(ts, Scenario{{0, 1, 0}}));

    MarketModel chain = chain_model();
    CHECK(admissible(chain, Scenario{{0, 1, 2}}));
    CHECK_FALSE(admissible(chain, Scenario{{0, 2}}));
    CHECK_FALSE(admissible(chain, Scenario{{1, 0}}));

    CHECK(enumerate_scenarios(ts, 0, 3).size() == 4);   // one skeleton per length
    CHECK(enumerate_scenarios(builtin_model("kh"), 0, 2).size() == 7);  // 1 + 2 + 4
    CHECK(enumerate_scenarios(chain, 0, 5).size() == 3);  // absorbing end
    CHECK(enumerate_scenarios(ts, 0, 0).size() == 1);
}

TEST_CASE("scenario probabilities match closed forms") {
    MarketModel ts = builtin_model("twostate");
    MarketModel kh = builtin_model("kh");

    // Unit total rates: probability of n jumps in [0,1] is e^-1 / n!.
    CHECK(scenario_probability(ts, Scenario{{0}}, 1.0) ==
          doctest::Approx(0.36787944117144233).epsilon(1e-13));
    CHECK(scenario_probability(ts, Scenario{{0, 1}}, 1.0) ==
          doctest::Approx(0.36787944117144233).epsilon(1e-13));
    CHECK(scenario_probability(ts, Scenario{{0, 1, 0}}, 1.0) ==
          doctest::Approx(0.18393972058572117).epsilon(1e-13));

    // kh: total rate 2 everywhere, each 2-jump skeleton picks its edges.
    CHECK(scenario_probability(kh, Scenario{{0}}, 1.0) ==
          doctest::Approx(0.1353352832366127).epsilon(1e-13));
    CHECK(scenario_probability(kh, Scenario{{0, 1, 2}}, 1.0) ==
          doctest::Approx(0.06766764161830635).epsilon(1e-13));

    // Distinct total rates (1, 2, 0) hit the hypoexponential branch.
    MarketModel chain = chain_model();
    CHECK(scenario_probability(chain, Scenario{{0, 1}}, 1.0) ==
          doctest::Approx(0.23254415793482963).epsilon(1e-12));
    CHECK(scenario_probability(chain, Scenario{{0, 1, 2}}, 1.0) ==
          doctest::Approx(0.39957640089372803).epsilon(1e-12));
}

TEST_CASE("closed forms agree with the ODE quadrature") {
    MarketModel kh = builtin_model("kh");
    MarketModel ts = builtin_model("twostate");
    MarketModel chain = chain_model();

    for (const auto& [model, h] : {
             std::pair<const MarketModel&, Scenario>{kh, Scenario{{0, 1, 2, 0}}},
             {kh, Scenario{{0, 2}}},
             {ts, Scenario{{0, 1, 0, 1}}},
             {chain, Scenario{{0, 1, 2}}},
         }) {
        double closed = scenario_probability(model, h, 1.0);
        double quad = scenario_probability_quadrature(model, h, 1.0);
        CHECK(std::abs(closed - quad) <= 1e-8 * std::max(1.0, std::abs(closed)));
    }
}

TEST_CASE("near-equal rates fall back to the quadrature and stay accurate") {
    MarketModel m = chain_model();
    m.lambda(1, 2) = 1.0 + 1e-6;  // too close to 1 for the hypoexponential form
    double got = scenario_probability(m, Scenario{{0, 1}}, 1.0);
    CHECK(got == doctest::Approx(0.3678792572178099).epsilon(1e-10));
}

TEST_CASE("enumerated mass accounts for everything but the jump tail") {
    MarketModel ts = builtin_model("twostate");
    double mass = 0.0;
    for (const Scenario& h : enumerate_scenarios(ts, 0, 8))
        mass += scenario_probability(ts, h, 1.0);
    // What is missing is exactly P(more than 8 jumps) for a Poisson(1) count.
    CHECK(1.0 - mass == doctest::Approx(1.1252025978736313e-06).epsilon(1e-6));
}

TEST_CASE("increment geometry: vertices and dimensions") {
    MarketModel ts = builtin_model("twostate");
    Scenario up{{0, 1}};

    Eigen::MatrixXd v = scenario_vertices(ts, up, 1.0);
    REQUIRE(v.cols() == 2);
    // All the window in state 0 vs all of it in state 1.
    CHECK(v(0, 0) == doctest::Approx(std::log(1.1) - 0.5).epsilon(1e-13));
    CHECK(v(0, 1) == doctest::Approx(std::log(1.1) + 0.5).epsilon(1e-13));

    CHECK(scenario_dim(ts, up) == 1);
    CHECK(scenario_dim(ts, Scenario{{0}}) == 0);
    CHECK(suffix_dims(ts, Scenario{{0, 1, 0, 1}}) == std::vector<int>{1, 1, 1, 0});

    // kh: identical effective drift in every state collapses everything.
    MarketModel kh = builtin_model("kh");
    CHECK(suffix_dims(kh, Scenario{{0, 1, 2, 0}}) == std::vector<int>{0, 0, 0, 0});
    CHECK(scenario_dim(kh, Scenario{{0, 1}}) == 0);

    // Dimensions never grow along the suffix chain.
    auto dims = suffix_dims(ts, Scenario{{0, 1, 0, 1, 0}});
    for (std::size_t k = 1; k < dims.size(); ++k) CHECK(dims[k] <= dims[k - 1]);
}

TEST_CASE("conditional sojourn sampling fills the window") {
    MarketModel ts = builtin_model("twostate");
    Rng rng(8);
    ConditionalSample cs = sample_sojourn_times(ts, Scenario{{0, 1, 0}}, 1.0, 256, rng);
    REQUIRE(cs.draws.size() == 256);
    CHECK(cs.acceptance_rate == 1.0);  // equal rates: nothing to reject
    for (const auto& d : cs.draws) {
        REQUIRE(d.size() == 3);
        CHECK(d.minCoeff() > 0.0);
        CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }

    MarketModel chain = chain_model();
    Rng rng2(9);
    ConditionalSample cc = sample_sojourn_times(chain, Scenario{{0, 1, 2}}, 1.0, 128, rng2);
    CHECK(cc.acceptance_rate > 0.0);
    CHECK(cc.acceptance_rate <= 1.0);
    for (const auto& d : cc.draws) CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("terminal density estimate recovers a known uniform") {
    // twostate, one jump: increment = log(1.1) + 0.5 - dt with dt uniform on
    // (0,1) after conditioning (equal rates), so the density is 1 on the
    // segment.
    MarketModel ts = builtin_model("twostate");
    Rng rng(14);
    Eigen::VectorXd target(1);
    target << 0.0;
    double dens = terminal_density_estimate(ts, Scenario{{0, 1}}, 1.0, target, 8192, rng);
    CHECK(dens == doctest::Approx(1.0).epsilon(0.12));

    // Far off the support the estimate decays to nothing.
    target << 2.0;
    Rng rng2(14);
    CHECK(terminal_density_estimate(ts, Scenario{{0, 1}}, 1.0, target, 1024, rng2) <
          1e-12);
}

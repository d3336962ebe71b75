#include <doctest.h>

#include "mcmarket/insider.hpp"
#include "mcmarket/json_io.hpp"

#include <cmath>

using namespace mcmarket;

namespace {

PathRecord make_path(int y0, double horizon, std::vector<JumpEvent> events) {
    PathRecord p;
    p.y0 = y0;
    p.horizon = horizon;
    p.events = std::move(events);
    return p;
}

}  // namespace

TEST_CASE("first sojourn: a one-jump continuation is pinned by the target") {
    MarketModel ts = builtin_model("twostate");
    // increment(dt) = log(1.1) - 0.5 dt + 0.5 (1 - dt) = 0.59531... - dt.
    Eigen::VectorXd target(1);
    target << -0.3;
    FirstSojournInfo info = first_sojourn_info(ts, Scenario{{0, 1}}, 1.0, target);
    REQUIRE(info.consistent);
    CHECK(info.determined);
    CHECK(info.value == doctest::Approx(std::log(1.1) + 0.8).epsilon(1e-12));
    CHECK(info.lo == doctest::Approx(info.value).epsilon(1e-9));
    CHECK(info.hi == doctest::Approx(info.value).epsilon(1e-9));
    CHECK(info.support_dim == 1);
    CHECK(info.tail_dim == 0);
}

TEST_CASE("first sojourn: extra jumps leave an interval") {
    MarketModel ts = builtin_model("twostate");
    Eigen::VectorXd target(1);
    target << -0.3;
    FirstSojournInfo info = first_sojourn_info(ts, Scenario{{0, 1, 0}}, 1.0, target);
    REQUIRE(info.consistent);
    CHECK_FALSE(info.determined);
    // The middle sojourn is pinned; the first one roams below 1 - dt1.
    const double dt1 = -0.3 + 0.5 - std::log(0.99);
    CHECK(info.lo == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(info.hi == doctest::Approx(1.0 - dt1).epsilon(1e-9));
    CHECK(info.support_dim == 1);
    CHECK(info.tail_dim == 1);
}

TEST_CASE("first sojourn: unreachable targets are inconsistent") {
    MarketModel ts = builtin_model("twostate");
    Eigen::VectorXd target(1);
    target << -0.45;  // below the one-jump segment, which ends at log(1.1)-0.5
    FirstSojournInfo info = first_sojourn_info(ts, Scenario{{0, 1}}, 1.0, target);
    CHECK_FALSE(info.consistent);
    CHECK(info.hull_distance > 1e-3);
    CHECK_FALSE(info.determined);
}

TEST_CASE("jump classification brackets the realized times") {
    MarketModel ts = builtin_model("twostate");
    PathRecord p = make_path(0, 1.0, {{0.3, 0, 1}});
    Eigen::VectorXd ell = log_discounted_prices(ts, p, 1.0);

    auto jumps = classify_jumps(ts, p, ell);
    REQUIRE(jumps.size() == 1);
    CHECK(jumps[0].k == 1);
    CHECK(jumps[0].determined);
    CHECK(jumps[0].announced == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(jumps[0].dim_drop);
    CHECK(jumps[0].lower <= 0.3 + 1e-9);
    CHECK(jumps[0].upper >= 0.3 - 1e-9);
}

TEST_CASE("jump classification on a multi-jump path pins only the closer") {
    MarketModel ts = builtin_model("twostate");
    PathRecord p = make_path(0, 1.0, {{0.2, 0, 1}, {0.5, 1, 0}, {0.8, 0, 1}});
    Eigen::VectorXd ell = log_discounted_prices(ts, p, 1.0);

    auto jumps = classify_jumps(ts, p, ell);
    REQUIRE(jumps.size() == 3);
    for (const auto& jc : jumps) {
        CHECK(jc.lower <= p.events[static_cast<std::size_t>(jc.k - 1)].t + 1e-9);
        CHECK(jc.upper >= p.events[static_cast<std::size_t>(jc.k - 1)].t - 1e-9);
    }
    CHECK_FALSE(jumps[0].determined);
    CHECK_FALSE(jumps[1].determined);
    CHECK(jumps[2].determined);  // the last sojourn closes the accounting
    CHECK(jumps[2].announced == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("jump classification without information content") {
    // kh: every state has the same effective drift, so the terminal value
    // says nothing about the timing.
    MarketModel kh = builtin_model("kh");
    PathRecord p = make_path(0, 1.0, {{0.4, 0, 1}, {0.9, 1, 2}});
    Eigen::VectorXd ell = log_discounted_prices(kh, p, 1.0);

    auto jumps = classify_jumps(kh, p, ell);
    REQUIRE(jumps.size() == 2);
    for (const auto& jc : jumps) {
        CHECK_FALSE(jc.determined);
        CHECK_FALSE(jc.dim_drop);
        CHECK(jc.upper - jc.lower > 0.1);
    }
}

TEST_CASE("posterior: exact stop increment is an atom") {
    MarketModel ts = builtin_model("twostate");
    Eigen::VectorXd target(1);
    target << -0.5;  // exactly nu_0 * window: no jump happened
    PosteriorOptions opt;
    Rng rng(3);
    Posterior post = continuation_posterior(ts, 0, 1.0, target, opt, rng);
    CHECK(post.atomic);
    CHECK(post.dim == 0);
    CHECK(post.stop_weight == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(post.entries.size() == 1);
    CHECK(post.entries[0].g.length() == 0);
}

TEST_CASE("posterior: continuous targets weight the lowest stratum") {
    MarketModel ts = builtin_model("twostate");
    Eigen::VectorXd target(1);
    target << -0.3;
    PosteriorOptions opt;
    opt.density_samples = 2048;
    Rng rng(5);
    Posterior post = continuation_posterior(ts, 0, 1.0, target, opt, rng);

    CHECK_FALSE(post.atomic);
    CHECK(post.dim == 1);
    CHECK(post.stop_weight == 0.0);
    REQUIRE_FALSE(post.entries.empty());

    double total = 0.0;
    double w_short = 0.0;
    for (const auto& cw : post.entries) {
        CHECK(cw.dim == 1);
        CHECK(cw.weight >= 0.0);
        total += cw.weight;
        if (cw.g.states == std::vector<int>{0, 1}) {
            w_short = cw.weight;
            CHECK(cw.first.determined);
        }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    // Exact ingredients: pi(0>1) = e^-1 with uniform density 1, pi(0>1>0) =
    // e^-1/2 with Beta(1,2) density ~1.58, and so on; normalizing puts the
    // one-jump skeleton at ~0.50.
    CHECK(w_short == doctest::Approx(0.50).epsilon(0.12));
}

TEST_CASE("compensator: atom plus continuous part account for one") {
    MarketModel ts = builtin_model("twostate");
    Eigen::VectorXd target(1);
    target << -0.3;
    PosteriorOptions opt;
    opt.density_samples = 2048;
    Rng rng(7);
    MixtureCompensator mix = next_jump_compensator(ts, 0, 1.0, target, 16, opt, rng);

    REQUIRE(mix.atoms.size() == 1);
    CHECK(mix.atoms[0].time == doctest::Approx(std::log(1.1) + 0.8).epsilon(1e-9));
    CHECK(mix.atoms[0].targets == std::vector<int>{1});
    CHECK(mix.atoms[0].mass == doctest::Approx(mix.atom_mass).epsilon(1e-12));

    CHECK(mix.stop_mass == 0.0);
    CHECK(mix.atom_mass + mix.continuous_mass + mix.stop_mass ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mix.atom_mass == doctest::Approx(0.50).epsilon(0.15));

    double recovered = 0.0;
    for (const auto& b : mix.bins) {
        CHECK(b.hazard >= 0.0);
        CHECK(b.t_hi > b.t_lo);
        recovered += b.hazard * b.exposure;
    }
    // hazard = weighted jumps / exposure per bin, so this total is exactly
    // the continuous mass that was binned.
    CHECK(recovered == doctest::Approx(mix.continuous_mass).epsilon(1e-6));
}

TEST_CASE("compensator: pure stop leaves no next jump") {
    MarketModel ts = builtin_model("twostate");
    Eigen::VectorXd target(1);
    target << -0.5;
    PosteriorOptions opt;
    Rng rng(9);
    MixtureCompensator mix = next_jump_compensator(ts, 0, 1.0, target, 8, opt, rng);
    CHECK(mix.stop_mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mix.atoms.empty());
    CHECK(mix.atom_mass == 0.0);
    CHECK(mix.continuous_mass == 0.0);
}

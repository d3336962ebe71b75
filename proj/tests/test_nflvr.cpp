#include <doctest.h>

#include "mcmarket/json_io.hpp"
#include "mcmarket/nflvr.hpp"

#include <cmath>

using namespace mcmarket;

TEST_CASE("scan dates the drift failure on a kh path") {
    MarketModel kh = builtin_model("kh");
    Rng rng = Rng::path_stream(1, 0);
    PathRecord p = simulate_path(kh, rng);
    REQUIRE(p.events.size() == 4);  // 1>2>1>2>3, three up-moves and one down
    Eigen::VectorXd ell = log_discounted_prices(kh, p, kh.horizon);

    PosteriorOptions opt;
    Rng scan_rng(9);
    FlvrScan scan = flvr_scan(kh, p, ell, opt, scan_rng);

    CHECK_FALSE(scan.holds);
    // After the second jump the remaining increment can only be two up-moves
    // (the jump sizes are incommensurable), so the down-risk premium in the
    // drift dies and the interval check fails right at that jump.
    CHECK(scan.drift_failure_time == p.events[1].t);
    CHECK(scan.drift_failure_time == doctest::Approx(0.21206011284514426).epsilon(1e-12));
    CHECK(scan.free_lunch_time == scan.drift_failure_time);
    CHECK(scan.predictable_failure_time == kh.horizon);  // nothing was pinned

    ArbitrageStrategy strat = build_strategy(p, scan);
    REQUIRE(strat.available);
    CHECK(strat.kind == "drift");
    CHECK(strat.guaranteed);
    CHECK(strat.entry_time == scan.free_lunch_time);
    CHECK(strat.exit_time == p.events[2].t);  // next realized jump
    CHECK(strat.position(0) > 0.0);           // long the up-only asset

    double pnl = strategy_pnl(kh, p, strat.position, strat.entry_time, strat.exit_time);
    CHECK(pnl > 0.0);
}

TEST_CASE("scan collects announced failures from the conditional law") {
    MarketModel ts = builtin_model("twostate");
    Rng rng = Rng::path_stream(4, 0);
    PathRecord p = simulate_path(ts, rng);
    REQUIRE(p.events.size() == 3);
    Eigen::VectorXd ell = log_discounted_prices(ts, p, ts.horizon);

    PosteriorOptions opt;
    Rng scan_rng(9);
    FlvrScan scan = flvr_scan(ts, p, ell, opt, scan_rng);
    CHECK_FALSE(scan.holds);

    // From the state after the first jump, the single-jump continuation
    // 2>1 pins its jump time; the homogeneous one-column system cannot be
    // strictly positive, so that announced time is a free-lunch date even
    // though the realized path jumped elsewhere.
    const double t1 = p.events[0].t;
    const double w = ts.horizon - t1;
    const double l_t1 = -0.5 * t1 + std::log(1.1);
    const double target = ell(0) - l_t1;
    const double theta = t1 + (target - std::log(0.9) + 0.5 * w);
    CHECK(scan.predictable_failure_time == doctest::Approx(theta).epsilon(1e-9));
    CHECK(scan.predictable_failure_time ==
          doctest::Approx(0.35781199553423354).epsilon(1e-12));
    CHECK(scan.free_lunch_time == scan.predictable_failure_time);
    CHECK(scan.free_lunch_time < scan.drift_failure_time);

    bool found = false;
    for (const auto& pc : scan.predictable) {
        if (std::abs(pc.time - theta) < 1e-9) {
            found = true;
            CHECK_FALSE(pc.feasible);
            CHECK(pc.targets == std::vector<int>{0});
            CHECK(pc.state == 1);
        }
    }
    CHECK(found);

    ArbitrageStrategy strat = build_strategy(p, scan);
    REQUIRE(strat.available);
    CHECK(strat.kind == "predictable-jump");
    CHECK(strat.exit_time == doctest::Approx(theta).epsilon(1e-12));
    CHECK(strat.entry_time < strat.exit_time);
    CHECK(strat.position(0) < 0.0);  // short into the pinned down-jump

    // On the realized path nothing jumps at theta; the position still nets
    // the drift leg.
    double pnl = strategy_pnl(ts, p, strat.position, strat.entry_time, strat.exit_time);
    double drift_leg = -std::expm1(-0.5 * (strat.exit_time - strat.entry_time));
    CHECK(pnl == doctest::Approx(drift_leg).epsilon(1e-12));
}

TEST_CASE("ambiguous terminal information keeps the market fair to the end") {
    MarketModel ts = builtin_model("twostate");
    PathRecord p;
    p.y0 = 0;
    p.horizon = 1.0;  // no jumps realized

    // Any level strictly inside the one-extra-jump band but off every atom:
    // the posterior keeps both jump directions alive the whole way.
    Eigen::VectorXd ell(1);
    ell << -0.45;

    PosteriorOptions opt;
    Rng rng(11);
    FlvrScan scan = flvr_scan(ts, p, ell, opt, rng);
    CHECK(scan.holds);
    CHECK(scan.free_lunch_time == ts.horizon);
    CHECK(scan.drift_failure_time == ts.horizon);
    CHECK(scan.predictable_failure_time == ts.horizon);

    ArbitrageStrategy strat = build_strategy(p, scan);
    CHECK_FALSE(strat.available);
}

TEST_CASE("pnl accounting matches hand arithmetic") {
    MarketModel ts = builtin_model("twostate");
    PathRecord p;
    p.y0 = 0;
    p.horizon = 1.0;
    p.events = {{0.5, 0, 1}};

    Eigen::VectorXd amounts(1);
    amounts << 2.0;

    // [0.25, 0.75] spans the jump: dL = -0.5*0.25 + log(1.1) + 0.5*0.25.
    double dl = std::log(1.1);
    CHECK(strategy_pnl(ts, p, amounts, 0.25, 0.75) ==
          doctest::Approx(2.0 * std::expm1(dl)).epsilon(1e-12));

    // Pure drift segment.
    CHECK(strategy_pnl(ts, p, amounts, 0.0, 0.25) ==
          doctest::Approx(2.0 * std::expm1(-0.125)).epsilon(1e-12));
}

TEST_CASE("scan output is reproducible for a fixed seed") {
    MarketModel ts = builtin_model("twostate");
    Rng rng = Rng::path_stream(4, 0);
    PathRecord p = simulate_path(ts, rng);
    Eigen::VectorXd ell = log_discounted_prices(ts, p, ts.horizon);

    PosteriorOptions opt;
    Rng r1(9), r2(9);
    FlvrScan a = flvr_scan(ts, p, ell, opt, r1);
    FlvrScan b = flvr_scan(ts, p, ell, opt, r2);
    CHECK(a.free_lunch_time == b.free_lunch_time);
    CHECK(a.steps.size() == b.steps.size());
    CHECK(a.predictable.size() == b.predictable.size());
}

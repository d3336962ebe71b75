#include <doctest.h>

#include "mcmarket/json_io.hpp"
#include "mcmarket/simulate.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

using namespace mcmarket;

TEST_CASE("path simulation is reproducible per stream") {
    MarketModel kh = builtin_model("kh");
    Rng a = Rng::path_stream(42, 0);
    Rng b = Rng::path_stream(42, 0);
    PathRecord pa = simulate_path(kh, a);
    PathRecord pb = simulate_path(kh, b);
    REQUIRE(pa.events.size() == pb.events.size());
    for (std::size_t i = 0; i < pa.events.size(); ++i) {
        CHECK(pa.events[i].t == pb.events[i].t);
        CHECK(pa.events[i].to == pb.events[i].to);
    }

    Rng c = Rng::path_stream(42, 1);
    PathRecord pc = simulate_path(kh, c);
    bool same = pa.events.size() == pc.events.size();
    if (same && !pa.events.empty()) same = (pa.events[0].t == pc.events[0].t);
    CHECK_FALSE(same);
}

TEST_CASE("path accessors are consistent") {
    MarketModel m = builtin_model("twostate");
    PathRecord p;
    p.y0 = 0;
    p.horizon = 1.0;
    p.events = {{0.2, 0, 1}, {0.7, 1, 0}};

    CHECK(p.state_at(0.0) == 0);
    CHECK(p.state_at(0.2) == 1);   // right-continuous at the jump
    CHECK(p.state_at(0.45) == 1);
    CHECK(p.state_at(0.99) == 0);
    CHECK(p.terminal_state() == 0);

    auto occ = p.occupation(2);
    CHECK(occ[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(occ[1] == doctest::Approx(0.5).epsilon(1e-15));

    Eigen::MatrixXd counts = p.transition_counts(2);
    CHECK(counts(0, 1) == 1.0);
    CHECK(counts(1, 0) == 1.0);
    CHECK(counts.sum() == 2.0);
}

TEST_CASE("log prices accumulate drift and jumps") {
    MarketModel kh = builtin_model("kh");
    PathRecord p;
    p.y0 = 0;
    p.horizon = 1.0;
    p.events = {{0.3, 0, 1}};

    // nu = 0.01 in every state; one up-jump adds log(1.1).
    Eigen::VectorXd lt = log_discounted_prices(kh, p, 1.0);
    CHECK(lt(0) == doctest::Approx(0.01 + std::log(1.1)).epsilon(1e-15));

    Eigen::VectorXd mid = log_discounted_prices(kh, p, 0.3);
    CHECK(mid(0) == doctest::Approx(0.3 * 0.01 + std::log(1.1)).epsilon(1e-15));

    Eigen::VectorXd before = log_discounted_prices(kh, p, 0.29);
    CHECK(before(0) == doctest::Approx(0.29 * 0.01).epsilon(1e-14));
}

TEST_CASE("sojourn times have the right mean") {
    MarketModel m = builtin_model("twostate");  // rate 1 everywhere
    const long n = 4000;
    double sum = 0.0, sumsq = 0.0;
    long used = 0;
    for (long i = 0; i < n; ++i) {
        Rng rng = Rng::path_stream(7, static_cast<std::uint64_t>(i));
        PathRecord p = simulate_path(m, rng);
        if (p.events.empty()) continue;  // censored at the horizon
        double first = p.events[0].t;
        sum += first;
        sumsq += first * first;
        ++used;
    }
    // First sojourn conditioned on a jump before T=1: mean of a unit
    // exponential truncated to [0,1] = 1/(1-exp(-1)) - exp(-1)... computed:
    // E[X | X<1] = (1 - 2 exp(-1)) / (1 - exp(-1)).
    double expect = (1.0 - 2.0 * std::exp(-1.0)) / (1.0 - std::exp(-1.0));
    double mean = sum / static_cast<double>(used);
    double var = sumsq / static_cast<double>(used) - mean * mean;
    double se = std::sqrt(var / static_cast<double>(used));
    CHECK(std::abs(mean - expect) < 3.0 * se + 1e-12);
}

TEST_CASE("override simulation demands an equivalent pattern") {
    MarketModel m = builtin_model("twostate");
    Eigen::MatrixXd lt = Eigen::MatrixXd::Zero(2, 2);
    lt(0, 1) = 5.0;
    lt(1, 0) = 5.0;
    Rng rng(3);
    PathRecord p = simulate_under(m, lt, rng);
    CHECK(p.horizon == m.horizon);

    lt(1, 0) = 0.0;
    Rng rng2(3);
    CHECK_THROWS_AS(simulate_under(m, lt, rng2), std::invalid_argument);
}

TEST_CASE("override simulation runs at the override rates") {
    MarketModel m = builtin_model("twostate");
    Eigen::MatrixXd lt = Eigen::MatrixXd::Zero(2, 2);
    lt(0, 1) = 5.0;
    lt(1, 0) = 5.0;
    McStats st = mc_expectation(4000, 1, 99, [&](long i, Rng& rng, Eigen::VectorXd& out) {
        (void)i;
        PathRecord p = simulate_under(m, lt, rng);
        out(0) = static_cast<double>(p.events.size());
    });
    // Jump count is Poisson(5) over the unit horizon.
    CHECK(std::abs(st.mean(0) - 5.0) < 3.0 * st.se(0));
}

TEST_CASE("monte carlo engine is invariant to the worker count") {
    MarketModel kh = builtin_model("kh");
    PathFunctional f = [&](long i, Rng& rng, Eigen::VectorXd& out) {
        (void)i;
        PathRecord p = simulate_path(kh, rng);
        out(0) = static_cast<double>(p.events.size());
        out(1) = log_discounted_prices(kh, p, kh.horizon)(0);
    };

    setenv("MCMARKET_THREADS", "1", 1);
    McStats one = mc_expectation(5000, 2, 31, f);
    setenv("MCMARKET_THREADS", "3", 1);
    McStats three = mc_expectation(5000, 2, 31, f);
    unsetenv("MCMARKET_THREADS");

    CHECK(one.mean(0) == three.mean(0));  // bit-identical, not just close
    CHECK(one.mean(1) == three.mean(1));
    CHECK(one.se(0) == three.se(0));
    CHECK(one.paths == 5000);
}

TEST_CASE("degenerate functional has zero standard error") {
    McStats st = mc_expectation(2048, 1, 5, [](long, Rng&, Eigen::VectorXd& out) {
        out(0) = 2.5;
    });
    CHECK(st.mean(0) == 2.5);
    CHECK(st.se(0) == 0.0);
}

TEST_CASE("bridge times are sorted uniforms") {
    Rng rng(12);
    auto times = poisson_bridge_times(6, 2.0, rng);
    REQUIRE(times.size() == 6);
    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(times[i] > 0.0);
        CHECK(times[i] < 2.0);
        if (i > 0) CHECK(times[i] >= times[i - 1]);
    }

    // Mean of the k-th order statistic of n uniforms is k/(n+1) * T.
    const long reps = 4000;
    double sum_first = 0.0;
    for (long r = 0; r < reps; ++r) {
        Rng s = Rng::path_stream(21, static_cast<std::uint64_t>(r));
        sum_first += poisson_bridge_times(3, 1.0, s)[0];
    }
    CHECK(std::abs(sum_first / reps - 0.25) < 0.01);
}

TEST_CASE("bridge compensator integral matches the hand value") {
    // n = 2 jumps at 0.25 and 0.5 with horizon 1: integrate (2 - N_s)/(1-s).
    std::vector<double> jumps{0.25, 0.5};
    // [0, .25): 2/(1-s) -> 2 log(4/3); [.25, .5): 1/(1-s) -> log(3/2) -- then
    // nothing. Evaluate at t = 0.75.
    double expect = 2.0 * std::log(4.0 / 3.0) + std::log(1.5);
    CHECK(bridge_intensity_integral(jumps, 1.0, 0.75) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(bridge_intensity_integral(jumps, 1.0, 0.0) == 0.0);

    // Before the first jump the integrand is n/(1-s).
    CHECK(bridge_intensity_integral(jumps, 1.0, 0.2) ==
          doctest::Approx(2.0 * std::log(0.8 / 1.0) * -1.0).epsilon(1e-12));
}

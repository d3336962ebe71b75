#pragma once

/// Jump scenarios: the state skeleton of a trajectory, without its sojourn
/// times. This module evaluates scenario probabilities over a window (closed
/// forms where the total-rate pattern allows, an independent ODE quadrature
/// otherwise), the geometry of terminal log-price increments compatible with
/// a scenario, and sampling from the sojourn-time law conditioned on the
/// scenario.

#include "mcmarket/model.hpp"
#include "mcmarket/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mcmarket {

/// State skeleton e_0 -> e_1 -> ... -> e_n (consecutive entries distinct).
struct Scenario {
    std::vector<int> states;

    int length() const { return static_cast<int>(states.size()) - 1; }
    int initial() const { return states.front(); }
    int terminal() const { return states.back(); }

    bool valid(int n_states) const;

    /// First k jumps: states 0..k.
    Scenario prefix(int k) const;
    /// Remainder after the first k jumps: states k..n.
    Scenario suffix(int k) const;

    /// 1-based rendering, e.g. "1>2>1".
    std::string str() const;

    bool operator==(const Scenario& other) const { return states == other.states; }
};

/// Join two scenarios sharing an endpoint state (a ends where b starts).
std::optional<Scenario> concat(const Scenario& a, const Scenario& b);

/// Every edge along the scenario has positive intensity.
bool admissible(const MarketModel& model, const Scenario& h);

/// All admissible scenarios from `start` with at most `max_jumps` jumps,
/// in breadth-first order (the empty scenario comes first).
std::vector<Scenario> enumerate_scenarios(const MarketModel& model, int start,
                                          int max_jumps);

/// Probability that the chain realizes exactly this skeleton on [0, window]:
/// the product of edge intensities times the convolution of the sojourn
/// exponentials. Dispatches to closed forms (equal or well-separated total
/// rates) and falls back to the ODE quadrature otherwise.
double scenario_probability(const MarketModel& model, const Scenario& h,
                            double window);

/// Independent evaluation of the same quantity: the convolution chain is
/// integrated as a bidiagonal linear ODE with step-doubled RK4. Kept free of
/// the closed forms so the two routes can cross-check each other.
double scenario_probability_quadrature(const MarketModel& model, const Scenario& h,
                                       double window);

/// Per-slot effective drift vectors: column i is mu(:,e_i) - r(e_i).
Eigen::MatrixXd drift_columns(const MarketModel& model, const Scenario& h);

/// Total jump contribution to the log-price increment along the scenario.
Eigen::VectorXd beta_sum(const MarketModel& model, const Scenario& h);

/// Vertices of the set of terminal log-price increments compatible with the
/// scenario over the window: column i is beta_sum + window * drift(e_i).
Eigen::MatrixXd scenario_vertices(const MarketModel& model, const Scenario& h,
                                  double window);

/// Affine dimension of the increment set (window-independent).
int scenario_dim(const MarketModel& model, const Scenario& h);

/// Dimensions of all suffixes: entry k is the dimension for suffix(k),
/// k = 0..n. The sequence never increases.
std::vector<int> suffix_dims(const MarketModel& model, const Scenario& h);

/// Sojourn-time draws conditioned on the scenario filling the window:
/// density proportional to prod exp(-rate_i * dt_i) on the simplex
/// { dt > 0, sum dt = window }. Rejection from the uniform simplex.
struct ConditionalSample {
    std::vector<Eigen::VectorXd> draws;  ///< each of size length+1
    double acceptance_rate = 0.0;
};

ConditionalSample sample_sojourn_times(const MarketModel& model, const Scenario& h,
                                       double window, int count, Rng& rng);

/// Kernel-density estimate of the terminal-increment law of the scenario at
/// `target_increment`, relative to Lebesgue measure on its affine hull.
/// Requires scenario_dim >= 1; returns 0 when the target misses the affine
/// hull (off the convex support the estimate decays to 0 smoothly).
double terminal_density_estimate(const MarketModel& model, const Scenario& h,
                                 double window, const Eigen::VectorXd& target_increment,
                                 int samples, Rng& rng);

}  // namespace mcmarket

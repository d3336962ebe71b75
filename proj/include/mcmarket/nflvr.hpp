#pragma once

/// Free-lunch detection for the terminal-information observer. Walking a
/// realized path jump by jump, two feasibility systems are checked against
/// the posterior over continuations: between jumps, a strictly positive
/// martingale intensity must exist over the posterior-supported,
/// non-pinned jump targets; at a pinned (announced) jump time, the jump-size
/// columns over the possible targets must support a strictly positive
/// solution of the homogeneous system. The first failure of either kind
/// dates the arrival of a free lunch, and its LP certificate converts
/// directly into a trading position.

#include "mcmarket/feasibility.hpp"
#include "mcmarket/insider.hpp"
#include "mcmarket/model.hpp"
#include "mcmarket/simulate.hpp"

#include <string>
#include <vector>

namespace mcmarket {

/// Condition check on the interval starting at the (k-1)-th jump.
struct StepCheck {
    int k = 0;               ///< 1-based step index
    double at_time = 0.0;    ///< interval start
    int state = 0;
    std::vector<int> support_states;  ///< posterior-supported, non-pinned targets
    bool feasible = false;
    StrictSolveResult lp;
};

/// Condition check at one announced (pinned) jump time.
struct PredictableCheck {
    double time = 0.0;       ///< absolute announced time
    int state = 0;           ///< state just before the jump
    std::vector<int> targets;
    bool feasible = false;
    StrictSolveResult lp;
};

struct FlvrScan {
    bool holds = false;                     ///< no failure before the horizon
    double drift_failure_time = 0.0;        ///< first interval failure (horizon if none)
    double predictable_failure_time = 0.0;  ///< first announced-time failure (horizon if none)
    double free_lunch_time = 0.0;           ///< min of the above and the horizon
    std::vector<StepCheck> steps;
    std::vector<PredictableCheck> predictable;
};

/// Scan a realized path under terminal log-price information ell. The walk
/// stops at the first interval failure (everything from that moment on is a
/// free lunch); announced-time checks collected up to that point still count.
FlvrScan flvr_scan(const MarketModel& model, const PathRecord& path,
                   const Eigen::VectorXd& ell, const PosteriorOptions& opt,
                   Rng& rng);

/// Tradeable position extracted from the first failure of a scan. Positions
/// are currency amounts per asset in discounted units, so the profit over
/// [entry, exit] is sum_i position_i * (exp(dL_i) - 1).
struct ArbitrageStrategy {
    bool available = false;
    std::string kind;        ///< "drift" or "predictable-jump"
    double entry_time = 0.0;
    double exit_time = 0.0;  ///< next jump or horizon; announced time for jump kind
    int state = 0;
    Eigen::VectorXd position;
    bool guaranteed = false; ///< strict certificate: profit positive, not just nonnegative
    std::string note;
};

ArbitrageStrategy build_strategy(const PathRecord& path, const FlvrScan& scan);

/// Profit of holding fixed currency amounts over [entry, exit] on a path,
/// in discounted units.
double strategy_pnl(const MarketModel& model, const PathRecord& path,
                    const Eigen::VectorXd& amounts, double entry, double exit);

}  // namespace mcmarket

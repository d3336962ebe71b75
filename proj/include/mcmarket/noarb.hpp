#pragma once

/// No-arbitrage analysis for the full-information market: existence of a
/// strictly positive intensity reweighting that makes every discounted asset
/// a martingale, validation of user-supplied reweightings, and the density
/// process they induce (used to verify the martingale property by Monte
/// Carlo).

#include "mcmarket/feasibility.hpp"
#include "mcmarket/model.hpp"
#include "mcmarket/simulate.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mcmarket {

/// Per-state outcome of the martingale-intensity solve: find rates
/// tilde_lambda(e,f) > 0 on the support of lambda(e,·) with
///   sum_f gamma(:,e,f) * tilde_lambda(e,f) = r(e) - mu(:,e).
struct StateFeasibility {
    int state = 0;
    bool feasible = false;
    Eigen::VectorXd lambda_tilde;  ///< full row (zeros off the support)
    double residual = 0.0;         ///< max-norm of the martingale equation residual
    StrictSolveResult lp;          ///< margin or certificate detail
};

struct NaReport {
    bool feasible = false;               ///< every state admits a solution
    std::vector<StateFeasibility> states;
    Eigen::MatrixXd lambda_tilde;        ///< complete matrix when feasible
};

NaReport na_solve(const MarketModel& model);

/// Validate a hand-picked intensity matrix as a martingale reweighting:
/// same support pattern as the model, strictly positive there, and the
/// per-state martingale equations within `tol`.
struct OverrideCheck {
    bool ok = false;
    double max_residual = 0.0;
    std::vector<std::string> problems;
};

OverrideCheck check_override(const MarketModel& model,
                             const Eigen::MatrixXd& lambda_tilde, double tol = 1e-9);

/// Log of the change-of-measure density up to time t along a path:
///   sum over jumps of log(tilde/lambda) + sum over states of
///   occupation * (total_rate - tilde_total_rate).
double log_density_ratio(const MarketModel& model, const Eigen::MatrixXd& lambda_tilde,
                         const PathRecord& path, double t);

/// Monte Carlo check that the reweighting prices correctly: E[Z_T] = 1 and
/// E[Z_T * exp(L_T)] = s0 componentwise. Returns means and standard errors;
/// the caller decides the acceptance band.
struct MartingaleCheck {
    McStats density;        ///< dim 1: Z_T
    McStats priced_assets;  ///< dim m: Z_T * discounted terminal prices
    Eigen::VectorXd target; ///< s0
};

MartingaleCheck verify_martingale_measure(const MarketModel& model,
                                          const Eigen::MatrixXd& lambda_tilde,
                                          long n_paths, std::uint64_t seed);

}  // namespace mcmarket

#pragma once

/// Exact event-driven simulation of the market chain and a small Monte
/// Carlo engine whose results are bit-identical for a given seed no matter
/// how many worker threads run (fixed-size path chunks, reduced in order).

#include "mcmarket/model.hpp"
#include "mcmarket/rng.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mcmarket {

struct JumpEvent {
    double t;
    int from;
    int to;
};

/// One realized chain trajectory on [0, horizon].
struct PathRecord {
    int y0 = 0;
    double horizon = 0.0;
    std::vector<JumpEvent> events;  // strictly increasing times

    /// State occupied at time t (right-continuous; t in [0, horizon]).
    int state_at(double t) const;
    int terminal_state() const;

    /// Time spent in each state over [0, horizon].
    std::vector<double> occupation(int n_states) const;

    /// Count of e->f transitions, one cell per ordered pair.
    Eigen::MatrixXd transition_counts(int n_states) const;
};

/// Draw one trajectory by exact (Gillespie) simulation. Consumes two
/// uniforms per jump -- holding time, then target -- so replaying the same
/// stream reproduces the same path.
PathRecord simulate_path(const MarketModel& model, Rng& rng);

/// Same trajectory draw with the chain running at `lambda_tilde` instead of
/// the model intensities (price drifts and jump sizes unchanged). The
/// override must share the model's positivity pattern.
PathRecord simulate_under(const MarketModel& model,
                          const Eigen::MatrixXd& lambda_tilde, Rng& rng);

/// Log discounted asset prices at time t along a path; L_0 = log(s0).
Eigen::VectorXd log_discounted_prices(const MarketModel& model,
                                      const PathRecord& path, double t);

struct McStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd se;  ///< standard error of the mean, componentwise
    long paths = 0;
};

/// f(path_index, rng, out) fills a dim-vector for one path; rng is the
/// dedicated stream for that path index.
using PathFunctional = std::function<void(long, Rng&, Eigen::VectorXd&)>;

/// Mean and standard error of f over n_paths independent paths. Paths are
/// processed in fixed 1024-path chunks whose partial sums are combined in
/// chunk order, so the result depends only on the seed, never on the number
/// of threads that happened to run.
McStats mc_expectation(long n_paths, int dim, std::uint64_t seed,
                       const PathFunctional& f);

/// Worker count: MCMARKET_THREADS when set (>= 1), else the hardware count.
int worker_threads();

/// Jump times of a rate-anything Poisson process on [0, horizon] conditioned
/// on exactly n jumps: n sorted uniform draws.
std::vector<double> poisson_bridge_times(int n, double horizon, Rng& rng);

/// Integral of (n - N_s) / (horizon - s) ds over [0, t] for the counting
/// path with the given jump times (n = jump_times.size()).
double bridge_intensity_integral(const std::vector<double>& jump_times,
                                 double horizon, double t);

}  // namespace mcmarket

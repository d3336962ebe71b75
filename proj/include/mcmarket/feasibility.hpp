#pragma once

/// Dense linear-programming and convex-geometry toolkit.
///
/// Every problem in this library is tiny -- a handful of chain states and
/// assets -- so the workhorse is a dense two-phase simplex with Bland's rule
/// rather than a sparse solver. On top of it sit the strictly-positive
/// solver used by the no-arbitrage checks (with infeasibility certificates),
/// affine-dimension and hull-membership queries, and coordinate bounds over
/// the sojourn-time polytope of a jump scenario.

#include <Eigen/Dense>

#include <string>

namespace mcmarket {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Eigen::VectorXd x;           ///< primal point (last basic point when infeasible)
    double objective = 0.0;      ///< c.x at the returned point
    double infeasibility = 0.0;  ///< phase-one residual; ~0 when a feasible basis exists
};

/// Maximize c.x subject to A x = b, x >= 0. A is rows x cols, dense.
LpResult lp_solve_eq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                     const Eigen::VectorXd& c);

/// Outcome of searching for a strictly positive solution of A y = b.
///
/// When no such y exists the solver hunts for a separating certificate xi
/// with xi.A >= 0 componentwise and, whenever one exists, xi.b < 0 strictly
/// (for b = 0 the strict form is xi.a_j > 0 on every nonzero column).
/// `cert_strict` records whether that strict form was achieved; a weak
/// certificate (strict on a single column only, xi.b = 0) is flagged rather
/// than silently passed off as strict.
struct StrictSolveResult {
    bool feasible = false;
    Eigen::VectorXd y;            ///< strictly positive solution when feasible
    double margin = 0.0;          ///< min component of the witness in column-scaled units
    bool has_certificate = false;
    Eigen::VectorXd certificate;  ///< xi, scaled to unit max-norm
    bool cert_strict = false;
    std::string detail;
};

/// Find y with A y = b and every component strictly positive. Feasibility is
/// decided by the best achievable column-scaled margin (threshold `pos_eps`);
/// zero columns of A are unconstrained and get y_j = 1.
///
/// With `prefer` set (one entry per column of A), a feasible solve runs a
/// second pass that returns the solution of minimal weighted L1 distance to
/// the preferred point, subject to keeping at least 5% of the best margin.
/// Callers use this to obtain witnesses close to the model intensities,
/// which keeps downstream density ratios well conditioned.
StrictSolveResult solve_strict(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               double pos_eps = 1e-9,
                               const Eigen::VectorXd* prefer = nullptr);

/// Affine dimension of a point set (one point per column). Empty set -> -1,
/// single point -> 0. Rank is read off the singular values of the centered
/// matrix with a relative threshold.
int affine_dim(const Eigen::MatrixXd& points, double rel_tol = 1e-9);

struct HullResult {
    bool member = false;
    double distance = 0.0;        ///< Chebyshev distance to the hull, per-coordinate
                                  ///< scaled by max(1, data magnitude)
    Eigen::VectorXd weights;      ///< convex weights over columns at the nearest point
};

/// Is x in the convex hull of the columns of `points` (within `tol`)?
/// Solved as a Chebyshev-projection LP over coordinates scaled to O(1), so
/// `tol` acts as a relative tolerance on well-scaled data.
HullResult hull_member(const Eigen::MatrixXd& points, const Eigen::VectorXd& x,
                       double tol = 1e-9);

/// Range of one sojourn time over the polytope
///   { dt >= 0, sum(dt) = total, drift_cols * dt = target }.
/// `drift_cols` has one column per scenario slot. `interior_margin` is the
/// best min-component over the polytope (0 when it has empty interior), and
/// `interior_point` attains it when positive.
struct TimeBounds {
    bool feasible = false;
    double lo = 0.0;
    double hi = 0.0;
    double interior_margin = 0.0;
    Eigen::VectorXd interior_point;
};

TimeBounds time_bounds(const Eigen::MatrixXd& drift_cols, const Eigen::VectorXd& target,
                       double total, int coord);

}  // namespace mcmarket

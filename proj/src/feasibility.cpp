#include "mcmarket/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mcmarket {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-9;
constexpr double kFeasTol = 1e-9;
constexpr double kCertEps = 1e-9;
constexpr double kMarginCap = 1.0;
constexpr long kMaxPivots = 200000;

// ===== dense two-phase simplex ============================================

struct Tableau {
    int rows = 0;
    int real_cols = 0;
    int total_cols = 0;           // real + artificial
    Eigen::MatrixXd t;            // rows x (total_cols + 1), last column = rhs
    Eigen::VectorXd zrow;         // reduced costs, size total_cols
    double zval = 0.0;            // objective value at the current basis
    std::vector<int> basis;       // basic column per row

    void pivot(int pr, int pc) {
        t.row(pr) /= t(pr, pc);
        for (int i = 0; i < rows; ++i) {
            if (i == pr) continue;
            double f = t(i, pc);
            if (f != 0.0) t.row(i) -= f * t.row(pr);
        }
        double f = zrow(pc);
        if (f != 0.0) {
            zval += f * t(pr, total_cols);
            zrow -= f * t.row(pr).head(total_cols);
        }
        basis[pr] = pc;
    }
};

// Bland's rule (smallest entering index, smallest basic index on ratio
// ties), so the iteration cannot cycle. Returns false on unboundedness.
bool run_simplex(Tableau& tb, int enterable_cols) {
    for (long iter = 0; iter < kMaxPivots; ++iter) {
        int enter = -1;
        for (int j = 0; j < enterable_cols; ++j) {
            if (tb.zrow(j) > kCostEps) {
                enter = j;
                break;
            }
        }
        if (enter < 0) return true;

        int leave = -1;
        double best = 0.0;
        for (int i = 0; i < tb.rows; ++i) {
            double a = tb.t(i, enter);
            if (a <= kPivotEps) continue;
            double ratio = tb.t(i, tb.total_cols) / a;
            if (leave < 0 || ratio < best - 1e-15 ||
                (std::abs(ratio - best) <= 1e-15 && tb.basis[i] < tb.basis[leave])) {
                leave = i;
                best = ratio;
            }
        }
        if (leave < 0) return false;
        tb.pivot(leave, enter);
    }
    throw std::runtime_error("lp_solve_eq: pivot limit exceeded");
}

}  // namespace

LpResult lp_solve_eq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                     const Eigen::VectorXd& c) {
    const int p = static_cast<int>(A.rows());
    const int q = static_cast<int>(A.cols());
    if (b.size() != p || c.size() != q)
        throw std::invalid_argument("lp_solve_eq: dimension mismatch");

    Tableau tb;
    tb.rows = p;
    tb.real_cols = q;
    tb.total_cols = q + p;
    tb.t.setZero(p, tb.total_cols + 1);
    tb.basis.resize(p);
    for (int i = 0; i < p; ++i) {
        double sign = (b(i) >= 0.0) ? 1.0 : -1.0;
        tb.t.row(i).head(q) = sign * A.row(i);
        tb.t(i, q + i) = 1.0;
        tb.t(i, tb.total_cols) = sign * b(i);
        tb.basis[i] = q + i;
    }

    // Phase one: maximize minus the sum of artificials, priced out so the
    // reduced-cost row starts consistent with the artificial basis.
    tb.zrow.setZero(tb.total_cols);
    for (int j = 0; j < q; ++j) tb.zrow(j) = tb.t.col(j).head(p).sum();
    tb.zval = -tb.t.col(tb.total_cols).head(p).sum();
    run_simplex(tb, q);

    LpResult out;
    double infeas = -tb.zval;
    out.infeasibility = std::max(0.0, infeas);

    auto extract = [&](LpResult& res) {
        res.x.setZero(q);
        for (int i = 0; i < p; ++i) {
            if (tb.basis[i] < q) res.x(tb.basis[i]) = std::max(0.0, tb.t(i, tb.total_cols));
        }
    };

    if (infeas > kFeasTol) {
        out.status = LpStatus::Infeasible;
        extract(out);
        out.objective = c.size() ? c.dot(out.x) : 0.0;
        return out;
    }

    // Drive leftover artificials out of the basis (their value is ~0, so
    // any nonzero real entry in the row will do; an all-zero row is a
    // redundant constraint and can stay parked).
    for (int i = 0; i < p; ++i) {
        if (tb.basis[i] < q) continue;
        for (int j = 0; j < q; ++j) {
            if (std::abs(tb.t(i, j)) > kPivotEps) {
                tb.pivot(i, j);
                break;
            }
        }
    }

    // Phase two with the real objective.
    tb.zrow.setZero(tb.total_cols);
    tb.zrow.head(q) = c;
    tb.zval = 0.0;
    for (int i = 0; i < p; ++i) {
        if (tb.basis[i] < q && c(tb.basis[i]) != 0.0) {
            double cb = c(tb.basis[i]);
            tb.zval += cb * tb.t(i, tb.total_cols);
            tb.zrow -= cb * tb.t.row(i).head(tb.total_cols);
        }
    }
    bool bounded = run_simplex(tb, q);
    out.status = bounded ? LpStatus::Optimal : LpStatus::Unbounded;
    extract(out);
    out.objective = tb.zval;
    out.infeasibility = 0.0;
    return out;
}

// ===== strictly positive solve with certificates ==========================

namespace {

// max xi.goal subject to xi.v >= 0 for v in `nonneg`, |xi_i| <= 1.
// Returns the optimum and writes xi.
double max_functional(const std::vector<Eigen::VectorXd>& nonneg,
                      const Eigen::VectorXd& goal, Eigen::VectorXd& xi) {
    const int r = static_cast<int>(goal.size());
    const int k = static_cast<int>(nonneg.size());
    // variables: xi+ (r), xi- (r), box slack (r), constraint slacks (k)
    const int nv = 3 * r + k;
    const int nr = r + k;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nr, nv);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nr);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    for (int i = 0; i < r; ++i) {
        A(i, i) = 1.0;
        A(i, r + i) = 1.0;
        A(i, 2 * r + i) = 1.0;
        b(i) = 1.0;
        c(i) = goal(i);
        c(r + i) = -goal(i);
    }
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < r; ++i) {
            A(r + j, i) = nonneg[static_cast<std::size_t>(j)](i);
            A(r + j, r + i) = -nonneg[static_cast<std::size_t>(j)](i);
        }
        A(r + j, 3 * r + j) = -1.0;
    }
    LpResult res = lp_solve_eq(A, b, c);
    if (res.status != LpStatus::Optimal) return -1.0;
    xi = res.x.head(r) - res.x.segment(r, r);
    return res.objective;
}

// max sigma subject to xi.v >= sigma for v in `strict`, |xi_i| <= 1.
double max_min_slack(const std::vector<Eigen::VectorXd>& strict, int r,
                     Eigen::VectorXd& xi) {
    const int k = static_cast<int>(strict.size());
    // variables: xi+ (r), xi- (r), box slack (r), sigma, constraint slacks (k)
    const int nv = 3 * r + 1 + k;
    const int nr = r + k;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nr, nv);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nr);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    c(3 * r) = 1.0;
    for (int i = 0; i < r; ++i) {
        A(i, i) = 1.0;
        A(i, r + i) = 1.0;
        A(i, 2 * r + i) = 1.0;
        b(i) = 1.0;
    }
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < r; ++i) {
            A(r + j, i) = strict[static_cast<std::size_t>(j)](i);
            A(r + j, r + i) = -strict[static_cast<std::size_t>(j)](i);
        }
        A(r + j, 3 * r) = -1.0;
        A(r + j, 3 * r + 1 + j) = -1.0;
    }
    LpResult res = lp_solve_eq(A, b, c);
    if (res.status != LpStatus::Optimal) return -1.0;
    xi = res.x.head(r) - res.x.segment(r, r);
    return res.objective;
}

void finish_certificate(StrictSolveResult& out, Eigen::VectorXd xi,
                        const Eigen::VectorXd& row_scale, bool strict,
                        const std::string& detail) {
    for (int i = 0; i < xi.size(); ++i) xi(i) /= row_scale(i);
    double norm = xi.lpNorm<Eigen::Infinity>();
    if (norm > 0.0) xi /= norm;
    out.has_certificate = true;
    out.certificate = xi;
    out.cert_strict = strict;
    out.detail = detail;
}

}  // namespace

StrictSolveResult solve_strict(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               double pos_eps, const Eigen::VectorXd* prefer) {
    const int r = static_cast<int>(A.rows());
    const int q_all = static_cast<int>(A.cols());
    if (b.size() != r) throw std::invalid_argument("solve_strict: dimension mismatch");

    StrictSolveResult out;
    if (r == 0) {
        out.feasible = true;
        out.y = Eigen::VectorXd::Ones(q_all);
        out.margin = 1.0;
        out.detail = "no constraints";
        return out;
    }

    // Zero columns never constrain the system; solve without them and pin
    // their entries to 1 afterwards.
    std::vector<int> live;
    for (int j = 0; j < q_all; ++j) {
        if (A.col(j).lpNorm<Eigen::Infinity>() > 0.0) live.push_back(j);
    }
    const int q = static_cast<int>(live.size());

    // Column scaling (unit max-norm) followed by row scaling keeps the
    // tableau entries O(1); certificates are mapped back afterwards.
    Eigen::MatrixXd Ah(r, q);
    Eigen::VectorXd col_scale(q);
    for (int j = 0; j < q; ++j) {
        double d = A.col(live[static_cast<std::size_t>(j)]).lpNorm<Eigen::Infinity>();
        col_scale(j) = d;
        Ah.col(j) = A.col(live[static_cast<std::size_t>(j)]) / d;
    }
    Eigen::VectorXd bh = b;
    Eigen::VectorXd row_scale(r);
    for (int i = 0; i < r; ++i) {
        double rho = std::max(1.0, std::abs(bh(i)));
        if (q > 0) rho = std::max(rho, Ah.row(i).lpNorm<Eigen::Infinity>());
        row_scale(i) = rho;
        Ah.row(i) /= rho;
        bh(i) /= rho;
    }

    auto expand = [&](const Eigen::VectorXd& y_live) {
        Eigen::VectorXd y = Eigen::VectorXd::Ones(q_all);
        for (int j = 0; j < q; ++j)
            y(live[static_cast<std::size_t>(j)]) = y_live(j);
        return y;
    };

    if (q == 0) {
        if (bh.lpNorm<Eigen::Infinity>() <= 1e-12) {
            out.feasible = true;
            out.y = expand(Eigen::VectorXd());
            out.margin = 1.0;
            out.detail = "vacuous system";
        } else {
            out.feasible = false;
            finish_certificate(out, -bh, row_scale, true, "no columns can reach the target");
        }
        return out;
    }

    // max t  s.t.  Ah u + (Ah 1) t = bh,  t + s = cap,  u, t, s >= 0.
    // A solution y = t*1 + u with t >= pos_eps is a strictly positive
    // witness whose scaled margin is t.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(r + 1, q + 2);
    Eigen::VectorXd rhs(r + 1);
    M.topLeftCorner(r, q) = Ah;
    M.col(q).head(r) = Ah.rowwise().sum();
    M(r, q) = 1.0;
    M(r, q + 1) = 1.0;
    rhs.head(r) = bh;
    rhs(r) = kMarginCap;
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(q + 2);
    obj(q) = 1.0;

    LpResult lp = lp_solve_eq(M, rhs, obj);
    if (lp.status == LpStatus::Optimal) {
        double t = lp.x(q);
        if (t >= pos_eps) {
            out.feasible = true;
            Eigen::VectorXd yh = lp.x.head(q).array() + t;  // scaled witness, min = t

            // Optional refinement: among solutions keeping a fraction of the
            // best margin, take the one of minimal weighted L1 distance to
            // the preferred point. Variables [p; m; w] >= 0 encode
            // yh = ch + p - m with slack w for the floor yh >= f.
            if (prefer != nullptr && prefer->size() == q_all) {
                const double f = 0.05 * t;
                Eigen::VectorXd ch(q);
                for (int j = 0; j < q; ++j) {
                    double pv = (*prefer)(live[static_cast<std::size_t>(j)]);
                    ch(j) = std::max(0.0, pv * col_scale(j));
                }
                Eigen::MatrixXd M2 = Eigen::MatrixXd::Zero(r + q, 3 * q);
                Eigen::VectorXd rhs2(r + q);
                M2.topLeftCorner(r, q) = Ah;
                M2.block(0, q, r, q) = -Ah;
                rhs2.head(r) = bh - Ah * ch;
                for (int j = 0; j < q; ++j) {
                    M2(r + j, j) = 1.0;
                    M2(r + j, q + j) = -1.0;
                    M2(r + j, 2 * q + j) = -1.0;
                    rhs2(r + j) = f - ch(j);
                }
                Eigen::VectorXd obj2 = Eigen::VectorXd::Zero(3 * q);
                for (int j = 0; j < q; ++j) {
                    obj2(j) = -1.0 / col_scale(j);
                    obj2(q + j) = -1.0 / col_scale(j);
                }
                LpResult lp2 = lp_solve_eq(M2, rhs2, obj2);
                if (lp2.status == LpStatus::Optimal) {
                    Eigen::VectorXd cand = ch + lp2.x.head(q) - lp2.x.segment(q, q);
                    if (cand.minCoeff() > 0.0 &&
                        (Ah * cand - bh).lpNorm<Eigen::Infinity>() <= 1e-7) {
                        yh = cand;
                    }
                }
            }

            out.margin = yh.minCoeff();
            Eigen::VectorXd y_live(q);
            for (int j = 0; j < q; ++j) y_live(j) = yh(j) / col_scale(j);
            out.y = expand(y_live);
            out.detail = "strictly positive solution";
            return out;
        }
    } else if (lp.status == LpStatus::Infeasible) {
        // Either the target is outside the column span, or no nonnegative
        // solution exists at all. The span case yields a residual
        // certificate directly.
        Eigen::VectorXd x_ls = Ah.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(bh);
        Eigen::VectorXd resid = bh - Ah * x_ls;
        if (resid.lpNorm<Eigen::Infinity>() > 1e-8) {
            out.feasible = false;
            finish_certificate(out, -resid, row_scale, true,
                               "target outside the span of the jump columns");
            return out;
        }
    }

    // No strictly positive solution: hunt for a separating certificate over
    // the scaled system.
    out.feasible = false;
    out.margin = (lp.status == LpStatus::Optimal) ? std::max(0.0, lp.x(q)) : 0.0;

    std::vector<Eigen::VectorXd> cols;
    cols.reserve(static_cast<std::size_t>(q));
    for (int j = 0; j < q; ++j) cols.push_back(Ah.col(j));
    const bool has_b = bh.lpNorm<Eigen::Infinity>() > 1e-14;
    Eigen::VectorXd xi;

    std::vector<Eigen::VectorXd> strict_rows = cols;
    if (has_b) strict_rows.push_back(-bh);
    if (max_min_slack(strict_rows, r, xi) > kCertEps) {
        finish_certificate(out, xi, row_scale, true,
                           has_b ? "strict separation of target and jump columns"
                                 : "strict separation of the jump columns from zero");
        return out;
    }
    if (has_b && max_functional(cols, -bh, xi) > kCertEps) {
        finish_certificate(out, xi, row_scale, true,
                           "separation strict against the target only");
        return out;
    }
    for (int j = 0; j < q; ++j) {
        std::vector<Eigen::VectorXd> nonneg = cols;
        if (has_b) nonneg.push_back(-bh);
        if (max_functional(nonneg, Ah.col(j), xi) > kCertEps) {
            finish_certificate(out, xi, row_scale, false,
                               "weak separation: strict on one jump column only");
            return out;
        }
    }

    if (lp.status == LpStatus::Infeasible) {
        // Solvable over the reals, no nonnegative solution, yet no Farkas
        // certificate found -- only possible if every solution has margin
        // beyond the cap, which market-sized data cannot produce.
        throw std::runtime_error("solve_strict: margin exceeds cap; system is out of scale");
    }
    out.detail = "margin below threshold; no separating certificate found";
    return out;
}

// ===== convex geometry =====================================================

int affine_dim(const Eigen::MatrixXd& points, double rel_tol) {
    const int k = static_cast<int>(points.cols());
    if (k <= 0) return -1;
    if (k == 1) return 0;
    Eigen::MatrixXd diff = points.rightCols(k - 1).colwise() - points.col(0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diff);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    double smax = sv(0);
    double floor_scale = std::max(1.0, points.col(0).lpNorm<Eigen::Infinity>());
    if (smax <= 1e-13 * floor_scale) return 0;
    double thresh = rel_tol * smax;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) > thresh) ++rank;
    }
    return rank;
}

HullResult hull_member(const Eigen::MatrixXd& points, const Eigen::VectorXd& x,
                       double tol) {
    HullResult out;
    const int d = static_cast<int>(points.rows());
    const int k = static_cast<int>(points.cols());
    if (k == 0 || x.size() != d) return out;

    // Chebyshev projection: minimize delta subject to
    //   |P w - x| <= delta componentwise, w >= 0, sum w = 1.
    // Row i:      P_i w + delta - s_i = x_i        (s_i = delta - (x_i - P_i w))
    // Row d+i:    s_i + s2_i - 2 delta = 0         (forces s_i <= 2 delta)
    // Row 2d:     sum w = 1
    Eigen::VectorXd scale(d);
    for (int i = 0; i < d; ++i)
        scale(i) = std::max({1.0, points.row(i).lpNorm<Eigen::Infinity>(), std::abs(x(i))});

    const int nv = k + 1 + 2 * d;  // w, delta, s, s2
    const int nr = 2 * d + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nr, nv);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nr);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    c(k) = -1.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < k; ++j) A(i, j) = points(i, j) / scale(i);
        A(i, k) = 1.0;
        A(i, k + 1 + i) = -1.0;
        b(i) = x(i) / scale(i);
        A(d + i, k + 1 + i) = 1.0;
        A(d + i, k + 1 + d + i) = 1.0;
        A(d + i, k) = -2.0;
    }
    A.row(2 * d).head(k).setOnes();
    b(2 * d) = 1.0;

    LpResult res = lp_solve_eq(A, b, c);
    if (res.status != LpStatus::Optimal)
        throw std::runtime_error("hull_member: projection LP did not solve");
    out.distance = -res.objective;
    out.member = out.distance <= tol;
    Eigen::VectorXd w = res.x.head(k);
    double total = w.sum();
    if (total > 0.0) w /= total;
    out.weights = w;
    return out;
}

TimeBounds time_bounds(const Eigen::MatrixXd& drift_cols, const Eigen::VectorXd& target,
                       double total, int coord) {
    TimeBounds out;
    const int m = static_cast<int>(drift_cols.rows());
    const int k = static_cast<int>(drift_cols.cols());
    if (target.size() != m || coord < 0 || coord >= k)
        throw std::invalid_argument("time_bounds: dimension mismatch");

    Eigen::MatrixXd A(m + 1, k);
    Eigen::VectorXd b(m + 1);
    for (int i = 0; i < m; ++i) {
        double rho = std::max({1.0, drift_cols.row(i).lpNorm<Eigen::Infinity>(),
                               std::abs(target(i))});
        A.row(i) = drift_cols.row(i) / rho;
        b(i) = target(i) / rho;
    }
    A.row(m).setOnes();
    b(m) = total;

    Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
    c(coord) = -1.0;
    LpResult lo = lp_solve_eq(A, b, c);
    if (lo.status != LpStatus::Optimal) return out;  // empty (or ill-posed) polytope
    c(coord) = 1.0;
    LpResult hi = lp_solve_eq(A, b, c);
    if (hi.status != LpStatus::Optimal) return out;

    out.feasible = true;
    out.lo = std::max(0.0, -lo.objective);
    out.hi = hi.objective;

    StrictSolveResult interior = solve_strict(A, b);
    if (interior.feasible) {
        out.interior_margin = interior.margin;
        out.interior_point = interior.y;
    }
    return out;
}

}  // namespace mcmarket

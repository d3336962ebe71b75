#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mcmarket {

/// A finite-state market: a Markov chain Y on states {0,..,n-1} with
/// intensity matrix `lambda`, a bank account driven by state-wise short
/// rates r^e, and m risky assets whose log prices drift at mu(i,e) while
/// Y sits in e and jump by beta[i](e,f) when Y jumps e -> f.
///
/// States carry user-facing labels; everything numeric is 0-indexed and
/// reports translate back through state_label / asset_name.
struct MarketModel {
    std::string name;
    int n = 0;                          ///< number of chain states
    int m = 0;                          ///< number of risky assets
    double horizon = 1.0;               ///< terminal time T
    int y0 = 0;                         ///< initial chain state
    Eigen::MatrixXd lambda;             ///< n x n intensities, zero diagonal
    Eigen::VectorXd r;                  ///< n short rates
    Eigen::MatrixXd mu;                 ///< m x n drifts, mu(i,e)
    std::vector<Eigen::MatrixXd> beta;  ///< per asset: n x n log jump sizes
    Eigen::VectorXd s0;                 ///< m initial asset prices
    std::vector<std::string> state_labels;  ///< size n when set; default "1".."n"
    std::vector<std::string> asset_names;   ///< size m when set; default "S1".."Sm"

    /// Display label of a state (falls back to its 1-based index).
    std::string state_label(int e) const;
    /// Display name of an asset (falls back to "S<i+1>").
    std::string asset_name(int i) const;
    /// Index of a labeled state; also accepts the 1-based numeric form.
    /// Throws std::invalid_argument for unknown labels.
    int state_index(const std::string& label) const;

    /// Total exit rate lambda^e = sum_k lambda(e,k).
    double total_rate(int e) const { return lambda.row(e).sum(); }

    /// States reachable in one jump from e (strictly positive intensity).
    std::vector<int> reachable(int e) const;

    /// Relative price jump gamma^{ief} = exp(beta[i](e,f)) - 1.
    double gamma(int i, int e, int f) const {
        return std::expm1(beta[i](e, f));
    }

    /// Effective log-discounted drift vector nu^e with entries mu(i,e) - r(e).
    Eigen::VectorXd drift(int e) const {
        return mu.col(e).array() - r(e);
    }

    /// m x |cols| matrix of gammas for transitions e -> cols[j].
    Eigen::MatrixXd gamma_matrix(int e, const std::vector<int>& cols) const;

    /// Right-hand side r(e)*1 - mu(.,e) of the per-state feasibility system.
    Eigen::VectorXd feasibility_rhs(int e) const {
        return (r(e) - mu.col(e).array()).matrix();
    }
};

struct ValidationIssue {
    std::string field;
    std::string message;
};

struct ValidationReport {
    bool valid = false;
    std::vector<ValidationIssue> errors;
    std::vector<ValidationIssue> warnings;
};

/// Structural checks: shapes, finiteness, nonnegative off-diagonal
/// intensities with zero diagonal, positive initial prices and horizon,
/// a valid initial state. Warnings flag absorbing states and zero-size
/// jumps on transitions with positive intensity.
ValidationReport validate_model(const MarketModel& model);

/// Throwing convenience wrapper around validate_model.
void require_valid(const MarketModel& model);

/// True when `a` and `b` share the strict-positivity pattern required of
/// equivalent intensity matrices (same shape, nonnegative off-diagonals,
/// zero diagonals, and a(e,f) > 0 exactly where b(e,f) > 0).
bool equivalent_pattern(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        std::string* why = nullptr);

/// Transition matrix P_t = exp(Q t) of the chain via uniformization.
/// The Poisson series is truncated once its tail is below tail_tol, so each
/// row sums to 1 within tail_tol and entries stay nonnegative by
/// construction.
Eigen::MatrixXd transition_matrix(const MarketModel& model, double t,
                                  double tail_tol = 1e-12);

}  // namespace mcmarket

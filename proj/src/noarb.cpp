#include "mcmarket/noarb.hpp"

#include <cmath>
#include <stdexcept>

namespace mcmarket {

NaReport na_solve(const MarketModel& model) {
    NaReport report;
    report.feasible = true;
    report.lambda_tilde = Eigen::MatrixXd::Zero(model.n, model.n);
    report.states.reserve(static_cast<std::size_t>(model.n));

    for (int e = 0; e < model.n; ++e) {
        StateFeasibility sf;
        sf.state = e;
        std::vector<int> targets = model.reachable(e);
        Eigen::MatrixXd cols = model.gamma_matrix(e, targets);
        Eigen::VectorXd rhs = model.feasibility_rhs(e);
        // Prefer a witness close to the physical intensities: densities
        // built from it stay well conditioned for Monte Carlo checks.
        Eigen::VectorXd near(static_cast<Eigen::Index>(targets.size()));
        for (std::size_t j = 0; j < targets.size(); ++j)
            near(static_cast<Eigen::Index>(j)) = model.lambda(e, targets[j]);
        sf.lp = solve_strict(cols, rhs, 1e-9, &near);
        sf.feasible = sf.lp.feasible;
        sf.lambda_tilde = Eigen::VectorXd::Zero(model.n);
        if (sf.feasible) {
            for (std::size_t j = 0; j < targets.size(); ++j)
                sf.lambda_tilde(targets[j]) = sf.lp.y(static_cast<int>(j));
            sf.residual = (cols * sf.lp.y - rhs).lpNorm<Eigen::Infinity>();
            report.lambda_tilde.row(e) = sf.lambda_tilde.transpose();
        } else {
            report.feasible = false;
        }
        report.states.push_back(std::move(sf));
    }
    if (!report.feasible) report.lambda_tilde.setZero();
    return report;
}

OverrideCheck check_override(const MarketModel& model,
                             const Eigen::MatrixXd& lambda_tilde, double tol) {
    OverrideCheck out;
    if (lambda_tilde.rows() != model.n || lambda_tilde.cols() != model.n) {
        out.problems.push_back("reweighting matrix has the wrong shape");
        return out;
    }
    for (int e = 0; e < model.n; ++e) {
        for (int f = 0; f < model.n; ++f) {
            double lt = lambda_tilde(e, f);
            bool on_support = (f != e) && model.lambda(e, f) > 0.0;
            if (on_support && lt <= 0.0)
                out.problems.push_back("rate (" + std::to_string(e + 1) + "," +
                                       std::to_string(f + 1) +
                                       ") must be strictly positive");
            if (!on_support && lt != 0.0)
                out.problems.push_back("rate (" + std::to_string(e + 1) + "," +
                                       std::to_string(f + 1) +
                                       ") lies off the support of the chain");
            if (!std::isfinite(lt))
                out.problems.push_back("rate (" + std::to_string(e + 1) + "," +
                                       std::to_string(f + 1) + ") is not finite");
        }
        std::vector<int> targets = model.reachable(e);
        Eigen::MatrixXd cols = model.gamma_matrix(e, targets);
        Eigen::VectorXd y(static_cast<int>(targets.size()));
        for (std::size_t j = 0; j < targets.size(); ++j)
            y(static_cast<int>(j)) = lambda_tilde(e, targets[j]);
        double resid = (cols * y - model.feasibility_rhs(e)).lpNorm<Eigen::Infinity>();
        out.max_residual = std::max(out.max_residual, resid);
        if (resid > tol)
            out.problems.push_back("martingale equation residual " +
                                   std::to_string(resid) + " at state " +
                                   std::to_string(e + 1));
    }
    out.ok = out.problems.empty();
    return out;
}

double log_density_ratio(const MarketModel& model, const Eigen::MatrixXd& lambda_tilde,
                         const PathRecord& path, double t) {
    if (lambda_tilde.rows() != model.n || lambda_tilde.cols() != model.n)
        throw std::invalid_argument("log_density_ratio: bad reweighting shape");
    double log_z = 0.0;
    int state = path.y0;
    double prev = 0.0;
    auto accrue = [&](double upto) {
        log_z += (upto - prev) *
                 (model.total_rate(state) - lambda_tilde.row(state).sum());
        prev = upto;
    };
    for (const auto& ev : path.events) {
        if (ev.t > t) break;
        accrue(ev.t);
        double num = lambda_tilde(ev.from, ev.to);
        double den = model.lambda(ev.from, ev.to);
        if (num <= 0.0 || den <= 0.0)
            throw std::invalid_argument("log_density_ratio: jump off the reweighting support");
        log_z += std::log(num / den);
        state = ev.to;
    }
    accrue(t);
    return log_z;
}

MartingaleCheck verify_martingale_measure(const MarketModel& model,
                                          const Eigen::MatrixXd& lambda_tilde,
                                          long n_paths, std::uint64_t seed) {
    const int m = model.m;
    McStats all = mc_expectation(
        n_paths, 1 + m, seed, [&](long, Rng& rng, Eigen::VectorXd& out) {
            PathRecord path = simulate_path(model, rng);
            double z = std::exp(log_density_ratio(model, lambda_tilde, path, model.horizon));
            Eigen::VectorXd log_s = log_discounted_prices(model, path, model.horizon);
            out(0) = z;
            for (int i = 0; i < m; ++i) out(1 + i) = z * std::exp(log_s(i));
        });

    MartingaleCheck check;
    check.density.paths = all.paths;
    check.density.mean = all.mean.head(1);
    check.density.se = all.se.head(1);
    check.priced_assets.paths = all.paths;
    check.priced_assets.mean = all.mean.tail(m);
    check.priced_assets.se = all.se.tail(m);
    check.target = model.s0;
    return check;
}

}  // namespace mcmarket

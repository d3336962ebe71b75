#include "mcmarket/insider.hpp"

#include "mcmarket/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcmarket {

// ===== first-sojourn analysis ==============================================

FirstSojournInfo first_sojourn_info(const MarketModel& model, const Scenario& g,
                                    double window, const Eigen::VectorXd& target_increment,
                                    double tol) {
    if (g.length() < 1)
        throw std::invalid_argument("first_sojourn_info: continuation needs a jump");
    if (target_increment.size() != model.m)
        throw std::invalid_argument("first_sojourn_info: bad target size");
    if (window <= 0.0)
        throw std::invalid_argument("first_sojourn_info: window must be positive");

    FirstSojournInfo info;
    Eigen::MatrixXd cols = drift_columns(model, g);
    const int n = g.length();
    info.support_dim = affine_dim(cols);
    info.tail_dim = affine_dim(cols.rightCols(n));

    Eigen::MatrixXd verts = scenario_vertices(model, g, window);
    HullResult hull = hull_member(verts, target_increment, tol);
    info.hull_distance = hull.distance;
    info.consistent = hull.member;

    Eigen::VectorXd w = target_increment - beta_sum(model, g);
    TimeBounds tb = time_bounds(cols, w, window, 0);
    if (!tb.feasible && hull.member) {
        // Target sits on the hull boundary within tolerance; retry with the
        // projected point so the bounds LP sees a consistent system.
        Eigen::VectorXd projected = verts * hull.weights;
        tb = time_bounds(cols, projected - beta_sum(model, g), window, 0);
    }
    if (tb.feasible) {
        info.lo = tb.lo;
        info.hi = tb.hi;
        info.interior_margin = tb.interior_margin;
    } else {
        info.consistent = false;
    }

    info.determined = info.consistent && (info.tail_dim + 1 == info.support_dim);
    if (info.determined) info.value = 0.5 * (info.lo + info.hi);
    return info;
}

std::vector<JumpClassification> classify_jumps(const MarketModel& model,
                                               const PathRecord& path,
                                               const Eigen::VectorXd& ell,
                                               double tol) {
    std::vector<JumpClassification> out;
    const int n_jumps = static_cast<int>(path.events.size());
    if (n_jumps == 0) return out;

    Scenario full;
    full.states.push_back(path.y0);
    for (const auto& ev : path.events) full.states.push_back(ev.to);

    for (int k = 1; k <= n_jumps; ++k) {
        double t_prev = (k == 1) ? 0.0 : path.events[static_cast<std::size_t>(k) - 2].t;
        double window = path.horizon - t_prev;
        Eigen::VectorXd at_prev = log_discounted_prices(model, path, t_prev);
        Scenario suffix = full.suffix(k - 1);
        FirstSojournInfo info =
            first_sojourn_info(model, suffix, window, ell - at_prev, tol);

        JumpClassification jc;
        jc.k = k;
        jc.lower = t_prev + info.lo;
        jc.upper = t_prev + info.hi;
        jc.dim_drop = (info.tail_dim + 1 == info.support_dim);
        jc.determined = info.determined;
        if (info.determined) jc.announced = t_prev + info.value;
        out.push_back(jc);
    }
    return out;
}

// ===== continuation posterior ==============================================

Posterior continuation_posterior(const MarketModel& model, int state, double window,
                                 const Eigen::VectorXd& target_increment,
                                 const PosteriorOptions& opt, Rng& rng) {
    if (state < 0 || state >= model.n)
        throw std::invalid_argument("continuation_posterior: state out of range");
    if (target_increment.size() != model.m)
        throw std::invalid_argument("continuation_posterior: bad target size");
    if (window <= 0.0)
        throw std::invalid_argument("continuation_posterior: window must be positive");

    Posterior post;
    std::vector<Scenario> continuations =
        enumerate_scenarios(model, state, opt.max_jumps);

    // Pass 1: point-mass continuations matching the target dominate.
    std::vector<ContinuationWeight> atoms;
    for (const auto& g : continuations) {
        if (scenario_dim(model, g) != 0) continue;
        Eigen::VectorXd point = scenario_vertices(model, g, window).col(0);
        if ((point - target_increment).lpNorm<Eigen::Infinity>() > opt.atom_tol) continue;
        ContinuationWeight cw;
        cw.g = g;
        cw.pi = scenario_probability(model, g, window);
        cw.density = 1.0;
        cw.dim = 0;
        if (g.length() >= 1)
            cw.first = first_sojourn_info(model, g, window, target_increment, opt.atom_tol);
        atoms.push_back(std::move(cw));
    }
    if (!atoms.empty()) {
        post.atomic = true;
        post.dim = 0;
        double total = 0.0;
        for (const auto& cw : atoms) total += cw.pi;
        if (total <= 0.0) return post;
        post.entries = std::move(atoms);
        for (auto& cw : post.entries) {
            cw.weight = cw.pi / total;
            if (cw.g.length() == 0) post.stop_weight += cw.weight;
        }
        return post;
    }

    // Pass 2: continuous strata. Keep the lowest dimension whose geometry
    // supports the target, then weight by skeleton probability times the
    // estimated increment density.
    std::vector<ContinuationWeight> supported;
    int best_dim = -1;
    for (const auto& g : continuations) {
        if (g.length() < 1) continue;
        int d = scenario_dim(model, g);
        if (d < 1) continue;  // non-matching point mass
        if (best_dim >= 1 && d > best_dim) continue;
        FirstSojournInfo info =
            first_sojourn_info(model, g, window, target_increment, opt.atom_tol);
        if (!info.consistent || info.interior_margin <= opt.support_tol) continue;
        if (best_dim < 0 || d < best_dim) {
            best_dim = d;
            supported.erase(std::remove_if(supported.begin(), supported.end(),
                                           [&](const ContinuationWeight& cw) {
                                               return cw.dim > d;
                                           }),
                            supported.end());
        }
        ContinuationWeight cw;
        cw.g = g;
        cw.pi = scenario_probability(model, g, window);
        cw.dim = d;
        cw.first = info;
        supported.push_back(std::move(cw));
    }
    if (supported.empty()) return post;  // target inconsistent with every continuation

    double total = 0.0;
    for (auto& cw : supported) {
        cw.density = terminal_density_estimate(model, cw.g, window, target_increment,
                                               opt.density_samples, rng);
        total += cw.pi * cw.density;
    }
    if (total <= 0.0) return post;
    post.dim = best_dim;
    post.entries = std::move(supported);
    for (auto& cw : post.entries) cw.weight = cw.pi * cw.density / total;
    return post;
}

// ===== next-jump compensator ===============================================

MixtureCompensator next_jump_compensator(const MarketModel& model, int state,
                                         double window,
                                         const Eigen::VectorXd& target_increment,
                                         int n_bins, const PosteriorOptions& opt,
                                         Rng& rng) {
    if (n_bins < 1) throw std::invalid_argument("next_jump_compensator: need bins");
    Posterior post =
        continuation_posterior(model, state, window, target_increment, opt, rng);

    MixtureCompensator mix;
    mix.stop_mass = post.stop_weight;
    mix.bins.resize(static_cast<std::size_t>(n_bins));
    const double bin_w = window / n_bins;
    for (int b = 0; b < n_bins; ++b) {
        mix.bins[static_cast<std::size_t>(b)].t_lo = b * bin_w;
        mix.bins[static_cast<std::size_t>(b)].t_hi = (b + 1) * bin_w;
    }
    std::vector<double> jump_w(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> jump_w2(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> exposure(static_cast<std::size_t>(n_bins), 0.0);

    auto add_exposure = [&](double until, double mass) {
        for (int b = 0; b < n_bins; ++b) {
            double lo = b * bin_w, hi = (b + 1) * bin_w;
            double overlap = std::min(until, hi) - lo;
            if (overlap <= 0.0) break;
            exposure[static_cast<std::size_t>(b)] += mass * std::min(overlap, bin_w);
        }
    };

    // Stop mass stays at risk for the whole window.
    if (mix.stop_mass > 0.0) add_exposure(window, mix.stop_mass);

    // Predictable part: group pinned first-jump times.
    struct Pinned {
        double time;
        double mass;
        std::vector<int> targets;
    };
    std::vector<Pinned> pinned;
    for (const auto& cw : post.entries) {
        if (cw.g.length() < 1 || !cw.first.determined) continue;
        double t = cw.first.value;
        int target = cw.g.states[1];
        auto it = std::find_if(pinned.begin(), pinned.end(), [&](const Pinned& p) {
            return std::abs(p.time - t) <= opt.atom_tol;
        });
        if (it == pinned.end()) {
            pinned.push_back({t, cw.weight, {target}});
        } else {
            it->mass += cw.weight;
            if (std::find(it->targets.begin(), it->targets.end(), target) ==
                it->targets.end())
                it->targets.push_back(target);
        }
    }
    std::sort(pinned.begin(), pinned.end(),
              [](const Pinned& a, const Pinned& b) { return a.time < b.time; });
    for (const auto& p : pinned) {
        mix.atoms.push_back({p.time, p.mass, p.targets});
        mix.atom_mass += p.mass;
        add_exposure(p.time, p.mass);
    }

    // Continuous part: weighted draws of the first sojourn under each
    // supported, non-pinned continuation.
    const int draws = std::max(64, opt.density_samples / 4);
    for (const auto& cw : post.entries) {
        if (cw.g.length() < 1 || cw.first.determined || cw.weight <= 0.0) continue;
        mix.continuous_mass += cw.weight;
        ConditionalSample cs =
            sample_sojourn_times(model, cw.g, window, draws, rng);

        std::vector<double> sample_w(static_cast<std::size_t>(draws),
                                     1.0 / static_cast<double>(draws));
        if (!post.atomic && scenario_dim(model, cw.g) >= 1) {
            // Condition the sojourn draws on the increment target with a
            // kernel weight around the target's in-plane coordinates.
            Eigen::MatrixXd verts = scenario_vertices(model, cw.g, window);
            int kc = static_cast<int>(verts.cols());
            Eigen::MatrixXd dirs = verts.rightCols(kc - 1).colwise() - verts.col(0);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(dirs, Eigen::ComputeThinU);
            Eigen::MatrixXd basis = svd.matrixU().leftCols(cw.dim);
            Eigen::MatrixXd drifts = drift_columns(model, cw.g);
            Eigen::VectorXd bsum = beta_sum(model, cw.g);
            Eigen::VectorXd u = basis.transpose() * (target_increment - verts.col(0));
            Eigen::MatrixXd proj(cw.dim, draws);
            for (int j = 0; j < draws; ++j) {
                Eigen::VectorXd value = bsum + drifts * cs.draws[static_cast<std::size_t>(j)];
                proj.col(j) = basis.transpose() * (value - verts.col(0));
            }
            Eigen::VectorXd bw(cw.dim);
            for (int l = 0; l < cw.dim; ++l) {
                double mean = proj.row(l).mean();
                double var =
                    (proj.row(l).array() - mean).square().sum() / (draws - 1.0);
                double sigma = std::sqrt(std::max(var, 0.0));
                if (sigma <= 0.0) sigma = 1e-3 * std::max(window, 1.0);
                bw(l) = sigma * std::pow(4.0 / ((cw.dim + 2.0) * draws),
                                         1.0 / (cw.dim + 4.0));
            }
            double total_k = 0.0;
            for (int j = 0; j < draws; ++j) {
                double q = 0.0;
                for (int l = 0; l < cw.dim; ++l) {
                    double z = (u(l) - proj(l, j)) / bw(l);
                    q += z * z;
                }
                sample_w[static_cast<std::size_t>(j)] = std::exp(-0.5 * q);
                total_k += sample_w[static_cast<std::size_t>(j)];
            }
            if (total_k <= 0.0) continue;
            for (auto& sw : sample_w) sw /= total_k;
        }

        for (int j = 0; j < draws; ++j) {
            double s = cs.draws[static_cast<std::size_t>(j)](0);
            double wgt = cw.weight * sample_w[static_cast<std::size_t>(j)];
            int b = std::min(n_bins - 1, static_cast<int>(s / bin_w));
            jump_w[static_cast<std::size_t>(b)] += wgt;
            jump_w2[static_cast<std::size_t>(b)] += wgt * wgt;
            add_exposure(s, wgt);
        }
    }

    for (int b = 0; b < n_bins; ++b) {
        auto& bin = mix.bins[static_cast<std::size_t>(b)];
        bin.exposure = exposure[static_cast<std::size_t>(b)];
        if (bin.exposure > 0.0) {
            bin.hazard = jump_w[static_cast<std::size_t>(b)] / bin.exposure;
            bin.se = std::sqrt(jump_w2[static_cast<std::size_t>(b)]) / bin.exposure;
        }
    }
    return mix;
}

}  // namespace mcmarket

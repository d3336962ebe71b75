#include "mcmarket/nflvr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcmarket {

FlvrScan flvr_scan(const MarketModel& model, const PathRecord& path,
                   const Eigen::VectorXd& ell, const PosteriorOptions& opt,
                   Rng& rng) {
    if (ell.size() != model.m) throw std::invalid_argument("flvr_scan: bad ell size");

    FlvrScan scan;
    const double horizon = path.horizon;
    scan.drift_failure_time = horizon;
    scan.predictable_failure_time = horizon;

    const int n_jumps = static_cast<int>(path.events.size());
    for (int k = 1; k <= n_jumps + 1; ++k) {
        const double t_prev =
            (k == 1) ? 0.0 : path.events[static_cast<std::size_t>(k) - 2].t;
        const double window = horizon - t_prev;
        if (window <= 0.0) break;
        const int state = path.state_at(t_prev);
        Eigen::VectorXd target = ell - log_discounted_prices(model, path, t_prev);

        Posterior post =
            continuation_posterior(model, state, window, target, opt, rng);

        // Interval condition: strictly positive martingale intensities over
        // the posterior-supported, non-pinned first targets.
        std::vector<int> support;
        for (const auto& cw : post.entries) {
            if (cw.g.length() < 1 || cw.weight <= 0.0 || cw.first.determined) continue;
            int f = cw.g.states[1];
            if (std::find(support.begin(), support.end(), f) == support.end())
                support.push_back(f);
        }
        std::sort(support.begin(), support.end());

        StepCheck step;
        step.k = k;
        step.at_time = t_prev;
        step.state = state;
        step.support_states = support;
        step.lp = solve_strict(model.gamma_matrix(state, support),
                               model.feasibility_rhs(state));
        step.feasible = step.lp.feasible;
        scan.steps.push_back(step);

        // Announced-time condition: group pinned continuations by time and
        // require a strictly positive homogeneous solution over the targets.
        struct Group {
            double time;
            std::vector<int> targets;
        };
        std::vector<Group> groups;
        for (const auto& cw : post.entries) {
            if (cw.g.length() < 1 || cw.weight <= 0.0 || !cw.first.determined) continue;
            double at = t_prev + cw.first.value;
            int f = cw.g.states[1];
            auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
                return std::abs(g.time - at) <= opt.atom_tol;
            });
            if (it == groups.end()) {
                groups.push_back({at, {f}});
            } else if (std::find(it->targets.begin(), it->targets.end(), f) ==
                       it->targets.end()) {
                it->targets.push_back(f);
            }
        }
        std::sort(groups.begin(), groups.end(),
                  [](const Group& a, const Group& b) { return a.time < b.time; });
        for (const auto& g : groups) {
            PredictableCheck pc;
            pc.time = g.time;
            pc.state = state;
            pc.targets = g.targets;
            std::sort(pc.targets.begin(), pc.targets.end());
            pc.lp = solve_strict(model.gamma_matrix(state, pc.targets),
                                 Eigen::VectorXd::Zero(model.m));
            pc.feasible = pc.lp.feasible;
            if (!pc.feasible)
                scan.predictable_failure_time =
                    std::min(scan.predictable_failure_time, pc.time);
            scan.predictable.push_back(std::move(pc));
        }

        if (!step.feasible) {
            scan.drift_failure_time = t_prev;
            break;  // a free lunch exists from here on; later checks are moot
        }
    }

    scan.free_lunch_time =
        std::min({scan.drift_failure_time, scan.predictable_failure_time, horizon});
    scan.holds = scan.free_lunch_time >= horizon;
    return scan;
}

double strategy_pnl(const MarketModel& model, const PathRecord& path,
                    const Eigen::VectorXd& amounts, double entry, double exit) {
    if (amounts.size() != model.m)
        throw std::invalid_argument("strategy_pnl: bad position size");
    if (!(entry <= exit))
        throw std::invalid_argument("strategy_pnl: entry must precede exit");
    Eigen::VectorXd l0 = log_discounted_prices(model, path, entry);
    Eigen::VectorXd l1 = log_discounted_prices(model, path, exit);
    double pnl = 0.0;
    for (int i = 0; i < model.m; ++i)
        pnl += amounts(i) * std::expm1(l1(i) - l0(i));
    return pnl;
}

ArbitrageStrategy build_strategy(const PathRecord& path, const FlvrScan& scan) {
    ArbitrageStrategy strat;
    if (scan.holds) {
        strat.note = "no free lunch before the horizon";
        return strat;
    }

    const bool drift_first =
        scan.drift_failure_time <= scan.predictable_failure_time;
    if (drift_first) {
        auto it = std::find_if(scan.steps.begin(), scan.steps.end(),
                               [&](const StepCheck& s) {
                                   return !s.feasible &&
                                          s.at_time == scan.drift_failure_time;
                               });
        if (it == scan.steps.end() || !it->lp.has_certificate) {
            strat.note = "failure detected but no usable certificate";
            return strat;
        }
        strat.available = true;
        strat.kind = "drift";
        strat.state = it->state;
        strat.entry_time = it->at_time;
        double next_jump = path.horizon;
        for (const auto& ev : path.events) {
            if (ev.t > it->at_time) {
                next_jump = ev.t;
                break;
            }
        }
        strat.exit_time = next_jump;
        strat.position = it->lp.certificate;  // xi.(r - mu) < 0, so +xi earns the drift
        strat.guaranteed = it->lp.cert_strict;
        strat.note = it->lp.cert_strict
                         ? "position gains from drift and cannot lose on supported jumps"
                         : "position cannot lose on supported jumps; drift edge not strict";
        return strat;
    }

    auto it = std::find_if(scan.predictable.begin(), scan.predictable.end(),
                           [&](const PredictableCheck& p) {
                               return !p.feasible &&
                                      p.time == scan.predictable_failure_time;
                           });
    if (it == scan.predictable.end() || !it->lp.has_certificate) {
        strat.note = "failure detected but no usable certificate";
        return strat;
    }
    strat.available = true;
    strat.kind = "predictable-jump";
    strat.state = it->state;
    strat.entry_time = std::max(0.0, it->time - 1e-2);
    strat.exit_time = it->time;
    strat.position = it->lp.certificate;
    strat.guaranteed = it->lp.cert_strict;
    strat.note = "enter just before the announced jump; every admissible target pays";
    return strat;
}

}  // namespace mcmarket

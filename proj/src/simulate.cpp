#include "mcmarket/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace mcmarket {

// ===== path record ==========================================================

int PathRecord::state_at(double t) const {
    int state = y0;
    for (const auto& ev : events) {
        if (ev.t > t) break;
        state = ev.to;
    }
    return state;
}

int PathRecord::terminal_state() const {
    return events.empty() ? y0 : events.back().to;
}

std::vector<double> PathRecord::occupation(int n_states) const {
    std::vector<double> occ(static_cast<std::size_t>(n_states), 0.0);
    int state = y0;
    double prev = 0.0;
    for (const auto& ev : events) {
        occ[static_cast<std::size_t>(state)] += ev.t - prev;
        prev = ev.t;
        state = ev.to;
    }
    occ[static_cast<std::size_t>(state)] += horizon - prev;
    return occ;
}

Eigen::MatrixXd PathRecord::transition_counts(int n_states) const {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_states, n_states);
    for (const auto& ev : events) counts(ev.from, ev.to) += 1.0;
    return counts;
}

// ===== simulation ===========================================================

PathRecord simulate_path(const MarketModel& model, Rng& rng) {
    PathRecord path;
    path.y0 = model.y0;
    path.horizon = model.horizon;
    int state = model.y0;
    double t = 0.0;
    std::vector<double> weights(static_cast<std::size_t>(model.n));
    for (;;) {
        double rate = model.total_rate(state);
        if (rate <= 0.0) break;  // absorbing
        t += rng.exponential(rate);
        if (t >= model.horizon) break;
        for (int f = 0; f < model.n; ++f)
            weights[static_cast<std::size_t>(f)] = model.lambda(state, f);
        int target = rng.categorical(weights.data(), model.n, rate);
        path.events.push_back({t, state, target});
        state = target;
    }
    return path;
}

PathRecord simulate_under(const MarketModel& model,
                          const Eigen::MatrixXd& lambda_tilde, Rng& rng) {
    std::string why;
    if (!equivalent_pattern(model.lambda, lambda_tilde, &why))
        throw std::invalid_argument("simulate_under: override not equivalent: " + why);
    MarketModel tilted = model;
    tilted.lambda = lambda_tilde;
    return simulate_path(tilted, rng);
}

Eigen::VectorXd log_discounted_prices(const MarketModel& model,
                                      const PathRecord& path, double t) {
    Eigen::VectorXd log_s = model.s0.array().log();
    int state = path.y0;
    double prev = 0.0;
    auto accrue = [&](double upto) {
        log_s += model.drift(state) * (upto - prev);
        prev = upto;
    };
    for (const auto& ev : path.events) {
        if (ev.t > t) break;
        accrue(ev.t);
        for (int i = 0; i < model.m; ++i) log_s(i) += model.beta[static_cast<std::size_t>(i)](ev.from, ev.to);
        state = ev.to;
    }
    accrue(t);
    return log_s;
}

// ===== Monte Carlo engine ===================================================

int worker_threads() {
    if (const char* env = std::getenv("MCMARKET_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {
constexpr long kChunk = 1024;
}

McStats mc_expectation(long n_paths, int dim, std::uint64_t seed,
                       const PathFunctional& f) {
    if (n_paths <= 0 || dim <= 0)
        throw std::invalid_argument("mc_expectation: need positive paths and dimension");

    const long n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(n_chunks));
    std::vector<Eigen::VectorXd> sq_sums(static_cast<std::size_t>(n_chunks));

    std::atomic<long> next_chunk{0};
    auto worker = [&]() {
        Eigen::VectorXd value(dim);
        for (;;) {
            long c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
            Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
            const long lo = c * kChunk;
            const long hi = std::min(n_paths, lo + kChunk);
            for (long p = lo; p < hi; ++p) {
                Rng rng = Rng::path_stream(seed, static_cast<std::uint64_t>(p));
                f(p, rng, value);
                sum += value;
                sq += value.cwiseProduct(value);
            }
            sums[static_cast<std::size_t>(c)] = std::move(sum);
            sq_sums[static_cast<std::size_t>(c)] = std::move(sq);
        }
    };

    int n_workers = static_cast<int>(std::min<long>(worker_threads(), n_chunks));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Ordered reduction: chunk partials are deterministic, so the final sum
    // is identical whatever thread ran which chunk.
    Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd total_sq = Eigen::VectorXd::Zero(dim);
    for (long c = 0; c < n_chunks; ++c) {
        total += sums[static_cast<std::size_t>(c)];
        total_sq += sq_sums[static_cast<std::size_t>(c)];
    }

    McStats stats;
    stats.paths = n_paths;
    const double n = static_cast<double>(n_paths);
    stats.mean = total / n;
    stats.se = Eigen::VectorXd::Zero(dim);
    if (n_paths > 1) {
        for (int i = 0; i < dim; ++i) {
            double var = (total_sq(i) - n * stats.mean(i) * stats.mean(i)) / (n - 1.0);
            stats.se(i) = std::sqrt(std::max(0.0, var) / n);
        }
    }
    return stats;
}

// ===== Poisson bridge =======================================================

std::vector<double> poisson_bridge_times(int n, double horizon, Rng& rng) {
    std::vector<double> times(static_cast<std::size_t>(std::max(0, n)));
    for (auto& t : times) t = horizon * rng.uniform01();
    std::sort(times.begin(), times.end());
    return times;
}

double bridge_intensity_integral(const std::vector<double>& jump_times,
                                 double horizon, double t) {
    if (t < 0.0 || t >= horizon)
        throw std::invalid_argument("bridge_intensity_integral: need 0 <= t < horizon");
    const int n = static_cast<int>(jump_times.size());
    double acc = 0.0;
    double prev = 0.0;
    int seen = 0;
    for (double tau : jump_times) {
        double upto = std::min(tau, t);
        if (upto > prev) {
            acc += (n - seen) * std::log((horizon - prev) / (horizon - upto));
            prev = upto;
        }
        if (tau > t) break;
        ++seen;
    }
    if (t > prev) acc += (n - seen) * std::log((horizon - prev) / (horizon - t));
    return acc;
}

}  // namespace mcmarket

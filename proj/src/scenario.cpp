#include "mcmarket/scenario.hpp"

#include "mcmarket/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace mcmarket {

// ===== skeleton plumbing ====================================================

bool Scenario::valid(int n_states) const {
    if (states.empty()) return false;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] < 0 || states[i] >= n_states) return false;
        if (i > 0 && states[i] == states[i - 1]) return false;
    }
    return true;
}

Scenario Scenario::prefix(int k) const {
    if (k < 0 || k > length()) throw std::out_of_range("Scenario::prefix");
    return Scenario{std::vector<int>(states.begin(), states.begin() + k + 1)};
}

Scenario Scenario::suffix(int k) const {
    if (k < 0 || k > length()) throw std::out_of_range("Scenario::suffix");
    return Scenario{std::vector<int>(states.begin() + k, states.end())};
}

std::string Scenario::str() const {
    std::string out;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (i) out += '>';
        out += std::to_string(states[i] + 1);
    }
    return out;
}

std::optional<Scenario> concat(const Scenario& a, const Scenario& b) {
    if (a.states.empty() || b.states.empty()) return std::nullopt;
    if (a.terminal() != b.initial()) return std::nullopt;
    Scenario out = a;
    out.states.insert(out.states.end(), b.states.begin() + 1, b.states.end());
    return out;
}

bool admissible(const MarketModel& model, const Scenario& h) {
    if (!h.valid(model.n)) return false;
    for (int i = 0; i < h.length(); ++i) {
        if (model.lambda(h.states[static_cast<std::size_t>(i)],
                         h.states[static_cast<std::size_t>(i) + 1]) <= 0.0)
            return false;
    }
    return true;
}

std::vector<Scenario> enumerate_scenarios(const MarketModel& model, int start,
                                          int max_jumps) {
    if (start < 0 || start >= model.n)
        throw std::invalid_argument("enumerate_scenarios: start state out of range");
    std::vector<Scenario> out;
    std::deque<Scenario> queue;
    queue.push_back(Scenario{{start}});
    while (!queue.empty()) {
        Scenario cur = std::move(queue.front());
        queue.pop_front();
        out.push_back(cur);
        if (cur.length() >= max_jumps) continue;
        int e = cur.terminal();
        for (int f = 0; f < model.n; ++f) {
            if (f == e || model.lambda(e, f) <= 0.0) continue;
            Scenario next = cur;
            next.states.push_back(f);
            queue.push_back(std::move(next));
        }
    }
    return out;
}

// ===== scenario probability =================================================

namespace {

std::vector<double> total_rates(const MarketModel& model, const Scenario& h) {
    std::vector<double> rates(h.states.size());
    for (std::size_t i = 0; i < h.states.size(); ++i)
        rates[i] = model.total_rate(h.states[i]);
    return rates;
}

double edge_product(const MarketModel& model, const Scenario& h) {
    double prod = 1.0;
    for (int i = 0; i < h.length(); ++i)
        prod *= model.lambda(h.states[static_cast<std::size_t>(i)],
                             h.states[static_cast<std::size_t>(i) + 1]);
    return prod;
}

// Convolution of exp(-rate_i t) factors evaluated at w, Laplace transform
// prod 1/(s + rate_i).
double sojourn_convolution_equal(double rate, int n, double w) {
    double value = std::exp(-rate * w);
    for (int k = 1; k <= n; ++k) value *= w / static_cast<double>(k);
    return value;
}

double sojourn_convolution_distinct(const std::vector<double>& rates, double w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        double denom = 1.0;
        for (std::size_t j = 0; j < rates.size(); ++j) {
            if (j != i) denom *= rates[j] - rates[i];
        }
        acc += std::exp(-rates[i] * w) / denom;
    }
    return acc;
}

// RK4 on the bidiagonal chain y_0' = -r_0 y_0, y_k' = -r_k y_k + y_{k-1},
// y(0) = e_0; the convolution value is y_n(w).
double sojourn_convolution_ode(const std::vector<double>& rates, double w,
                               long steps) {
    const std::size_t n = rates.size();
    std::vector<double> y(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n);
    y[0] = 1.0;
    auto deriv = [&](const std::vector<double>& state, std::vector<double>& out) {
        out[0] = -rates[0] * state[0];
        for (std::size_t i = 1; i < n; ++i)
            out[i] = -rates[i] * state[i] + state[i - 1];
    };
    const double h = w / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
        deriv(y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        deriv(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        deriv(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        deriv(tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return y[n - 1];
}

}  // namespace

double scenario_probability_quadrature(const MarketModel& model, const Scenario& h,
                                       double window) {
    if (!h.valid(model.n))
        throw std::invalid_argument("scenario_probability: invalid scenario");
    if (window < 0.0) throw std::invalid_argument("scenario_probability: negative window");
    if (window == 0.0) return h.length() == 0 ? 1.0 : 0.0;
    std::vector<double> rates = total_rates(model, h);
    double prev = sojourn_convolution_ode(rates, window, 1024);
    for (long steps = 2048; steps <= (1L << 17); steps *= 2) {
        double cur = sojourn_convolution_ode(rates, window, steps);
        if (std::abs(cur - prev) <= std::max(1e-15, 1e-12 * std::abs(cur)))
            return edge_product(model, h) * cur;
        prev = cur;
    }
    return edge_product(model, h) * prev;
}

double scenario_probability(const MarketModel& model, const Scenario& h,
                            double window) {
    if (!h.valid(model.n))
        throw std::invalid_argument("scenario_probability: invalid scenario");
    if (!admissible(model, h)) return 0.0;
    if (window < 0.0) throw std::invalid_argument("scenario_probability: negative window");
    if (window == 0.0) return h.length() == 0 ? 1.0 : 0.0;

    std::vector<double> rates = total_rates(model, h);
    const int n = h.length();
    if (n == 0) return std::exp(-rates[0] * window);

    double rmax = *std::max_element(rates.begin(), rates.end());
    double rmin = *std::min_element(rates.begin(), rates.end());
    if (rmax - rmin <= 1e-12 * std::max(1.0, rmax)) {
        return edge_product(model, h) *
               sojourn_convolution_equal(rates[0], n, window);
    }

    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rates.size(); ++i)
        for (std::size_t j = i + 1; j < rates.size(); ++j)
            min_gap = std::min(min_gap, std::abs(rates[i] - rates[j]));
    if (min_gap > 1e-3 * std::max(1.0, rmax)) {
        return edge_product(model, h) * sojourn_convolution_distinct(rates, window);
    }
    // Clustered but unequal rates: the partial-fraction form cancels badly,
    // so use the quadrature route.
    return scenario_probability_quadrature(model, h, window);
}

// ===== increment geometry ===================================================

Eigen::MatrixXd drift_columns(const MarketModel& model, const Scenario& h) {
    Eigen::MatrixXd cols(model.m, h.length() + 1);
    for (std::size_t i = 0; i < h.states.size(); ++i)
        cols.col(static_cast<int>(i)) = model.drift(h.states[i]);
    return cols;
}

Eigen::VectorXd beta_sum(const MarketModel& model, const Scenario& h) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.m);
    for (int i = 0; i < h.length(); ++i) {
        int e = h.states[static_cast<std::size_t>(i)];
        int f = h.states[static_cast<std::size_t>(i) + 1];
        for (int a = 0; a < model.m; ++a) acc(a) += model.beta[static_cast<std::size_t>(a)](e, f);
    }
    return acc;
}

Eigen::MatrixXd scenario_vertices(const MarketModel& model, const Scenario& h,
                                  double window) {
    Eigen::MatrixXd verts = window * drift_columns(model, h);
    verts.colwise() += beta_sum(model, h);
    return verts;
}

int scenario_dim(const MarketModel& model, const Scenario& h) {
    return affine_dim(drift_columns(model, h));
}

std::vector<int> suffix_dims(const MarketModel& model, const Scenario& h) {
    Eigen::MatrixXd cols = drift_columns(model, h);
    const int n = h.length();
    std::vector<int> dims(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k)
        dims[static_cast<std::size_t>(k)] = affine_dim(cols.rightCols(n + 1 - k));
    return dims;
}

// ===== conditional sojourn times ============================================

ConditionalSample sample_sojourn_times(const MarketModel& model, const Scenario& h,
                                       double window, int count, Rng& rng) {
    if (!h.valid(model.n))
        throw std::invalid_argument("sample_sojourn_times: invalid scenario");
    if (window <= 0.0 || count <= 0)
        throw std::invalid_argument("sample_sojourn_times: need positive window and count");

    ConditionalSample out;
    out.draws.reserve(static_cast<std::size_t>(count));
    const int k = h.length() + 1;
    if (k == 1) {
        out.draws.assign(static_cast<std::size_t>(count),
                         Eigen::VectorXd::Constant(1, window));
        out.acceptance_rate = 1.0;
        return out;
    }

    std::vector<double> rates = total_rates(model, h);
    double rmin = *std::min_element(rates.begin(), rates.end());

    long attempts = 0;
    const long max_attempts = 4000L * count + 10000L;
    Eigen::VectorXd dt(k);
    while (static_cast<int>(out.draws.size()) < count) {
        if (++attempts > max_attempts)
            throw std::runtime_error("sample_sojourn_times: acceptance rate too low");
        // Uniform point on the simplex: normalized iid exponentials.
        double total = 0.0;
        for (int i = 0; i < k; ++i) {
            dt(i) = rng.exponential(1.0);
            total += dt(i);
        }
        dt *= window / total;
        double weight = 0.0;
        for (int i = 0; i < k; ++i) weight += rates[static_cast<std::size_t>(i)] * dt(i);
        double accept_p = std::exp(-(weight - window * rmin));
        if (rng.uniform01() <= accept_p) out.draws.push_back(dt);
    }
    out.acceptance_rate = static_cast<double>(count) / static_cast<double>(attempts);
    return out;
}

double terminal_density_estimate(const MarketModel& model, const Scenario& h,
                                 double window, const Eigen::VectorXd& target_increment,
                                 int samples, Rng& rng) {
    const int d = scenario_dim(model, h);
    if (d < 1)
        throw std::invalid_argument("terminal_density_estimate: degenerate scenario (atom)");
    if (target_increment.size() != model.m)
        throw std::invalid_argument("terminal_density_estimate: bad target size");

    // Orthonormal frame of the affine hull from the exact vertex directions.
    Eigen::MatrixXd verts = scenario_vertices(model, h, window);
    const int k = static_cast<int>(verts.cols());
    Eigen::MatrixXd dirs = verts.rightCols(k - 1).colwise() - verts.col(0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dirs, Eigen::ComputeThinU);
    Eigen::MatrixXd basis = svd.matrixU().leftCols(d);

    Eigen::VectorXd rel = target_increment - verts.col(0);
    Eigen::VectorXd in_plane = basis.transpose() * rel;
    double scale = std::max(1.0, verts.cwiseAbs().maxCoeff());
    if ((rel - basis * in_plane).lpNorm<Eigen::Infinity>() > 1e-7 * scale) return 0.0;

    ConditionalSample cs = sample_sojourn_times(model, h, window, samples, rng);
    Eigen::MatrixXd drifts = drift_columns(model, h);
    Eigen::VectorXd bsum = beta_sum(model, h);
    Eigen::MatrixXd proj(d, samples);
    for (int j = 0; j < samples; ++j) {
        Eigen::VectorXd value = bsum + drifts * cs.draws[static_cast<std::size_t>(j)];
        proj.col(j) = basis.transpose() * (value - verts.col(0));
    }

    // Product-Gaussian KDE with Silverman bandwidths.
    Eigen::VectorXd bw(d);
    const double ns = static_cast<double>(samples);
    for (int l = 0; l < d; ++l) {
        double mean = proj.row(l).mean();
        double var = (proj.row(l).array() - mean).square().sum() / (ns - 1.0);
        double sigma = std::sqrt(std::max(var, 0.0));
        if (sigma <= 0.0) sigma = 1e-3 * std::max(window, 1.0);
        bw(l) = sigma * std::pow(4.0 / ((d + 2.0) * ns), 1.0 / (d + 4.0));
    }
    const double inv_norm = 1.0 / (std::pow(2.0 * M_PI, d / 2.0) * bw.prod());
    double acc = 0.0;
    for (int j = 0; j < samples; ++j) {
        double q = 0.0;
        for (int l = 0; l < d; ++l) {
            double z = (in_plane(l) - proj(l, j)) / bw(l);
            q += z * z;
        }
        acc += std::exp(-0.5 * q);
    }
    return acc * inv_norm / ns;
}

}  // namespace mcmarket

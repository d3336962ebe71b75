#include "mcmarket/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mcmarket {

std::vector<int> MarketModel::reachable(int e) const {
    std::vector<int> out;
    for (int f = 0; f < n; ++f) {
        if (f != e && lambda(e, f) > 0.0) out.push_back(f);
    }
    return out;
}

Eigen::MatrixXd MarketModel::gamma_matrix(int e, const std::vector<int>& cols) const {
    Eigen::MatrixXd g(m, static_cast<int>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (int i = 0; i < m; ++i) g(i, static_cast<int>(j)) = gamma(i, e, cols[j]);
    }
    return g;
}

std::string MarketModel::state_label(int e) const {
    if (e >= 0 && e < static_cast<int>(state_labels.size())) return state_labels[e];
    return std::to_string(e + 1);
}

std::string MarketModel::asset_name(int i) const {
    if (i >= 0 && i < static_cast<int>(asset_names.size())) return asset_names[i];
    return "S" + std::to_string(i + 1);
}

int MarketModel::state_index(const std::string& label) const {
    for (int e = 0; e < n; ++e) {
        if (state_label(e) == label) return e;
    }
    // Tolerate the plain 1-based numeric form even under custom labels.
    try {
        std::size_t used = 0;
        int idx = std::stoi(label, &used);
        if (used == label.size() && idx >= 1 && idx <= n) return idx - 1;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("unknown state label '" + label + "'");
}

namespace {

bool all_finite(const Eigen::MatrixXd& x) {
    return x.allFinite();
}

}  // namespace

ValidationReport validate_model(const MarketModel& model) {
    ValidationReport rep;
    auto err = [&](const std::string& field, const std::string& msg) {
        rep.errors.push_back({field, msg});
    };
    auto warn = [&](const std::string& field, const std::string& msg) {
        rep.warnings.push_back({field, msg});
    };

    if (model.n < 1) err("states", "need at least one chain state");
    if (model.m < 0) err("assets", "asset count cannot be negative");
    if (!(model.horizon > 0.0) || !std::isfinite(model.horizon))
        err("horizon", "horizon must be a positive finite time");
    if (model.y0 < 0 || model.y0 >= model.n)
        err("y0", "initial state out of range");

    if (model.lambda.rows() != model.n || model.lambda.cols() != model.n) {
        err("lambda", "intensity matrix must be states x states");
    } else {
        if (!all_finite(model.lambda)) err("lambda", "intensities must be finite");
        for (int e = 0; e < model.n; ++e) {
            if (model.lambda(e, e) != 0.0)
                err("lambda", "diagonal entries must be zero");
            for (int f = 0; f < model.n; ++f) {
                if (f != e && model.lambda(e, f) < 0.0)
                    err("lambda", "off-diagonal intensities must be nonnegative");
            }
            if (model.lambda.row(e).sum() == 0.0)
                warn("lambda", "state " + std::to_string(e + 1) + " is absorbing");
        }
    }

    if (model.r.size() != model.n) {
        err("r", "need one short rate per state");
    } else if (!model.r.allFinite()) {
        err("r", "short rates must be finite");
    }

    if (model.mu.rows() != model.m || model.mu.cols() != model.n) {
        err("mu", "drift matrix must be assets x states");
    } else if (!all_finite(model.mu)) {
        err("mu", "drifts must be finite");
    }

    if (static_cast<int>(model.beta.size()) != model.m) {
        err("beta", "need one jump-size matrix per asset");
    } else {
        for (int i = 0; i < model.m; ++i) {
            const auto& b = model.beta[i];
            if (b.rows() != model.n || b.cols() != model.n) {
                err("beta", "jump-size matrix must be states x states");
                continue;
            }
            if (!all_finite(b)) err("beta", "jump sizes must be finite");
            if (model.lambda.rows() == model.n && model.lambda.cols() == model.n) {
                bool any_jump = false;
                for (int e = 0; e < model.n; ++e)
                    for (int f = 0; f < model.n; ++f)
                        if (e != f && model.lambda(e, f) > 0.0 && b(e, f) != 0.0)
                            any_jump = true;
                if (!any_jump && model.n > 1)
                    warn("beta", "asset " + std::to_string(i + 1) +
                                     " never jumps on any admissible transition");
            }
        }
    }

    if (model.s0.size() != model.m) {
        err("s0", "need one initial price per asset");
    } else {
        for (int i = 0; i < model.m; ++i)
            if (!(model.s0(i) > 0.0) || !std::isfinite(model.s0(i)))
                err("s0", "initial prices must be positive and finite");
    }

    if (!model.state_labels.empty()) {
        if (static_cast<int>(model.state_labels.size()) != model.n) {
            err("states", "need one label per state");
        } else {
            for (int e = 0; e < model.n; ++e) {
                if (model.state_labels[e].empty())
                    err("states", "state labels cannot be empty");
                for (int f = e + 1; f < model.n; ++f)
                    if (model.state_labels[e] == model.state_labels[f])
                        err("states", "duplicate state label '" + model.state_labels[e] + "'");
            }
        }
    }
    if (!model.asset_names.empty() &&
        static_cast<int>(model.asset_names.size()) != model.m)
        err("assets", "need one name per asset");

    rep.valid = rep.errors.empty();
    return rep;
}

void require_valid(const MarketModel& model) {
    ValidationReport rep = validate_model(model);
    if (rep.valid) return;
    std::ostringstream os;
    os << "invalid model";
    if (!model.name.empty()) os << " '" << model.name << "'";
    os << ":";
    for (const auto& e : rep.errors) os << " [" << e.field << "] " << e.message << ";";
    throw std::invalid_argument(os.str());
}

bool equivalent_pattern(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        return fail("shape mismatch");
    for (int e = 0; e < a.rows(); ++e) {
        if (a(e, e) != 0.0 || b(e, e) != 0.0) return fail("nonzero diagonal");
        for (int f = 0; f < a.cols(); ++f) {
            if (e == f) continue;
            if (a(e, f) < 0.0 || b(e, f) < 0.0) return fail("negative intensity");
            if ((a(e, f) > 0.0) != (b(e, f) > 0.0))
                return fail("positivity pattern differs at (" +
                            std::to_string(e + 1) + "," + std::to_string(f + 1) + ")");
        }
    }
    if (why) why->clear();
    return true;
}

Eigen::MatrixXd transition_matrix(const MarketModel& model, double t,
                                  double tail_tol) {
    if (t < 0.0 || !std::isfinite(t))
        throw std::invalid_argument("transition_matrix: time must be nonnegative and finite");
    const int n = model.n;
    Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    double theta = 0.0;
    for (int e = 0; e < n; ++e) theta = std::max(theta, model.total_rate(e));
    if (t == 0.0 || theta == 0.0) return identity;

    // B = I + Q/theta is a stochastic matrix, so the series
    // P_t = sum_k Pois(k; theta t) B^k has only nonnegative terms.
    Eigen::MatrixXd b = identity;
    for (int e = 0; e < n; ++e) {
        for (int f = 0; f < n; ++f) {
            if (e == f)
                b(e, f) = 1.0 - model.total_rate(e) / theta;
            else
                b(e, f) = model.lambda(e, f) / theta;
        }
    }

    const double a = theta * t;
    double weight = std::exp(-a);
    if (weight == 0.0)
        throw std::runtime_error("transition_matrix: theta*t too large for uniformization");
    double cumulative = weight;
    Eigen::MatrixXd power = identity;       // B^k
    Eigen::MatrixXd p = weight * identity;  // running sum
    for (long k = 1; cumulative < 1.0 - tail_tol; ++k) {
        power = power * b;
        weight *= a / static_cast<double>(k);
        p += weight * power;
        cumulative += weight;
        if (k > 100000)
            throw std::runtime_error("transition_matrix: series failed to converge");
    }
    return p;
}

}  // namespace mcmarket

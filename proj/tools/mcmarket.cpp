// mcmarket: command-line front end for the Markov-chain market library.
//
// Subcommands: validate, na-solve, verify-q, simulate, scenarios, classify,
// compensator, nflvr, arbitrage, fixtures. Artifacts carry a header block
// (tool version, config hash, seed) and print floats with 17 significant
// digits. Exit codes: 0 success (including infeasible *results*), 2 bad
// input, 3 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include "mcmarket/feasibility.hpp"
#include "mcmarket/insider.hpp"
#include "mcmarket/json_io.hpp"
#include "mcmarket/model.hpp"
#include "mcmarket/nflvr.hpp"
#include "mcmarket/noarb.hpp"
#include "mcmarket/rng.hpp"
#include "mcmarket/scenario.hpp"
#include "mcmarket/simulate.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;
using namespace mcmarket;

constexpr const char* kVersion = "0.1.0";

// ===== formatting ===========================================================

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// ===== config hash ==========================================================

struct Hasher {
    std::uint64_t h = 14695981039346656037ull;

    void add(const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0xff;  // field separator
        h *= 1099511628211ull;
    }
    void add(double x) { add(fmt17(x)); }
    void add(long x) { add(std::to_string(x)); }
    void add(std::uint64_t x) { add(std::to_string(x)); }

    std::string hex() const {
        char buf[20];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

// ===== shared options =======================================================

struct Common {
    std::string model_arg;
    std::uint64_t seed = 12345;
    long paths = 100000;
    int nmax = 4;
    std::string out;
    std::string format = "json";
};

MarketModel load_model(const std::string& arg) {
    for (const auto& name : builtin_model_names()) {
        if (arg == name) return builtin_model(name);
    }
    return load_model_file(arg);
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << text;
}

json json_header(const std::string& command, const Hasher& hash) {
    json h;
    h["tool"] = "mcmarket";
    h["version"] = kVersion;
    h["command"] = command;
    h["config_hash"] = hash.hex();
    return h;
}

std::string csv_header(const std::string& command, const Hasher& hash,
                       const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ostringstream os;
    os << "# mcmarket " << kVersion << "\n";
    os << "# command: " << command << "\n";
    os << "# config_hash: " << hash.hex() << "\n";
    for (const auto& [k, v] : extra) os << "# " << k << ": " << v << "\n";
    return os.str();
}

json vec_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json mat_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json labels_json(const MarketModel& model, const std::vector<int>& states) {
    json out = json::array();
    for (int s : states) out.push_back(model.state_label(s));
    return out;
}

std::string scenario_text(const MarketModel& model, const Scenario& h) {
    std::string out;
    for (std::size_t i = 0; i < h.states.size(); ++i) {
        if (i) out += '>';
        out += model.state_label(h.states[i]);
    }
    return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    Eigen::VectorXd out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ===== validate =============================================================

int run_validate(const Common& c) {
    MarketModel model = [&] {
        for (const auto& name : builtin_model_names())
            if (c.model_arg == name) return builtin_model(name);
        return parse_model(read_file(c.model_arg));
    }();
    ValidationReport rep = validate_model(model);
    for (const auto& w : rep.warnings)
        std::cerr << "warning [" << w.field << "]: " << w.message << "\n";
    if (!rep.valid) {
        for (const auto& e : rep.errors)
            std::cerr << "error [" << e.field << "]: " << e.message << "\n";
        return 2;
    }
    emit(c.out, serialize_model(model));
    return 0;
}

// ===== na-solve =============================================================

int run_na_solve(const Common& c) {
    MarketModel model = load_model(c.model_arg);
    NaReport rep = na_solve(model);

    Hasher hash;
    hash.add(std::string("na-solve"));
    hash.add(serialize_model(model));

    if (c.format == "csv") {
        std::ostringstream os;
        os << csv_header("na-solve", hash,
                         {{"model", model.name}, {"feasible", rep.feasible ? "true" : "false"}});
        os << "state,to,lambda_tilde,state_feasible,residual,margin\n";
        for (const auto& st : rep.states) {
            for (int f : model.reachable(st.state)) {
                os << csv_escape(model.state_label(st.state)) << ','
                   << csv_escape(model.state_label(f)) << ','
                   << fmt17(st.lambda_tilde(f)) << ','
                   << (st.feasible ? "true" : "false") << ','
                   << fmt17(st.residual) << ',' << fmt17(st.lp.margin) << "\n";
            }
        }
        emit(c.out, os.str());
        return 0;
    }

    json j;
    j["header"] = json_header("na-solve", hash);
    j["model"] = model.name;
    j["feasible"] = rep.feasible;
    j["lambda_tilde"] = rep.feasible ? mat_json(rep.lambda_tilde) : json(nullptr);
    json states = json::array();
    for (const auto& st : rep.states) {
        json s;
        s["state"] = model.state_label(st.state);
        s["feasible"] = st.feasible;
        s["lambda_tilde"] = vec_json(st.lambda_tilde);
        s["residual"] = st.residual;
        s["margin"] = st.lp.margin;
        if (!st.feasible && st.lp.has_certificate) {
            s["certificate"] = vec_json(st.lp.certificate);
            s["certificate_strict"] = st.lp.cert_strict;
        }
        states.push_back(std::move(s));
    }
    j["states"] = std::move(states);
    emit(c.out, j.dump(2) + "\n");
    return 0;
}

// ===== verify-q =============================================================

int run_verify_q(const Common& c, const std::string& override_file) {
    MarketModel model = load_model(c.model_arg);

    Eigen::MatrixXd lambda_tilde;
    json override_check = nullptr;
    if (!override_file.empty()) {
        lambda_tilde = load_override_file(override_file, model.n);
        std::string why;
        if (!equivalent_pattern(model.lambda, lambda_tilde, &why))
            throw std::invalid_argument("override: " + why);
        OverrideCheck chk = check_override(model, lambda_tilde);
        override_check = json{{"ok", chk.ok}, {"max_residual", chk.max_residual}};
        if (!chk.ok) override_check["problems"] = chk.problems;
    } else {
        NaReport rep = na_solve(model);
        if (!rep.feasible)
            throw std::runtime_error(
                "verify-q: model admits no martingale intensity; supply --override");
        lambda_tilde = rep.lambda_tilde;
    }

    Hasher hash;
    hash.add(std::string("verify-q"));
    hash.add(serialize_model(model));
    hash.add(serialize_override(lambda_tilde));
    hash.add(c.seed);
    hash.add(c.paths);

    MartingaleCheck chk = verify_martingale_measure(model, lambda_tilde, c.paths, c.seed);
    bool ok = std::abs(chk.density.mean(0) - 1.0) <= 3.0 * chk.density.se(0);
    for (int i = 0; i < model.m; ++i)
        ok = ok && std::abs(chk.priced_assets.mean(i) - chk.target(i)) <=
                       3.0 * chk.priced_assets.se(i);

    if (c.format == "csv") {
        std::ostringstream os;
        os << csv_header("verify-q", hash,
                         {{"model", model.name},
                          {"seed", std::to_string(c.seed)},
                          {"paths", std::to_string(c.paths)}});
        os << "quantity,mean,se,target\n";
        os << "Z_T," << fmt17(chk.density.mean(0)) << ',' << fmt17(chk.density.se(0))
           << ",1\n";
        for (int i = 0; i < model.m; ++i) {
            os << csv_escape("Z_T*" + model.asset_name(i)) << ','
               << fmt17(chk.priced_assets.mean(i)) << ','
               << fmt17(chk.priced_assets.se(i)) << ',' << fmt17(chk.target(i)) << "\n";
        }
        emit(c.out, os.str());
        return 0;
    }

    json j;
    j["header"] = json_header("verify-q", hash);
    j["header"]["seed"] = c.seed;
    j["header"]["paths"] = c.paths;
    j["model"] = model.name;
    j["lambda_tilde"] = mat_json(lambda_tilde);
    j["override_check"] = override_check;
    j["density"] = {{"mean", chk.density.mean(0)}, {"se", chk.density.se(0)}, {"target", 1.0}};
    json assets = json::array();
    for (int i = 0; i < model.m; ++i) {
        assets.push_back(json{{"name", model.asset_name(i)},
                              {"mean", chk.priced_assets.mean(i)},
                              {"se", chk.priced_assets.se(i)},
                              {"target", chk.target(i)}});
    }
    j["assets"] = std::move(assets);
    j["within_3se"] = ok;
    emit(c.out, j.dump(2) + "\n");
    return 0;
}

// ===== simulate =============================================================

int run_simulate(const Common& c, const std::string& start, const std::string& under_file,
                 double horizon_override) {
    MarketModel model = load_model(c.model_arg);
    if (horizon_override > 0.0) model.horizon = horizon_override;
    if (!start.empty()) model.y0 = model.state_index(start);
    require_valid(model);

    MarketModel chain = model;  // the chain may run under an override
    if (!under_file.empty()) {
        Eigen::MatrixXd lt = load_override_file(under_file, model.n);
        std::string why;
        if (!equivalent_pattern(model.lambda, lt, &why))
            throw std::invalid_argument("override: " + why);
        chain.lambda = lt;
    }

    Hasher hash;
    hash.add(std::string("simulate"));
    hash.add(serialize_model(chain));
    hash.add(c.seed);
    hash.add(c.paths);

    if (c.format == "csv") {
        std::ostringstream os;
        os << csv_header("simulate", hash,
                         {{"model", model.name},
                          {"seed", std::to_string(c.seed)},
                          {"paths", std::to_string(c.paths)}});
        os << "path_id,time,from_state,to_state";
        for (int i = 0; i < model.m; ++i) os << ",L_" << csv_escape(model.asset_name(i));
        os << "\n";
        for (long p = 0; p < c.paths; ++p) {
            Rng rng = Rng::path_stream(c.seed, static_cast<std::uint64_t>(p));
            PathRecord path = simulate_path(chain, rng);
            for (const auto& ev : path.events) {
                Eigen::VectorXd log_s = log_discounted_prices(model, path, ev.t);
                os << p << ',' << fmt17(ev.t) << ','
                   << csv_escape(model.state_label(ev.from)) << ','
                   << csv_escape(model.state_label(ev.to));
                for (int i = 0; i < model.m; ++i) os << ',' << fmt17(log_s(i));
                os << "\n";
            }
        }
        emit(c.out, os.str());
        return 0;
    }

    json j;
    j["header"] = json_header("simulate", hash);
    j["header"]["seed"] = c.seed;
    j["header"]["paths"] = c.paths;
    j["model"] = model.name;
    json paths = json::array();
    for (long p = 0; p < c.paths; ++p) {
        Rng rng = Rng::path_stream(c.seed, static_cast<std::uint64_t>(p));
        PathRecord path = simulate_path(chain, rng);
        json pj;
        pj["initial_state"] = model.state_label(path.y0);
        pj["horizon"] = path.horizon;
        json events = json::array();
        for (const auto& ev : path.events) {
            json e;
            e["t"] = ev.t;
            e["from"] = model.state_label(ev.from);
            e["to"] = model.state_label(ev.to);
            e["L"] = vec_json(log_discounted_prices(model, path, ev.t));
            events.push_back(std::move(e));
        }
        pj["events"] = std::move(events);
        pj["terminal_state"] = model.state_label(path.terminal_state());
        pj["terminal_log_prices"] =
            vec_json(log_discounted_prices(model, path, path.horizon));
        paths.push_back(std::move(pj));
    }
    j["paths"] = std::move(paths);
    emit(c.out, j.dump(2) + "\n");
    return 0;
}

// ===== scenarios ============================================================

int run_scenarios(const Common& c, const std::string& start, double horizon_override) {
    MarketModel model = load_model(c.model_arg);
    if (horizon_override > 0.0) model.horizon = horizon_override;
    int e0 = start.empty() ? model.y0 : model.state_index(start);
    const double window = model.horizon;

    std::vector<Scenario> all = enumerate_scenarios(model, e0, c.nmax);
    double mass = 0.0;
    for (const auto& h : all) mass += scenario_probability(model, h, window);

    Hasher hash;
    hash.add(std::string("scenarios"));
    hash.add(serialize_model(model));
    hash.add(model.state_label(e0));
    hash.add(static_cast<long>(c.nmax));
    hash.add(window);

    if (c.format == "csv") {
        std::ostringstream os;
        os << csv_header("scenarios", hash,
                         {{"model", model.name},
                          {"start", model.state_label(e0)},
                          {"nmax", std::to_string(c.nmax)},
                          {"horizon", fmt17(window)},
                          {"enumerated_mass", fmt17(mass)}});
        os << "scenario,probability,dims,vertices\n";
        for (const auto& h : all) {
            double pi = scenario_probability(model, h, window);
            std::vector<int> dims = suffix_dims(model, h);
            Eigen::MatrixXd verts = scenario_vertices(model, h, window);
            std::string dim_s;
            for (std::size_t k = 0; k < dims.size(); ++k) {
                if (k) dim_s += ' ';
                dim_s += std::to_string(dims[k]);
            }
            std::string vert_s;
            for (int col = 0; col < verts.cols(); ++col) {
                if (col) vert_s += '|';
                for (int i = 0; i < verts.rows(); ++i) {
                    if (i) vert_s += ' ';
                    vert_s += fmt17(verts(i, col));
                }
            }
            os << csv_escape(scenario_text(model, h)) << ',' << fmt17(pi) << ','
               << csv_escape(dim_s) << ',' << csv_escape(vert_s) << "\n";
        }
        emit(c.out, os.str());
        return 0;
    }

    json j;
    j["header"] = json_header("scenarios", hash);
    j["model"] = model.name;
    j["start"] = model.state_label(e0);
    j["nmax"] = c.nmax;
    j["horizon"] = window;
    j["enumerated_mass"] = mass;
    json rows = json::array();
    for (const auto& h : all) {
        json row;
        row["scenario"] = scenario_text(model, h);
        row["states"] = labels_json(model, h.states);
        row["probability"] = scenario_probability(model, h, window);
        row["dims"] = suffix_dims(model, h);
        row["vertices"] = mat_json(scenario_vertices(model, h, window));
        rows.push_back(std::move(row));
    }
    j["scenarios"] = std::move(rows);
    emit(c.out, j.dump(2) + "\n");
    return 0;
}

// ===== classify =============================================================

int run_classify(const Common& c, const std::string& path_file, int path_index,
                 const std::vector<double>& ell_values, int only_k) {
    MarketModel model = load_model(c.model_arg);
    PathRecord path = load_path_file(path_file, model, path_index);
    if (static_cast<int>(ell_values.size()) != model.m)
        throw std::invalid_argument("--ell needs one value per asset");
    Eigen::VectorXd ell = to_vector(ell_values);

    std::vector<JumpClassification> jumps = classify_jumps(model, path, ell);

    Hasher hash;
    hash.add(std::string("classify"));
    hash.add(serialize_model(model));
    hash.add(serialize_path(path, model));
    for (double v : ell_values) hash.add(v);

    if (c.format == "csv") {
        std::ostringstream os;
        os << csv_header("classify", hash, {{"model", model.name}});
        os << "k,lower,upper,dim_drop,determined,announced\n";
        for (const auto& jc : jumps) {
            if (only_k > 0 && jc.k != only_k) continue;
            os << jc.k << ',' << fmt17(jc.lower) << ',' << fmt17(jc.upper) << ','
               << (jc.dim_drop ? "true" : "false") << ','
               << (jc.determined ? "true" : "false") << ','
               << (jc.determined ? fmt17(jc.announced) : "") << "\n";
        }
        emit(c.out, os.str());
        return 0;
    }

    json j;
    j["header"] = json_header("classify", hash);
    j["model"] = model.name;
    j["ell"] = ell_values;
    j["path"] = json::parse(serialize_path(path, model));
    json rows = json::array();
    for (const auto& jc : jumps) {
        if (only_k > 0 && jc.k != only_k) continue;
        json row;
        row["k"] = jc.k;
        row["lower"] = jc.lower;
        row["upper"] = jc.upper;
        row["dim_drop"] = jc.dim_drop;
        row["determined"] = jc.determined;
        row["announced"] = jc.determined ? json(jc.announced) : json(nullptr);
        rows.push_back(std::move(row));
    }
    j["jumps"] = std::move(rows);
    emit(c.out, j.dump(2) + "\n");
    return 0;
}

// ===== compensator ==========================================================

void scale_cycle_rates(MarketModel& model, double up, double down) {
    if (model.n != 3)
        throw std::invalid_argument("--lambda-up/--lambda-down need the 3-state cycle");
    for (int e = 0; e < 3; ++e) {
        int u = (e + 1) % 3, d = (e + 2) % 3;
        if (!(model.lambda(e, u) > 0.0) || !(model.lambda(e, d) > 0.0))
            throw std::invalid_argument("--lambda-up/--lambda-down need the 3-state cycle");
        if (up > 0.0) model.lambda(e, u) = up;
        if (down > 0.0) model.lambda(e, d) = down;
    }
}

int run_compensator(const Common& c, const std::string& state_label, double window_arg,
                    const std::vector<double>& ell_values,
                    const std::vector<double>& increment_values, int grid, int max_jumps,
                    int samples, double lambda_up, double lambda_down) {
    MarketModel model = load_model(c.model_arg);
    if (lambda_up > 0.0 || lambda_down > 0.0)
        scale_cycle_rates(model, lambda_up, lambda_down);
    require_valid(model);

    int state = state_label.empty() ? model.y0 : model.state_index(state_label);
    double window = window_arg > 0.0 ? window_arg : model.horizon;

    Eigen::VectorXd increment;
    if (!increment_values.empty()) {
        if (static_cast<int>(increment_values.size()) != model.m)
            throw std::invalid_argument("--increment needs one value per asset");
        increment = to_vector(increment_values);
    } else if (!ell_values.empty()) {
        if (static_cast<int>(ell_values.size()) != model.m)
            throw std::invalid_argument("--ell needs one value per asset");
        increment = to_vector(ell_values) - model.s0.array().log().matrix();
    } else {
        throw std::invalid_argument("compensator needs --ell or --increment");
    }

    PosteriorOptions opt;
    opt.max_jumps = max_jumps;
    opt.density_samples = samples;
    Rng rng(c.seed);
    MixtureCompensator comp =
        next_jump_compensator(model, state, window, increment, grid, opt, rng);

    Hasher hash;
    hash.add(std::string("compensator"));
    hash.add(serialize_model(model));
    hash.add(model.state_label(state));
    hash.add(window);
    for (int i = 0; i < increment.size(); ++i) hash.add(increment(i));
    hash.add(static_cast<long>(grid));
    hash.add(c.seed);

    if (c.format == "csv") {
        std::ostringstream os;
        os << csv_header("compensator", hash,
                         {{"model", model.name},
                          {"state", model.state_label(state)},
                          {"window", fmt17(window)},
                          {"seed", std::to_string(c.seed)},
                          {"atom_mass", fmt17(comp.atom_mass)},
                          {"continuous_mass", fmt17(comp.continuous_mass)},
                          {"stop_mass", fmt17(comp.stop_mass)}});
        os << "# table: atoms\n";
        os << "time,mass,targets\n";
        for (const auto& a : comp.atoms) {
            std::string targets;
            for (std::size_t i = 0; i < a.targets.size(); ++i) {
                if (i) targets += ' ';
                targets += model.state_label(a.targets[i]);
            }
            os << fmt17(a.time) << ',' << fmt17(a.mass) << ',' << csv_escape(targets)
               << "\n";
        }
        os << "# table: hazard\n";
        os << "t_lo,t_hi,hazard,se,exposure\n";
        for (const auto& b : comp.bins) {
            os << fmt17(b.t_lo) << ',' << fmt17(b.t_hi) << ',' << fmt17(b.hazard) << ','
               << fmt17(b.se) << ',' << fmt17(b.exposure) << "\n";
        }
        emit(c.out, os.str());
        return 0;
    }

    json j;
    j["header"] = json_header("compensator", hash);
    j["header"]["seed"] = c.seed;
    j["model"] = model.name;
    j["state"] = model.state_label(state);
    j["window"] = window;
    j["increment"] = vec_json(increment);
    json atoms = json::array();
    for (const auto& a : comp.atoms) {
        atoms.push_back(json{{"time", a.time},
                             {"mass", a.mass},
                             {"targets", labels_json(model, a.targets)}});
    }
    j["atoms"] = std::move(atoms);
    json bins = json::array();
    for (const auto& b : comp.bins) {
        bins.push_back(json{{"t_lo", b.t_lo},
                            {"t_hi", b.t_hi},
                            {"hazard", b.hazard},
                            {"se", b.se},
                            {"exposure", b.exposure}});
    }
    j["hazard"] = std::move(bins);
    j["atom_mass"] = comp.atom_mass;
    j["continuous_mass"] = comp.continuous_mass;
    j["stop_mass"] = comp.stop_mass;
    emit(c.out, j.dump(2) + "\n");
    return 0;
}

// ===== nflvr ================================================================

int run_nflvr(const Common& c, const std::string& path_file, int path_index,
              const std::vector<double>& ell_values, int max_jumps, int samples) {
    MarketModel model = load_model(c.model_arg);
    PathRecord path = load_path_file(path_file, model, path_index);
    if (static_cast<int>(ell_values.size()) != model.m)
        throw std::invalid_argument("--ell needs one value per asset");
    Eigen::VectorXd ell = to_vector(ell_values);

    PosteriorOptions opt;
    opt.max_jumps = max_jumps;
    opt.density_samples = samples;
    Rng rng(c.seed);
    FlvrScan scan = flvr_scan(model, path, ell, opt, rng);
    ArbitrageStrategy strat = build_strategy(path, scan);

    Hasher hash;
    hash.add(std::string("nflvr"));
    hash.add(serialize_model(model));
    hash.add(serialize_path(path, model));
    for (double v : ell_values) hash.add(v);
    hash.add(c.seed);

    json j;
    j["header"] = json_header("nflvr", hash);
    j["header"]["seed"] = c.seed;
    j["model"] = json::parse(serialize_model(model));
    j["path"] = json::parse(serialize_path(path, model));
    j["ell"] = ell_values;
    j["holds"] = scan.holds;
    j["drift_failure_time"] = scan.drift_failure_time;
    j["predictable_failure_time"] = scan.predictable_failure_time;
    j["free_lunch_time"] = scan.free_lunch_time;

    json steps = json::array();
    for (const auto& s : scan.steps) {
        json sj;
        sj["k"] = s.k;
        sj["at_time"] = s.at_time;
        sj["state"] = model.state_label(s.state);
        sj["support"] = labels_json(model, s.support_states);
        sj["feasible"] = s.feasible;
        sj["margin"] = s.lp.margin;
        steps.push_back(std::move(sj));
    }
    j["steps"] = std::move(steps);

    json preds = json::array();
    for (const auto& pc : scan.predictable) {
        json pj;
        pj["time"] = pc.time;
        pj["state"] = model.state_label(pc.state);
        pj["targets"] = labels_json(model, pc.targets);
        pj["feasible"] = pc.feasible;
        pj["margin"] = pc.lp.margin;
        preds.push_back(std::move(pj));
    }
    j["predictable"] = std::move(preds);

    json sj;
    sj["available"] = strat.available;
    if (strat.available) {
        sj["kind"] = strat.kind;
        sj["entry_time"] = strat.entry_time;
        sj["exit_time"] = strat.exit_time;
        sj["state"] = model.state_label(strat.state);
        sj["position"] = vec_json(strat.position);
        sj["guaranteed"] = strat.guaranteed;
        sj["note"] = strat.note;
        if (strat.kind == "drift") {
            // the support the failing system was solved over
            for (auto it = scan.steps.rbegin(); it != scan.steps.rend(); ++it) {
                if (!it->feasible) {
                    sj["support"] = labels_json(model, it->support_states);
                    break;
                }
            }
        } else {
            for (const auto& pc : scan.predictable) {
                if (!pc.feasible && pc.time == strat.exit_time) {
                    sj["targets"] = labels_json(model, pc.targets);
                    break;
                }
            }
        }
    }
    j["strategy"] = std::move(sj);
    emit(c.out, j.dump(2) + "\n");
    return 0;
}

// ===== arbitrage ============================================================

int run_arbitrage(const Common& c, const std::string& report_file,
                  const std::string& variant, double eps) {
    json rep = json::parse(read_file(report_file), nullptr, false);
    if (rep.is_discarded() || !rep.contains("model") || !rep.contains("strategy"))
        throw std::invalid_argument("--report must be an nflvr artifact");
    MarketModel model = parse_model(rep.at("model").dump());
    require_valid(model);
    const json& strat = rep.at("strategy");
    if (!strat.value("available", false))
        throw std::invalid_argument("report carries no strategy (scan holds)");

    const std::string kind = strat.at("kind").get<std::string>();
    if (variant == "accessible" && kind != "predictable-jump")
        throw std::invalid_argument("accessible variant needs a predictable-jump strategy");
    if (variant == "drift" && kind != "drift")
        throw std::invalid_argument("drift variant needs a drift strategy");

    const int state = model.state_index(strat.at("state").get<std::string>());
    std::vector<double> pos_values = strat.at("position").get<std::vector<double>>();
    Eigen::VectorXd position = to_vector(pos_values);

    Hasher hash;
    hash.add(std::string("arbitrage"));
    hash.add(serialize_model(model));
    hash.add(variant);
    hash.add(eps);
    hash.add(c.seed);
    hash.add(c.paths);

    std::ostringstream os;
    json rows = json::array();
    long accepted = 0;
    double min_pnl = std::numeric_limits<double>::infinity();
    long positive = 0;

    if (variant == "drift") {
        const double entry = strat.at("entry_time").get<double>();
        std::vector<int> support;
        if (strat.contains("support"))
            for (const auto& lbl : strat.at("support"))
                support.push_back(model.state_index(lbl.get<std::string>()));
        const double total = model.total_rate(state);
        os << "path_id,exit_time,jumped,pnl\n";
        for (long p = 0; p < c.paths; ++p) {
            Rng rng = Rng::path_stream(c.seed, static_cast<std::uint64_t>(p));
            double tau = total > 0.0 ? entry + rng.exponential(total)
                                     : std::numeric_limits<double>::infinity();
            bool jumped = tau < model.horizon;
            int target = -1;
            if (jumped) {
                std::vector<double> w(static_cast<std::size_t>(model.n));
                for (int f = 0; f < model.n; ++f) w[static_cast<std::size_t>(f)] = model.lambda(state, f);
                target = rng.categorical(w.data(), model.n, total);
                bool in_support = false;
                for (int s : support) in_support = in_support || s == target;
                if (!in_support) continue;  // continuation the information rules out
            }
            double exit = jumped ? tau : model.horizon;
            double pnl = 0.0;
            for (int i = 0; i < model.m; ++i) {
                double dl = model.drift(state)(i) * (exit - entry);
                if (jumped) dl += model.beta[static_cast<std::size_t>(i)](state, target);
                pnl += position(i) * std::expm1(dl);
            }
            ++accepted;
            min_pnl = std::min(min_pnl, pnl);
            if (pnl > 0.0) ++positive;
            os << p << ',' << fmt17(exit) << ',' << (jumped ? "true" : "false") << ','
               << fmt17(pnl) << "\n";
            rows.push_back(json{{"path_id", p}, {"exit_time", exit}, {"jumped", jumped},
                                {"pnl", pnl}});
        }
    } else {
        const double announce = strat.at("exit_time").get<double>();
        const double entry = std::max(0.0, announce - eps);
        std::vector<int> targets;
        if (strat.contains("targets"))
            for (const auto& lbl : strat.at("targets"))
                targets.push_back(model.state_index(lbl.get<std::string>()));
        if (targets.empty())
            throw std::invalid_argument("report strategy lists no jump targets");
        os << "path_id,target,pnl\n";
        for (long p = 0; p < c.paths; ++p) {
            Rng rng = Rng::path_stream(c.seed, static_cast<std::uint64_t>(p));
            std::vector<double> w(targets.size(), 1.0);
            int target = targets[static_cast<std::size_t>(rng.categorical(
                w.data(), static_cast<int>(w.size()), static_cast<double>(w.size())))];
            double pnl = 0.0;
            for (int i = 0; i < model.m; ++i) {
                double dl = model.drift(state)(i) * (announce - entry) +
                            model.beta[static_cast<std::size_t>(i)](state, target);
                pnl += position(i) * std::expm1(dl);
            }
            ++accepted;
            min_pnl = std::min(min_pnl, pnl);
            if (pnl > 0.0) ++positive;
            os << p << ',' << csv_escape(model.state_label(target)) << ',' << fmt17(pnl)
               << "\n";
            rows.push_back(json{{"path_id", p},
                                {"target", model.state_label(target)},
                                {"pnl", pnl}});
        }
    }

    json summary;
    summary["conditioned_paths"] = accepted;
    summary["sampled_paths"] = c.paths;
    summary["min_pnl"] = accepted > 0 ? json(min_pnl) : json(nullptr);
    summary["fraction_positive"] =
        accepted > 0 ? json(static_cast<double>(positive) / static_cast<double>(accepted))
                     : json(nullptr);

    if (c.format == "csv") {
        std::ostringstream head;
        head << csv_header("arbitrage", hash,
                           {{"variant", variant},
                            {"eps", fmt17(eps)},
                            {"seed", std::to_string(c.seed)},
                            {"paths", std::to_string(c.paths)},
                            {"conditioned_paths", std::to_string(accepted)},
                            {"min_pnl", accepted > 0 ? fmt17(min_pnl) : "n/a"},
                            {"fraction_positive",
                             accepted > 0
                                 ? fmt17(static_cast<double>(positive) /
                                         static_cast<double>(accepted))
                                 : "n/a"}});
        emit(c.out, head.str() + os.str());
        return 0;
    }

    json j;
    j["header"] = json_header("arbitrage", hash);
    j["header"]["seed"] = c.seed;
    j["header"]["paths"] = c.paths;
    j["variant"] = variant;
    j["eps"] = eps;
    j["rows"] = std::move(rows);
    j["summary"] = std::move(summary);
    emit(c.out, j.dump(2) + "\n");
    return 0;
}

// ===== fixtures =============================================================

int run_fixtures(const std::string& dir) {
    std::vector<std::string> files = write_fixture_files(dir.empty() ? "." : dir);
    for (const auto& f : files) std::cout << f << "\n";
    return 0;
}

}  // namespace

// ===== main =================================================================

int main(int argc, char** argv) {
    CLI::App app{"mcmarket: finite-state Markov-chain market analytics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("mcmarket ") + kVersion);

    Common c;
    int rc = 0;

    auto add_common = [&](CLI::App* sub, bool with_model = true) {
        if (with_model)
            sub->add_option("-m,--model", c.model_arg,
                            "model file or built-in name (kh, twostate, kh-rational)")
                ->required();
        sub->add_option("--out", c.out, "write the artifact to this file (default stdout)");
        sub->add_option("--format", c.format, "artifact format")
            ->check(CLI::IsMember({"json", "csv"}));
        return sub;
    };
    auto add_stochastic = [&](CLI::App* sub) {
        sub->add_option("--seed", c.seed, "RNG seed");
        sub->add_option("--paths", c.paths, "number of Monte Carlo paths")
            ->check(CLI::PositiveNumber);
        return sub;
    };

    // validate
    auto* validate = add_common(app.add_subcommand(
        "validate", "parse, check, and echo the normalized model"));
    validate->callback([&] { rc = run_validate(c); });

    // na-solve
    auto* nasolve = add_common(app.add_subcommand(
        "na-solve", "solve for a strictly positive martingale intensity"));
    nasolve->callback([&] { rc = run_na_solve(c); });

    // verify-q
    std::string override_file;
    auto* verifyq = add_stochastic(add_common(app.add_subcommand(
        "verify-q", "Monte Carlo check of the martingale measure")));
    verifyq->add_option("--override", override_file,
                        "intensity override file (default: na-solve witness)");
    verifyq->callback([&] { rc = run_verify_q(c, override_file); });

    // simulate
    std::string start, under_file;
    double horizon_override = 0.0;
    auto* simulate = add_stochastic(add_common(app.add_subcommand(
        "simulate", "draw chain paths and log-discounted prices")));
    simulate->add_option("--start", start, "initial state label (default: model)");
    simulate->add_option("--under", under_file, "simulate the chain under this override");
    simulate->add_option("--horizon", horizon_override, "override the model horizon")
        ->check(CLI::PositiveNumber);
    simulate->get_option("--format")->default_str("csv");
    simulate->callback([&] {
        if (!simulate->get_option("--format")->count()) c.format = "csv";
        rc = run_simulate(c, start, under_file, horizon_override);
    });

    // scenarios
    auto* scenarios = add_common(app.add_subcommand(
        "scenarios", "enumerate jump scenarios with probabilities and geometry"));
    scenarios->add_option("--start", start, "initial state label (default: model)");
    scenarios->add_option("--nmax", c.nmax, "maximum jumps to enumerate")
        ->check(CLI::NonNegativeNumber);
    scenarios->add_option("--horizon", horizon_override, "override the model horizon")
        ->check(CLI::PositiveNumber);
    scenarios->get_option("--format")->default_str("csv");
    scenarios->callback([&] {
        if (!scenarios->get_option("--format")->count()) c.format = "csv";
        rc = run_scenarios(c, start, horizon_override);
    });

    // classify
    std::string path_file;
    int path_index = 0;
    std::vector<double> ell_values;
    int only_k = 0;
    auto* classify = add_common(app.add_subcommand(
        "classify", "bracket and pin realized jump times under terminal information"));
    classify->add_option("--path", path_file, "path file (JSON)")->required();
    classify->add_option("--index", path_index, "path index inside a multi-path file");
    classify->add_option("--ell", ell_values, "terminal log-price vector")
        ->required()
        ->delimiter(',');
    classify->add_option("--k", only_k, "report only this jump");
    classify->callback([&] { rc = run_classify(c, path_file, path_index, ell_values, only_k); });

    // compensator
    std::string state_label;
    double window_arg = 0.0;
    std::vector<double> increment_values;
    int grid = 32, max_jumps = 8, samples = 4096;
    double lambda_up = 0.0, lambda_down = 0.0;
    auto* compensator = add_common(app.add_subcommand(
        "compensator", "next-jump compensator under terminal information"));
    compensator->add_option("--state", state_label, "conditioning state (default: model start)");
    compensator->add_option("--window", window_arg, "residual window (default: horizon)")
        ->check(CLI::PositiveNumber);
    compensator->add_option("--ell", ell_values, "terminal log-price vector")->delimiter(',');
    compensator->add_option("--increment", increment_values,
                            "terminal log-price increment over the window")
        ->delimiter(',');
    compensator->add_option("--grid", grid, "hazard bins")->check(CLI::PositiveNumber);
    compensator->add_option("--max-jumps", max_jumps, "continuation enumeration cap")
        ->check(CLI::PositiveNumber);
    compensator->add_option("--samples", samples, "density sample count")
        ->check(CLI::PositiveNumber);
    compensator->add_option("--lambda-up", lambda_up, "cycle fixtures: forward rate")
        ->check(CLI::PositiveNumber);
    compensator->add_option("--lambda-down", lambda_down, "cycle fixtures: backward rate")
        ->check(CLI::PositiveNumber);
    compensator->add_option("--seed", c.seed, "RNG seed");
    compensator->callback([&] {
        rc = run_compensator(c, state_label, window_arg, ell_values, increment_values,
                             grid, max_jumps, samples, lambda_up, lambda_down);
    });

    // nflvr
    auto* nflvr = add_common(app.add_subcommand(
        "nflvr", "scan a path for the first insider free lunch"));
    nflvr->add_option("--path", path_file, "path file (JSON)")->required();
    nflvr->add_option("--index", path_index, "path index inside a multi-path file");
    nflvr->add_option("--ell", ell_values, "terminal log-price vector")
        ->required()
        ->delimiter(',');
    nflvr->add_option("--max-jumps", max_jumps, "continuation enumeration cap")
        ->check(CLI::PositiveNumber);
    nflvr->add_option("--samples", samples, "density sample count")
        ->check(CLI::PositiveNumber);
    nflvr->add_option("--seed", c.seed, "RNG seed");
    nflvr->callback(
        [&] { rc = run_nflvr(c, path_file, path_index, ell_values, max_jumps, samples); });

    // arbitrage
    std::string report_file, variant = "drift";
    double eps = 1e-2;
    auto* arbitrage = add_stochastic(add_common(
        app.add_subcommand("arbitrage", "simulate the P&L of a detected strategy"), false));
    arbitrage->add_option("--report", report_file, "nflvr artifact to trade on")->required();
    arbitrage->add_option("--variant", variant, "strategy variant")
        ->check(CLI::IsMember({"drift", "accessible"}));
    arbitrage->add_option("--eps", eps, "entry lead time before an announced jump")
        ->check(CLI::PositiveNumber);
    arbitrage->get_option("--format")->default_str("csv");
    arbitrage->callback([&] {
        if (!arbitrage->get_option("--format")->count()) c.format = "csv";
        rc = run_arbitrage(c, report_file, variant, eps);
    });

    // fixtures
    std::string fixtures_dir;
    auto* fixtures = app.add_subcommand("fixtures", "write the built-in model files");
    fixtures->add_option("--out", fixtures_dir, "directory (default: current)");
    fixtures->callback([&] { rc = run_fixtures(fixtures_dir); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return rc;
}

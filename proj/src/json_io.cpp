#include "mcmarket/json_io.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mcmarket {

using nlohmann::json;

namespace {

json parse_text(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw std::invalid_argument(std::string(what) + ": not valid JSON");
    return j;
}

double get_number(const json& j, const std::string& field) {
    if (!j.contains(field) || !j.at(field).is_number())
        throw std::invalid_argument("missing number '" + field + "'");
    return j.at(field).get<double>();
}

Eigen::MatrixXd get_matrix(const json& j, const std::string& field, int rows, int cols) {
    if (!j.contains(field) || !j.at(field).is_array())
        throw std::invalid_argument("missing matrix '" + field + "'");
    const json& rows_j = j.at(field);
    if (static_cast<int>(rows_j.size()) != rows)
        throw std::invalid_argument("'" + field + "' needs " + std::to_string(rows) +
                                    " rows");
    Eigen::MatrixXd out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const json& row = rows_j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw std::invalid_argument("'" + field + "' row " + std::to_string(r + 1) +
                                        " needs " + std::to_string(cols) + " entries");
        for (int c = 0; c < cols; ++c) {
            const json& cell = row.at(static_cast<std::size_t>(c));
            if (!cell.is_number())
                throw std::invalid_argument("'" + field + "' holds a non-number");
            out(r, c) = cell.get<double>();
        }
    }
    return out;
}

Eigen::VectorXd get_vector(const json& j, const std::string& field, int size) {
    if (!j.contains(field) || !j.at(field).is_array() ||
        static_cast<int>(j.at(field).size()) != size)
        throw std::invalid_argument("'" + field + "' must be an array of " +
                                    std::to_string(size) + " numbers");
    Eigen::VectorXd out(size);
    for (int i = 0; i < size; ++i) {
        const json& cell = j.at(field).at(static_cast<std::size_t>(i));
        if (!cell.is_number())
            throw std::invalid_argument("'" + field + "' holds a non-number");
        out(i) = cell.get<double>();
    }
    return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// State reference in JSON: a label string, or the plain 1-based index.
int get_state(const json& j, const std::string& field, const MarketModel& model) {
    if (!j.contains(field))
        throw std::invalid_argument("missing state '" + field + "'");
    const json& v = j.at(field);
    if (v.is_string()) return model.state_index(v.get<std::string>());
    if (v.is_number_integer()) {
        int idx = v.get<int>();
        if (idx < 1 || idx > model.n)
            throw std::invalid_argument("state index " + std::to_string(idx) +
                                        " out of range in '" + field + "'");
        return idx - 1;
    }
    throw std::invalid_argument("'" + field + "' must be a state label");
}

}  // namespace

MarketModel parse_model(const std::string& text) {
    json j = parse_text(text, "model");
    MarketModel m;
    try {
        if (j.contains("name") && j.at("name").is_string())
            m.name = j.at("name").get<std::string>();

        if (!j.contains("states") || !j.at("states").is_array())
            throw std::invalid_argument("'states' must be an array of labels");
        for (const auto& s : j.at("states")) {
            if (s.is_string())
                m.state_labels.push_back(s.get<std::string>());
            else if (s.is_number_integer())
                m.state_labels.push_back(std::to_string(s.get<long>()));
            else
                throw std::invalid_argument("'states' entries must be labels");
        }
        m.n = static_cast<int>(m.state_labels.size());
        if (m.n < 1 || m.n > 64)
            throw std::invalid_argument("state count out of supported range (1..64)");

        m.horizon = get_number(j, "horizon");
        m.lambda = get_matrix(j, "lambda", m.n, m.n);
        m.lambda.diagonal().setZero();  // generator-style input tolerated
        m.r = get_vector(j, "r", m.n);

        if (!j.contains("assets") || !j.at("assets").is_array() || j.at("assets").empty())
            throw std::invalid_argument("'assets' must be a non-empty array");
        m.m = static_cast<int>(j.at("assets").size());
        if (m.m > 64) throw std::invalid_argument("asset count out of supported range");
        m.mu.resize(m.m, m.n);
        m.s0.resize(m.m);
        for (int i = 0; i < m.m; ++i) {
            const json& a = j.at("assets").at(static_cast<std::size_t>(i));
            if (!a.is_object())
                throw std::invalid_argument("asset " + std::to_string(i + 1) +
                                            " must be an object");
            if (a.contains("name") && a.at("name").is_string())
                m.asset_names.push_back(a.at("name").get<std::string>());
            else
                m.asset_names.push_back("S" + std::to_string(i + 1));
            m.s0(i) = get_number(a, "s0");
            m.mu.row(i) = get_vector(a, "mu", m.n).transpose();
            m.beta.push_back(get_matrix(a, "beta", m.n, m.n));
        }

        m.y0 = 0;
        if (j.contains("initial_state")) m.y0 = get_state(j, "initial_state", m);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("model: ") + e.what());
    }
    return m;
}

std::string serialize_model(const MarketModel& model) {
    json j;
    j["name"] = model.name;
    json states = json::array();
    for (int e = 0; e < model.n; ++e) states.push_back(model.state_label(e));
    j["states"] = std::move(states);
    j["lambda"] = matrix_to_json(model.lambda);
    j["r"] = vector_to_json(model.r);
    j["horizon"] = model.horizon;
    j["initial_state"] = model.state_label(model.y0);
    json assets = json::array();
    for (int i = 0; i < model.m; ++i) {
        json a;
        a["name"] = model.asset_name(i);
        a["s0"] = model.s0(i);
        a["mu"] = vector_to_json(model.mu.row(i).transpose());
        a["beta"] = matrix_to_json(model.beta[static_cast<std::size_t>(i)]);
        assets.push_back(std::move(a));
    }
    j["assets"] = std::move(assets);
    return j.dump(2) + "\n";
}

MarketModel load_model_file(const std::string& path) {
    MarketModel m = parse_model(read_file(path));
    require_valid(m);
    return m;
}

PathRecord parse_path(const std::string& text, const MarketModel& model, int index) {
    json j = parse_text(text, "path");
    try {
        if (j.contains("paths")) {
            const json& list = j.at("paths");
            if (!list.is_array() || index < 0 || index >= static_cast<int>(list.size()))
                throw std::invalid_argument("path index " + std::to_string(index) +
                                            " out of range");
            j = list.at(static_cast<std::size_t>(index));
        }
        PathRecord p;
        p.horizon = j.contains("horizon") ? get_number(j, "horizon") : model.horizon;
        if (!(p.horizon > 0.0))
            throw std::invalid_argument("horizon must be positive");
        if (!j.contains("events") || !j.at("events").is_array())
            throw std::invalid_argument("missing 'events' array");
        const json& events = j.at("events");
        if (j.contains("initial_state"))
            p.y0 = get_state(j, "initial_state", model);
        else if (!events.empty())
            p.y0 = get_state(events.front(), "from", model);
        else
            p.y0 = model.y0;

        double prev = 0.0;
        int state = p.y0;
        for (const auto& ev : events) {
            JumpEvent e;
            e.t = get_number(ev, "t");
            e.from = get_state(ev, "from", model);
            e.to = get_state(ev, "to", model);
            if (e.t <= prev || e.t >= p.horizon)
                throw std::invalid_argument("event times must increase inside (0, horizon)");
            if (e.from != state)
                throw std::invalid_argument("event 'from' does not chain");
            if (e.to == e.from) throw std::invalid_argument("self-jump");
            if (!(model.lambda(e.from, e.to) > 0.0))
                throw std::invalid_argument("transition " + model.state_label(e.from) +
                                            ">" + model.state_label(e.to) +
                                            " has zero intensity");
            prev = e.t;
            state = e.to;
            p.events.push_back(e);
        }
        return p;
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        if (msg.rfind("path:", 0) == 0) throw;
        throw std::invalid_argument("path: " + msg);
    }
}

std::string serialize_path(const PathRecord& path, const MarketModel& model) {
    json j;
    j["initial_state"] = model.state_label(path.y0);
    j["horizon"] = path.horizon;
    json events = json::array();
    for (const auto& ev : path.events) {
        json e;
        e["t"] = ev.t;
        e["from"] = model.state_label(ev.from);
        e["to"] = model.state_label(ev.to);
        events.push_back(std::move(e));
    }
    j["events"] = std::move(events);
    return j.dump(2) + "\n";
}

PathRecord load_path_file(const std::string& path, const MarketModel& model,
                          int index) {
    return parse_path(read_file(path), model, index);
}

Eigen::MatrixXd parse_override(const std::string& text, int n_states) {
    json j = parse_text(text, "override");
    json wrapper;
    if (!j.contains("lambda_tilde"))
        throw std::invalid_argument("override: missing 'lambda_tilde'");
    wrapper["m"] = j.at("lambda_tilde");
    try {
        return get_matrix(wrapper, "m", n_states, n_states);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("override: 'lambda_tilde' must be " +
                                    std::to_string(n_states) + "x" +
                                    std::to_string(n_states));
    }
}

std::string serialize_override(const Eigen::MatrixXd& lambda_tilde) {
    json j;
    j["lambda_tilde"] = matrix_to_json(lambda_tilde);
    return j.dump(2) + "\n";
}

Eigen::MatrixXd load_override_file(const std::string& path, int n_states) {
    return parse_override(read_file(path), n_states);
}

// ===== built-in models ======================================================

namespace {

MarketModel cycle_model(const std::string& name, double beta_down) {
    MarketModel m;
    m.name = name;
    m.n = 3;
    m.m = 1;
    m.horizon = 1.0;
    m.y0 = 0;
    m.state_labels = {"1", "2", "3"};
    m.asset_names = {"S"};
    m.lambda = Eigen::MatrixXd::Zero(3, 3);
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(3, 3);
    const double beta_up = std::log(1.1);
    for (int e = 0; e < 3; ++e) {
        int up = (e + 1) % 3;
        int down = (e + 2) % 3;
        m.lambda(e, up) = 1.0;
        m.lambda(e, down) = 1.0;
        beta(e, up) = beta_up;
        beta(e, down) = beta_down;
    }
    m.r = Eigen::VectorXd::Zero(3);
    m.mu = Eigen::MatrixXd::Constant(1, 3, 0.01);
    m.beta = {beta};
    m.s0 = Eigen::VectorXd::Ones(1);
    return m;
}

MarketModel twostate_model() {
    MarketModel m;
    m.name = "twostate";
    m.n = 2;
    m.m = 1;
    m.horizon = 1.0;
    m.y0 = 0;
    m.state_labels = {"1", "2"};
    m.asset_names = {"S"};
    m.lambda = Eigen::MatrixXd::Zero(2, 2);
    m.lambda(0, 1) = 1.0;
    m.lambda(1, 0) = 1.0;
    m.r = Eigen::VectorXd::Zero(2);
    m.mu = Eigen::MatrixXd::Zero(1, 2);
    m.mu(0, 0) = -0.5;
    m.mu(0, 1) = 0.5;
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(2, 2);
    beta(0, 1) = std::log(1.1);
    beta(1, 0) = std::log(0.9);
    m.beta = {beta};
    m.s0 = Eigen::VectorXd::Ones(1);
    return m;
}

}  // namespace

MarketModel builtin_model(const std::string& name) {
    if (name == "kh") return cycle_model("kh", std::log(0.9));
    if (name == "kh-rational") return cycle_model("kh-rational", -std::log(1.1));
    if (name == "twostate") return twostate_model();
    throw std::invalid_argument("unknown built-in model '" + name +
                                "' (expected kh, twostate, or kh-rational)");
}

std::vector<std::string> builtin_model_names() {
    return {"kh", "twostate", "kh-rational"};
}

std::vector<std::string> write_fixture_files(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);  // best effort; open reports failure
    std::vector<std::string> written;
    for (const auto& name : builtin_model_names()) {
        std::string path = dir + "/" + name + ".json";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << serialize_model(builtin_model(name));
        written.push_back(path);
    }
    return written;
}

}  // namespace mcmarket

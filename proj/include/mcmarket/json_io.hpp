#pragma once

/// JSON (de)serialization for models, paths, and intensity overrides, plus
/// the built-in example models. JSON uses state labels; in-memory indices
/// are 0-based. Parse errors throw std::invalid_argument with a field hint.
///
/// Model schema: {"states": [labels...], "lambda": n x n, "r": [n],
/// "horizon": T, "assets": [{"name", "s0", "mu": [n], "beta": n x n}, ...]}
/// plus optional "name" and "initial_state" (a state label, default the
/// first). The lambda diagonal is ignored, so generator-style input works.

#include "mcmarket/model.hpp"
#include "mcmarket/simulate.hpp"

#include <string>
#include <vector>

namespace mcmarket {

MarketModel parse_model(const std::string& text);
std::string serialize_model(const MarketModel& model);
MarketModel load_model_file(const std::string& path);

/// Path schema: {"initial_state": label, "horizon": T, "events":
/// [{"t", "from", "to"}, ...]} with labeled states. A file holding
/// {"paths": [...]} (the simulate artifact) is accepted too; `index`
/// selects the path. Events must chain, strictly increase inside
/// (0, horizon), and follow transitions the model allows.
PathRecord parse_path(const std::string& text, const MarketModel& model,
                      int index = 0);
std::string serialize_path(const PathRecord& path, const MarketModel& model);
PathRecord load_path_file(const std::string& path, const MarketModel& model,
                          int index = 0);

Eigen::MatrixXd parse_override(const std::string& text, int n_states);
std::string serialize_override(const Eigen::MatrixXd& lambda_tilde);
Eigen::MatrixXd load_override_file(const std::string& path, int n_states);

/// Built-in example models: "kh" (three-state cycle with balanced up/down
/// jumps), "twostate" (alternating chain with opposite drifts), and
/// "kh-rational" (the cycle with jump sizes of equal magnitude, so terminal
/// prices do not reveal the jump counts).
MarketModel builtin_model(const std::string& name);
std::vector<std::string> builtin_model_names();

/// Write each built-in model to <dir>/<name>.json. Returns the file paths.
std::vector<std::string> write_fixture_files(const std::string& dir);

}  // namespace mcmarket

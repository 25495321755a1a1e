#include "sentinel/config.hpp"

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "sentinel/common.hpp"

namespace sentinel {
namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& obj, const std::string& section, std::initializer_list<const char*> known,
                    const std::string& origin) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok)
      throw ValidationError(origin + ": unknown config key \"" + (section.empty() ? "" : section + ".") + item.key() +
                            "\"");
  }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    obj.at(key).get_to(out);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key \"") + key + "\": " + e.what());
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": invalid JSON: " + e.what());
  }
  if (!root.is_object()) throw ValidationError(origin + ": top level must be a JSON object");
  reject_unknown(root, "", {"seed", "simulation", "attack", "model", "detection", "io"}, origin);

  RunConfig c;
  get_to(root, "seed", c.seed);

  if (root.contains("simulation")) {
    const json& s = root.at("simulation");
    reject_unknown(s, "simulation", {"horizon", "noise", "mean_sessions_per_port"}, origin);
    get_to(s, "horizon", c.horizon);
    get_to(s, "noise", c.noise);
    get_to(s, "mean_sessions_per_port", c.mean_sessions_per_port);
  }
  if (root.contains("attack")) {
    const json& a = root.at("attack");
    reject_unknown(a, "attack", {"n_attacks", "coverage_fraction"}, origin);
    get_to(a, "n_attacks", c.n_attacks);
    get_to(a, "coverage_fraction", c.coverage_fraction);
  }
  if (root.contains("model")) {
    const json& m = root.at("model");
    reject_unknown(m, "model",
                   {"n_filters", "kernel_size", "dilations", "latent_channels", "pool_factor", "dropout_rate",
                    "t_train", "batch_size", "n_epochs", "learning_rate"},
                   origin);
    get_to(m, "n_filters", c.model.n_filters);
    get_to(m, "kernel_size", c.model.kernel_size);
    get_to(m, "dilations", c.model.dilations);
    get_to(m, "latent_channels", c.model.latent_channels);
    get_to(m, "pool_factor", c.model.pool_factor);
    get_to(m, "dropout_rate", c.model.dropout_rate);
    get_to(m, "t_train", c.model.t_train);
    get_to(m, "batch_size", c.model.batch_size);
    get_to(m, "n_epochs", c.model.n_epochs);
    get_to(m, "learning_rate", c.model.learning_rate);
  }
  if (root.contains("detection")) {
    const json& d = root.at("detection");
    reject_unknown(d, "detection", {"window_len", "prefix_fraction", "lambda", "diag"}, origin);
    get_to(d, "window_len", c.detection.window_len);
    get_to(d, "prefix_fraction", c.detection.prefix_fraction);
    get_to(d, "lambda", c.detection.lambda);
    get_to(d, "diag", c.detection.diag);
  }
  if (root.contains("io")) {
    const json& io = root.at("io");
    reject_unknown(io, "io", {"out_dir"}, origin);
    get_to(io, "out_dir", c.out_dir);
  }

  if (c.horizon < 1) throw ValidationError(origin + ": simulation.horizon must be positive");
  if (c.n_attacks < 1) throw ValidationError(origin + ": attack.n_attacks must be positive");
  if (!(c.coverage_fraction > 0.0 && c.coverage_fraction < 1.0))
    throw ValidationError(origin + ": attack.coverage_fraction must lie in (0,1)");
  if (c.out_dir.empty()) throw ValidationError(origin + ": io.out_dir must not be empty");
  return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_text(path), path); }

std::string run_config_json(const RunConfig& c) {
  json root;
  root["seed"] = c.seed;
  root["simulation"] = {{"horizon", c.horizon}, {"noise", c.noise}, {"mean_sessions_per_port", c.mean_sessions_per_port}};
  root["attack"] = {{"n_attacks", c.n_attacks}, {"coverage_fraction", c.coverage_fraction}};
  root["model"] = {{"n_filters", c.model.n_filters},
                   {"kernel_size", c.model.kernel_size},
                   {"dilations", c.model.dilations},
                   {"latent_channels", c.model.latent_channels},
                   {"pool_factor", c.model.pool_factor},
                   {"dropout_rate", c.model.dropout_rate},
                   {"t_train", c.model.t_train},
                   {"batch_size", c.model.batch_size},
                   {"n_epochs", c.model.n_epochs},
                   {"learning_rate", c.model.learning_rate}};
  root["detection"] = {{"window_len", c.detection.window_len},
                       {"prefix_fraction", c.detection.prefix_fraction},
                       {"lambda", c.detection.lambda},
                       {"diag", c.detection.diag}};
  root["io"] = {{"out_dir", c.out_dir}};
  return root.dump(2) + "\n";
}

}  // namespace sentinel

// replay-sentinel: simulate EV-charging telemetry, inject replay attacks,
// train a temporal-convolutional autoencoder on the benign series and flag
// the attacked one. Stages talk to each other through files in the output
// directory, so they can run one at a time or as one pipeline.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sentinel/common.hpp"
#include "sentinel/config.hpp"
#include "sentinel/pipeline.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::int64_t horizon = 0;
  bool horizon_set = false;
  int epochs = 0;
  bool epochs_set = false;
  std::int64_t window_len = 0;
  bool window_len_set = false;
  int n_attacks = 0;
  bool n_attacks_set = false;
  bool diag_cov = false;
};

sentinel::RunConfig resolve_config(const CliOverrides& o) {
  sentinel::RunConfig cfg = o.config_path.empty() ? sentinel::RunConfig{} : sentinel::load_run_config(o.config_path);
  if (o.seed_set) cfg.seed = o.seed;
  if (o.horizon_set) cfg.horizon = o.horizon;
  if (o.epochs_set) cfg.model.n_epochs = o.epochs;
  if (o.window_len_set) cfg.detection.window_len = o.window_len;
  if (o.n_attacks_set) cfg.n_attacks = o.n_attacks;
  if (o.diag_cov) cfg.detection.diag = true;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  return cfg;
}

void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration (defaults used when omitted)");
  cmd->add_option("--out", o.out_dir, "output directory for all artifacts");
  cmd->add_option("--seed", o.seed, "master seed for the whole run")->each([&](const std::string&) { o.seed_set = true; });
  cmd->add_option("--horizon", o.horizon, "simulated samples")->each([&](const std::string&) { o.horizon_set = true; });
  cmd->add_option("--epochs", o.epochs, "training epochs")->each([&](const std::string&) { o.epochs_set = true; });
  cmd->add_option("--window-len", o.window_len, "detector window length")
      ->each([&](const std::string&) { o.window_len_set = true; });
  cmd->add_option("--n-attacks", o.n_attacks, "replay injections to plan")
      ->each([&](const std::string&) { o.n_attacks_set = true; });
  cmd->add_flag("--diag-cov", o.diag_cov, "diagonal error covariance instead of the full one");
}

}  // namespace

int main(int argc, char** argv) {
  sentinel::apply_thread_cap_from_env();

  CLI::App app{"replay attack detection for EV charging telemetry"};
  app.require_subcommand(1);
  CliOverrides o;

  struct Stage {
    const char* name;
    const char* desc;
    void (*run)(const sentinel::RunConfig&);
  };
  const Stage stages[] = {
      {"simulate", "generate benign charging telemetry", sentinel::run_simulate},
      {"inject", "plan and inject replay attacks into the simulated telemetry", sentinel::run_inject},
      {"train", "train the autoencoder on the benign telemetry", sentinel::run_train},
      {"detect", "score the attacked telemetry and flag anomalies", sentinel::run_detect},
      {"evaluate", "recompute detection metrics from the artifacts", sentinel::run_evaluate},
      {"plot", "render SVG figures from the artifacts", sentinel::run_plot},
      {"pipeline", "run all stages in order", sentinel::run_pipeline},
  };
  for (const Stage& s : stages) add_common_options(app.add_subcommand(s.name, s.desc), o);

  CLI11_PARSE(app, argc, argv);

  try {
    const sentinel::RunConfig cfg = resolve_config(o);
    for (const Stage& s : stages)
      if (app.get_subcommand(s.name)->parsed()) s.run(cfg);
    return 0;
  } catch (const sentinel::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sentinel::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
}

#include "sentinel/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentinel/common.hpp"
#include "sentinel/csv.hpp"
#include "sentinel/detector.hpp"
#include "sentinel/evci.hpp"
#include "sentinel/replay.hpp"
#include "sentinel/svg.hpp"
#include "sentinel/tcn_ae.hpp"

namespace sentinel {
namespace {

using json = nlohmann::ordered_json;

std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory \"" + dir + "\": " + ec.message());
}

std::int64_t calibration_len_of(const RunConfig& cfg, std::int64_t T) {
  return static_cast<std::int64_t>(std::floor(cfg.detection.prefix_fraction * static_cast<double>(T)));
}

json metrics_json(const MetricsRecord& m) {
  return json{{"tp", m.tp},
              {"fp", m.fp},
              {"tn", m.tn},
              {"fn", m.fn},
              {"accuracy", m.accuracy},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"precision_defined", m.precision_defined},
              {"recall_defined", m.recall_defined},
              {"f1_defined", m.f1_defined}};
}

MetricsRecord metrics_from_json(const json& j) {
  MetricsRecord m;
  j.at("tp").get_to(m.tp);
  j.at("fp").get_to(m.fp);
  j.at("tn").get_to(m.tn);
  j.at("fn").get_to(m.fn);
  j.at("accuracy").get_to(m.accuracy);
  j.at("precision").get_to(m.precision);
  j.at("recall").get_to(m.recall);
  j.at("f1").get_to(m.f1);
  j.at("precision_defined").get_to(m.precision_defined);
  j.at("recall_defined").get_to(m.recall_defined);
  j.at("f1_defined").get_to(m.f1_defined);
  return m;
}

// JSON has no +-inf literals; an unbounded threshold is stored as a string.
json threshold_json(double thr) {
  if (std::isfinite(thr)) return thr;
  return thr > 0 ? "inf" : "-inf";
}

double threshold_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  throw ValidationError("detection report: bad threshold \"" + s + "\"");
}

struct StoredReport {
  double threshold = 0.0;
  std::int64_t window_len = 0, calibration_len = 0, length = 0;
  double lambda = 0.0;
  bool diag = false;
  std::vector<Interval> runs;
  std::vector<double> scores;
  MetricsRecord overall, post_calibration;
};

void write_report(const std::string& path, const AnomalyReport& rep, std::int64_t length) {
  json j;
  j["format"] = "detection-report";
  j["version"] = 1;
  j["window_len"] = rep.window_len;
  j["calibration_len"] = rep.calibration_len;
  j["lambda"] = rep.lambda;
  j["diag"] = rep.diag;
  j["threshold"] = threshold_json(rep.threshold);
  j["length"] = length;
  j["overall"] = metrics_json(rep.overall);
  j["post_calibration"] = metrics_json(rep.post_calibration);
  json runs = json::array();
  for (const Interval& r : rep.runs) runs.push_back(json::array({r.begin, r.end}));
  j["runs"] = runs;
  j["scores"] = rep.scores;
  write_text_atomic(path, j.dump(2) + "\n");
}

StoredReport read_report(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + std::string(e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != "detection-report")
      throw ValidationError(path + ": not a detection report");
    StoredReport r;
    r.threshold = threshold_from_json(j.at("threshold"));
    j.at("window_len").get_to(r.window_len);
    j.at("calibration_len").get_to(r.calibration_len);
    j.at("length").get_to(r.length);
    j.at("lambda").get_to(r.lambda);
    j.at("diag").get_to(r.diag);
    for (const json& iv : j.at("runs")) r.runs.push_back({iv.at(0).get<std::int64_t>(), iv.at(1).get<std::int64_t>()});
    if (j.contains("scores")) j.at("scores").get_to(r.scores);
    r.overall = metrics_from_json(j.at("overall"));
    r.post_calibration = metrics_from_json(j.at("post_calibration"));
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": malformed detection report: " + std::string(e.what()));
  }
}

std::vector<std::uint8_t> flags_from_runs(const std::vector<Interval>& runs, std::int64_t length) {
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(length), 0);
  for (const Interval& r : runs) {
    if (r.begin < 0 || r.begin >= r.end || r.end > length)
      throw ValidationError("detection report: flagged run [" + std::to_string(r.begin) + "," +
                            std::to_string(r.end) + ") out of range");
    for (std::int64_t t = r.begin; t < r.end; ++t) flags[static_cast<std::size_t>(t)] = 1;
  }
  return flags;
}

TelemetryCsv read_labeled(const std::string& path) {
  TelemetryCsv csv = read_telemetry_csv(path);
  if (!csv.has_labels)
    throw ValidationError(path + ": no Anomaly column; run the inject stage first");
  return csv;
}

}  // namespace

ArtifactPaths artifact_paths(const std::string& out_dir) {
  ArtifactPaths p;
  p.dir = out_dir;
  p.resolved_config = out_dir + "/resolved_config.json";
  p.train_csv = out_dir + "/train_telemetry.csv";
  p.attacked_csv = out_dir + "/attacked_telemetry.csv";
  p.attack_plan = out_dir + "/attack_plan.json";
  p.model = out_dir + "/model.json";
  p.report = out_dir + "/detection_report.json";
  p.metrics = out_dir + "/metrics.json";
  p.channels_svg = out_dir + "/port_currents.svg";
  p.loss_svg = out_dir + "/training_loss.svg";
  p.scores_svg = out_dir + "/anomaly_scores.svg";
  return p;
}

void run_simulate(const RunConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg.out_dir);
  ensure_dir(paths.dir);

  SimConfig sim;
  sim.horizon = cfg.horizon;
  sim.noise = cfg.noise;
  sim.mean_sessions_per_port = cfg.mean_sessions_per_port;
  sim.seed = cfg.seed;
  const SimResult res = simulate(sim);
  write_telemetry_csv(paths.train_csv, res.telemetry, nullptr);

  std::cout << "stage=simulate seed=" << cfg.seed << " samples=" << res.telemetry.T
            << " channels=" << res.telemetry.d << " sessions=" << res.sessions.size() << " out=" << paths.train_csv
            << "\n";
}

void run_inject(const RunConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg.out_dir);
  ensure_dir(paths.dir);
  const TelemetryCsv train = read_telemetry_csv(paths.train_csv);

  AttackPlanOptions opts;
  opts.coverage_fraction = cfg.coverage_fraction;
  opts.calibration_len = calibration_len_of(cfg, train.x.T);
  const std::vector<ReplaySpec> plan = random_attack_plan(train.x, cfg.n_attacks, opts, cfg.seed);
  const LabeledDataset labeled = inject_replays(train.x, plan);
  write_telemetry_csv(paths.attacked_csv, labeled.telemetry, &labeled.labels);

  std::int64_t attacked = 0;
  for (std::uint8_t v : labeled.labels) attacked += v;

  json j;
  j["format"] = "attack-plan";
  j["version"] = 1;
  j["attacked_samples"] = attacked;
  j["coverage"] = static_cast<double>(attacked) / static_cast<double>(train.x.T);
  json specs = json::array();
  for (const ReplaySpec& s : labeled.plan) {
    specs.push_back(json{{"channel", s.channel},
                         {"channel_name", train.x.channels[static_cast<std::size_t>(s.channel)]},
                         {"source", json::array({s.source.begin, s.source.end})},
                         {"target", json::array({s.target.begin, s.target.end})}});
  }
  j["replays"] = specs;
  write_text_atomic(paths.attack_plan, j.dump(2) + "\n");

  std::cout << "stage=inject attacks=" << labeled.plan.size() << " span=[" << labeled.plan.front().target.begin << ","
            << labeled.plan.front().target.end << ") attacked_samples=" << attacked
            << " coverage=" << fmt4(static_cast<double>(attacked) / static_cast<double>(train.x.T))
            << " out=" << paths.attacked_csv << "\n";
}

void run_train(const RunConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg.out_dir);
  ensure_dir(paths.dir);
  const TelemetryCsv benign = read_telemetry_csv(paths.train_csv);
  const Signal2D features = select_detector_features(benign.x);

  const ScalerParams scaler = fit_scaler(features);
  const Signal2D xs = apply_scaler(features, scaler);

  TcnAeConfig mc = cfg.model;
  mc.d = xs.d;
  mc.seed = cfg.seed;
  TcnAeModel model = build_model(mc);
  train(model, xs);
  save_model(model, paths.model);

  std::cout << "stage=train params=" << parameter_count(model) << " epochs=" << model.loss_history.size()
            << " final_loss=" << fmt_g(model.loss_history.empty() ? 0.0 : model.loss_history.back())
            << " out=" << paths.model << "\n";
}

void run_detect(const RunConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg.out_dir);
  ensure_dir(paths.dir);
  const TelemetryCsv train = read_telemetry_csv(paths.train_csv);
  const TelemetryCsv attacked = read_labeled(paths.attacked_csv);
  const TcnAeModel model = load_model(paths.model);

  DetectOptions opts = cfg.detection;
  opts.include_scores = true;
  const AnomalyReport rep = detect(model, select_detector_features(train.x), select_detector_features(attacked.x),
                                   attacked.labels, opts);
  write_report(paths.report, rep, attacked.x.T);

  std::int64_t flagged = 0;
  for (std::uint8_t f : rep.flags) flagged += f;
  std::cout << "stage=detect threshold=" << fmt_g(rep.threshold) << " lambda=" << fmt_g(rep.lambda)
            << " flagged=" << flagged << " f1=" << fmt4(rep.overall.f1)
            << " post_accuracy=" << fmt4(rep.post_calibration.accuracy) << " out=" << paths.report << "\n";
}

void run_evaluate(const RunConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg.out_dir);
  ensure_dir(paths.dir);
  const TelemetryCsv attacked = read_labeled(paths.attacked_csv);
  const StoredReport rep = read_report(paths.report);
  if (rep.length != attacked.x.T)
    throw ValidationError("detection report covers " + std::to_string(rep.length) + " samples but " +
                          paths.attacked_csv + " has " + std::to_string(attacked.x.T));

  // Metrics recomputed from the artifacts, not copied from the report.
  const std::vector<std::uint8_t> flags = flags_from_runs(rep.runs, rep.length);
  const MetricsRecord overall = compute_metrics(flags, attacked.labels);
  const std::vector<std::uint8_t> post_flags(flags.begin() + rep.calibration_len, flags.end());
  const std::vector<std::uint8_t> post_labels(attacked.labels.begin() + rep.calibration_len, attacked.labels.end());
  const MetricsRecord post = compute_metrics(post_flags, post_labels);

  json j;
  j["format"] = "evaluation";
  j["version"] = 1;
  j["calibration_len"] = rep.calibration_len;
  j["overall"] = metrics_json(overall);
  j["post_calibration"] = metrics_json(post);
  write_text_atomic(paths.metrics, j.dump(2) + "\n");

  std::cout << "stage=evaluate f1=" << fmt4(overall.f1) << " precision=" << fmt4(overall.precision)
            << " recall=" << fmt4(overall.recall) << " accuracy=" << fmt4(overall.accuracy)
            << " post_f1=" << fmt4(post.f1) << " post_accuracy=" << fmt4(post.accuracy) << " out=" << paths.metrics
            << "\n";
}

void run_plot(const RunConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg.out_dir);
  ensure_dir(paths.dir);
  const TelemetryCsv attacked = read_labeled(paths.attacked_csv);
  const TcnAeModel model = load_model(paths.model);
  const StoredReport rep = read_report(paths.report);

  const std::vector<Interval> labeled_runs = flag_runs(attacked.labels);
  std::vector<int> ports;
  for (int c = 0; c < attacked.x.d; ++c)
    if (attacked.x.channels[static_cast<std::size_t>(c)].rfind("I_CB", 0) == 0) ports.push_back(c);

  write_text_atomic(paths.channels_svg,
                    render_channels_svg(attacked.x, ports, labeled_runs, "port currents (shaded = replay attack)"));
  write_text_atomic(paths.loss_svg, render_loss_svg(model.loss_history));
  write_text_atomic(paths.scores_svg,
                    render_scores_svg(rep.scores, rep.threshold, labeled_runs, rep.runs, "anomaly scores"));

  std::cout << "stage=plot files=3 out=" << paths.dir << "\n";
}

void run_pipeline(const RunConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg.out_dir);
  ensure_dir(paths.dir);
  write_text_atomic(paths.resolved_config, run_config_json(cfg));
  run_simulate(cfg);
  run_inject(cfg);
  run_train(cfg);
  run_detect(cfg);
  run_evaluate(cfg);
  run_plot(cfg);
  std::cout << "stage=pipeline status=done out=" << paths.dir << "\n";
}

}  // namespace sentinel

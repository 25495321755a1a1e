#pragma once

#include <string>

#include "sentinel/config.hpp"

namespace sentinel {

// Fixed artifact names under the configured output directory. Stages hand
// data to each other through these files only, so running them one by one
// from the command line and running the combined pipeline are the same thing.
struct ArtifactPaths {
  std::string dir;
  std::string resolved_config;  // the configuration the run actually used
  std::string train_csv;        // benign telemetry, the training series
  std::string attacked_csv;     // same series with replays injected + Anomaly labels
  std::string attack_plan;      // where the replays sit and where they were recorded
  std::string model;            // trained autoencoder
  std::string report;           // detection report (threshold, scores, flags, metrics)
  std::string metrics;          // metrics recomputed from the artifacts by `evaluate`
  std::string channels_svg, loss_svg, scores_svg;
};
ArtifactPaths artifact_paths(const std::string& out_dir);

// Every stage reads its inputs from the artifact files, writes its outputs
// atomically and prints one `stage=<name> key=value ...` summary line.
void run_simulate(const RunConfig& cfg);
void run_inject(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_detect(const RunConfig& cfg);
void run_evaluate(const RunConfig& cfg);
void run_plot(const RunConfig& cfg);
// All six in order.
void run_pipeline(const RunConfig& cfg);

}  // namespace sentinel

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dataneeds/classifier.hpp"
#include "dataneeds/extrapolate.hpp"
#include "dataneeds/rfsignal.hpp"
#include "dataneeds/whitening.hpp"

namespace dataneeds::pipeline {

// ---- synth -----------------------------------------------------------------

struct DatasetSpec {
  std::string name;
  int per_class = 0;
};

struct SynthSpec {
  std::string problem_id;
  rfsignal::SynthConfig signal;  // per_class filled per dataset
  std::vector<DatasetSpec> datasets;
  std::uint64_t seed = 0;
};

SynthSpec load_synth_config(const std::filesystem::path& file);

// Writes <name>.bin + <name>.json for every dataset in the spec.
void run_synth(const SynthSpec& spec, const std::filesystem::path& out_dir, int jobs);

// ---- sweep -----------------------------------------------------------------

struct RunManifest {
  std::string problem_id;
  std::filesystem::path train_dataset;
  std::filesystem::path eval_dataset;
  std::vector<int> quantities;  // strictly increasing observations per class
  int trials_per_quantity = 1;
  std::uint64_t master_seed = 0;
  whitening::WhiteningConfig whitening;
  classifier::Hyper hyper;
};

RunManifest load_manifest(const std::filesystem::path& file);

// Trains/evaluates every (quantity, trial) pair, writes one logits CSV per
// run plus sweep_index.json. Per-run failures are recorded in the index and
// do not stop the sweep. Returns the index path.
std::filesystem::path run_sweep(const RunManifest& manifest,
                                const std::filesystem::path& out_dir, int jobs);

// ---- predict ---------------------------------------------------------------

struct PredictOverrides {
  std::optional<double> epsilon;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
};

struct PredictResult {
  extrapolate::CorrelationGate correlation;
  extrapolate::QuantityPrediction prediction;
  std::string report_json;  // exact bytes written to report.json
};

PredictResult run_predict(const std::filesystem::path& index_file,
                          const PredictOverrides& overrides,
                          const std::filesystem::path& out_dir, int jobs);

// ---- metrics / cost ----------------------------------------------------------

// Single-shot metric evaluation of a logits CSV; returns the JSON printed by
// the CLI, including a content fingerprint of the input file.
std::string run_metrics(const std::filesystem::path& logits_file);

struct CostEstimate {
  double total_samples = 0.0;
  double seconds = 0.0;
  double years = 0.0;
  double storage_bytes = 0.0;
  // assumptions
  double opc = 0.0;
  int n_classes = 0;
  int obs_len = 0;
  double sample_rate_hz = 0.0;
  double bytes_per_sample = 0.0;
};

// years use the Julian year (31,557,600 s)
CostEstimate cost_estimate(double opc, int n_classes, int obs_len,
                           double sample_rate_hz, double bytes_per_sample);
std::string cost_json(const CostEstimate& c);

}  // namespace dataneeds::pipeline

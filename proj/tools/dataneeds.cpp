#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "dataneeds/errors.hpp"
#include "dataneeds/pipeline.hpp"
#include "dataneeds/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dataneeds: estimate training-data requirements from transferability "
               "metrics over a quantity sweep"};
  app.set_version_flag("--version", dataneeds::kToolVersion);
  app.require_subcommand(1);

  // synth
  std::string synth_config, synth_out = ".";
  std::optional<std::uint64_t> synth_seed;
  int synth_jobs = 0;
  CLI::App* synth = app.add_subcommand("synth", "synthesize labeled RF datasets");
  synth->add_option("--config", synth_config, "synthesis config (JSON)")->required();
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--seed", synth_seed, "override the config seed");
  synth->add_option("--jobs", synth_jobs, "worker threads (0 = all)");

  // sweep
  std::string sweep_config, sweep_out = ".";
  std::optional<std::uint64_t> sweep_seed;
  int sweep_jobs = 0;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "train/evaluate a model per (quantity, trial) and emit logits CSVs");
  sweep->add_option("--config", sweep_config, "run manifest (JSON)")->required();
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--seed", sweep_seed, "override the manifest master seed");
  sweep->add_option("--jobs", sweep_jobs, "worker threads (0 = all)");

  // metrics
  std::string metrics_file;
  CLI::App* metrics_cmd =
      app.add_subcommand("metrics", "evaluate one logits CSV and print the metrics");
  metrics_cmd->add_option("file", metrics_file, "logits CSV")->required();

  // predict
  std::string predict_index, predict_out = ".";
  std::optional<double> predict_epsilon;
  std::optional<int> predict_iterations;
  std::optional<std::uint64_t> predict_seed;
  int predict_jobs = 0;
  CLI::App* predict = app.add_subcommand(
      "predict", "fit metric-vs-quantity regressions and invert them at whitening "
                 "targets");
  predict->add_option("index", predict_index, "sweep index JSON")->required();
  predict->add_option("--out", predict_out, "output directory");
  predict->add_option("--epsilon", predict_epsilon, "whitening accuracy degradation");
  predict->add_option("--iterations", predict_iterations, "whitening iterations");
  predict->add_option("--seed", predict_seed, "whitening seed");
  predict->add_option("--jobs", predict_jobs, "worker threads (0 = all)");

  // cost
  double cost_opc = 0.0, cost_rate = 10e3, cost_bps = 8.0;
  int cost_classes = 0, cost_obs_len = 0;
  CLI::App* cost = app.add_subcommand(
      "cost", "collection time/storage arithmetic for a target quantity");
  cost->add_option("--opc", cost_opc, "observations per class")->required();
  cost->add_option("--classes", cost_classes, "number of classes")->required();
  cost->add_option("--obs-len", cost_obs_len, "samples per observation")->required();
  cost->add_option("--rate", cost_rate, "collection sample rate in Hz");
  cost->add_option("--bytes-per-sample", cost_bps, "storage bytes per complex sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (synth->parsed()) {
      dataneeds::pipeline::SynthSpec spec =
          dataneeds::pipeline::load_synth_config(synth_config);
      if (synth_seed) spec.seed = *synth_seed;
      dataneeds::pipeline::run_synth(spec, synth_out, synth_jobs);
      std::cout << "wrote " << spec.datasets.size() << " dataset(s) to " << synth_out
                << "\n";
    } else if (sweep->parsed()) {
      dataneeds::pipeline::RunManifest manifest =
          dataneeds::pipeline::load_manifest(sweep_config);
      if (sweep_seed) {
        manifest.master_seed = *sweep_seed;
        manifest.whitening.seed = *sweep_seed;
      }
      const auto index = dataneeds::pipeline::run_sweep(manifest, sweep_out, sweep_jobs);
      std::cout << "wrote " << index.string() << "\n";
    } else if (metrics_cmd->parsed()) {
      std::cout << dataneeds::pipeline::run_metrics(metrics_file);
    } else if (predict->parsed()) {
      dataneeds::pipeline::PredictOverrides overrides;
      overrides.epsilon = predict_epsilon;
      overrides.iterations = predict_iterations;
      overrides.seed = predict_seed;
      dataneeds::pipeline::run_predict(predict_index, overrides, predict_out,
                                       predict_jobs);
      std::cout << "wrote " << (std::filesystem::path(predict_out) / "report.json").string()
                << "\n";
    } else if (cost->parsed()) {
      std::cout << dataneeds::pipeline::cost_json(dataneeds::pipeline::cost_estimate(
          cost_opc, cost_classes, cost_obs_len, cost_rate, cost_bps));
    }
  } catch (const dataneeds::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

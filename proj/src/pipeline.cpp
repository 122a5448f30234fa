#include "dataneeds/pipeline.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>

#include "dataneeds/dataset_io.hpp"
#include "dataneeds/errors.hpp"
#include "dataneeds/logits_csv.hpp"
#include "dataneeds/rng.hpp"
#include "dataneeds/version.hpp"

namespace dataneeds::pipeline {

namespace {

using nlohmann::json;

json load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open config: " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

rfsignal::Range parse_range(const json& j, const std::string& field,
                            rfsignal::Range fallback) {
  if (!j.contains(field)) return fallback;
  const json& r = j.at(field);
  if (!r.is_array() || r.size() != 2)
    throw ValidationError("config field '" + field + "' must be a [lo, hi] pair");
  rfsignal::Range out{r[0].get<double>(), r[1].get<double>()};
  if (out.lo > out.hi)
    throw ValidationError("config field '" + field + "' has lo > hi");
  return out;
}

// NaN -> null, +inf -> "inf": JSON has no encoding for either.
json json_quantity(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string file_fingerprint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + file.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr std::uint64_t kSweepRunTag = 0x06;

}  // namespace

// ---- synth -------------------------------------------------------------------

SynthSpec load_synth_config(const std::filesystem::path& file) {
  const json j = load_json(file);
  SynthSpec spec;
  try {
    spec.problem_id = j.at("problem_id").get<std::string>();
    spec.seed = j.value("seed", std::uint64_t{0});
    if (!j.contains("schemes") || !j.at("schemes").is_array() ||
        j.at("schemes").empty())
      throw ValidationError("config field 'schemes' must be a non-empty array");
    for (const auto& name : j.at("schemes")) {
      const auto s = rfsignal::scheme_from_name(name.get<std::string>());
      if (!s)
        throw ValidationError("config field 'schemes': unknown scheme '" +
                              name.get<std::string>() + "'");
      spec.signal.schemes.push_back(*s);
    }
    spec.signal.obs_len = j.value("obs_len", 1024);
    spec.signal.sps = j.value("sps", 4);
    const std::string pulse = j.value("pulse", std::string("rrc"));
    if (pulse == "rrc")
      spec.signal.pulse = rfsignal::PulseShape::kRootRaisedCosine;
    else if (pulse == "rect")
      spec.signal.pulse = rfsignal::PulseShape::kRectangular;
    else
      throw ValidationError("config field 'pulse' must be 'rrc' or 'rect'");
    spec.signal.snr_db = parse_range(j, "snr_db", {10.0, 10.0});
    spec.signal.freq_offset = parse_range(j, "freq_offset", {0.0, 0.0});
    spec.signal.srm = parse_range(j, "srm", {1.0, 1.0});
    spec.signal.iqi_g = parse_range(j, "iqi_g", {1.0, 1.0});
    spec.signal.iqi_phi = parse_range(j, "iqi_phi", {0.0, 0.0});
    if (!j.contains("datasets") || !j.at("datasets").is_array() ||
        j.at("datasets").empty())
      throw ValidationError("config field 'datasets' must be a non-empty array");
    for (const auto& d : j.at("datasets")) {
      DatasetSpec ds;
      ds.name = d.at("name").get<std::string>();
      ds.per_class = d.at("per_class").get<int>();
      if (ds.per_class < 0)
        throw ValidationError("dataset '" + ds.name + "': per_class must be >= 0");
      spec.datasets.push_back(std::move(ds));
    }
  } catch (const json::exception& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
  return spec;
}

void run_synth(const SynthSpec& spec, const std::filesystem::path& out_dir, int jobs) {
  std::filesystem::create_directories(out_dir);
  for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
    const DatasetSpec& ds_spec = spec.datasets[d];
    rfsignal::SynthConfig cfg = spec.signal;
    cfg.per_class = ds_spec.per_class;
    const std::uint64_t ds_seed = derive_seed(
        spec.seed, {stream_tag::kDataset, static_cast<std::uint64_t>(d)});
    const rfsignal::Dataset data = rfsignal::synth_dataset(cfg, ds_seed, jobs);
    io::write_dataset(out_dir / (ds_spec.name + ".bin"), data);

    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["problem_id"] = spec.problem_id;
    manifest["name"] = ds_spec.name;
    manifest["data_file"] = ds_spec.name + ".bin";
    manifest["n_classes"] = static_cast<int>(cfg.schemes.size());
    json schemes = json::array();
    for (auto s : cfg.schemes) schemes.push_back(rfsignal::scheme_info(s).name);
    manifest["schemes"] = schemes;
    manifest["per_class"] = cfg.per_class;
    manifest["n_observations"] = static_cast<int>(data.observations.size());
    manifest["obs_len"] = cfg.obs_len;
    manifest["sps"] = cfg.sps;
    manifest["pulse"] =
        cfg.pulse == rfsignal::PulseShape::kRootRaisedCosine ? "rrc" : "rect";
    manifest["seed"] = spec.seed;
    manifest["ranges"] = {{"snr_db", {cfg.snr_db.lo, cfg.snr_db.hi}},
                          {"freq_offset", {cfg.freq_offset.lo, cfg.freq_offset.hi}},
                          {"srm", {cfg.srm.lo, cfg.srm.hi}},
                          {"iqi_g", {cfg.iqi_g.lo, cfg.iqi_g.hi}},
                          {"iqi_phi", {cfg.iqi_phi.lo, cfg.iqi_phi.hi}}};
    write_text(out_dir / (ds_spec.name + ".json"), manifest.dump(2) + "\n");
  }
}

// ---- sweep -------------------------------------------------------------------

RunManifest load_manifest(const std::filesystem::path& file) {
  const json j = load_json(file);
  RunManifest m;
  try {
    m.problem_id = j.at("problem_id").get<std::string>();
    m.train_dataset = j.at("train_dataset").get<std::string>();
    m.eval_dataset = j.at("eval_dataset").get<std::string>();
    m.quantities = j.at("quantities").get<std::vector<int>>();
    m.trials_per_quantity = j.value("trials_per_quantity", 1);
    m.master_seed = j.value("master_seed", std::uint64_t{0});
    if (j.contains("whitening")) {
      const json& w = j.at("whitening");
      m.whitening.epsilon = w.value("epsilon", 1e-5);
      m.whitening.iterations = w.value("iterations", 1000);
      m.whitening.gamma = w.value("gamma", 0.0);
    }
    if (j.contains("classifier")) {
      const json& c = j.at("classifier");
      m.hyper.epochs = c.value("epochs", 500);
      m.hyper.learning_rate = c.value("learning_rate", 0.1);
    }
  } catch (const json::exception& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
  if (m.quantities.empty())
    throw ValidationError(file.string() + ": 'quantities' must be non-empty");
  for (std::size_t i = 0; i + 1 < m.quantities.size(); ++i)
    if (m.quantities[i] >= m.quantities[i + 1])
      throw ValidationError(file.string() + ": quantities must be strictly increasing");
  if (m.quantities.front() < 1)
    throw ValidationError(file.string() + ": quantities must be positive");
  if (m.trials_per_quantity < 1)
    throw ValidationError(file.string() + ": trials_per_quantity must be >= 1");
  m.whitening.seed = m.master_seed;
  return m;
}

std::filesystem::path run_sweep(const RunManifest& manifest,
                                const std::filesystem::path& out_dir, int jobs) {
  if (!std::filesystem::exists(manifest.train_dataset))
    throw ValidationError("train dataset not found: " + manifest.train_dataset.string());
  if (!std::filesystem::exists(manifest.eval_dataset))
    throw ValidationError("eval dataset not found: " + manifest.eval_dataset.string());
  std::filesystem::create_directories(out_dir);

  const rfsignal::Dataset train_ds = io::read_dataset(manifest.train_dataset);
  const rfsignal::Dataset eval_ds =
      io::read_dataset(manifest.eval_dataset, train_ds.n_classes);
  const classifier::FeatureSet train_feat =
      classifier::extract_features_batch(train_ds, jobs);
  const classifier::FeatureSet eval_feat =
      classifier::extract_features_batch(eval_ds, jobs);

  struct RunOutcome {
    int quantity = 0;
    int trial = 0;
    std::string file;
    double eval_accuracy = 0.0;
    bool ok = false;
    std::string error;
  };
  const int n_runs =
      static_cast<int>(manifest.quantities.size()) * manifest.trials_per_quantity;
  std::vector<RunOutcome> outcomes(n_runs);

  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int r = 0; r < n_runs; ++r) {
    const int qi = r / manifest.trials_per_quantity;
    const int trial = r % manifest.trials_per_quantity;
    const int quantity = manifest.quantities[qi];
    RunOutcome& out = outcomes[r];
    out.quantity = quantity;
    out.trial = trial;
    out.file = "logits_q" + std::to_string(quantity) + "_t" + std::to_string(trial) +
               ".csv";
    try {
      const std::uint64_t run_seed =
          derive_seed(manifest.master_seed,
                      {kSweepRunTag, static_cast<std::uint64_t>(quantity),
                       static_cast<std::uint64_t>(trial)});
      const classifier::SoftmaxModel model =
          classifier::train(train_feat, quantity, manifest.hyper, run_seed);
      const metrics::PredictionSet pred = classifier::evaluate(model, eval_feat);
      io::write_logits_csv(out_dir / out.file, pred);
      out.eval_accuracy = metrics::accuracy(pred);
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  }

  json index;
  index["schema_version"] = kSchemaVersion;
  index["tool_version"] = kToolVersion;
  index["problem_id"] = manifest.problem_id;
  index["n_classes"] = train_ds.n_classes;
  index["master_seed"] = manifest.master_seed;
  index["train_dataset"] = manifest.train_dataset.string();
  index["eval_dataset"] = manifest.eval_dataset.string();
  index["whitening"] = {{"epsilon", manifest.whitening.epsilon},
                        {"iterations", manifest.whitening.iterations},
                        {"gamma", manifest.whitening.gamma},
                        {"seed", manifest.whitening.seed}};
  index["classifier"] = {{"epochs", manifest.hyper.epochs},
                         {"learning_rate", manifest.hyper.learning_rate}};
  json runs = json::array();
  for (const RunOutcome& out : outcomes) {
    json r;
    r["quantity"] = out.quantity;
    r["trial"] = out.trial;
    r["logits"] = out.file;
    if (out.ok) {
      r["status"] = "ok";
      r["eval_accuracy"] = out.eval_accuracy;
    } else {
      r["status"] = "failed";
      r["error"] = out.error;
    }
    runs.push_back(std::move(r));
  }
  index["runs"] = runs;

  const std::filesystem::path index_file = out_dir / "sweep_index.json";
  write_text(index_file, index.dump(2) + "\n");
  return index_file;
}

// ---- predict -----------------------------------------------------------------

namespace {

json fit_to_json(const extrapolate::MetricPrediction& mp) {
  if (!mp.ok) return {{"error", mp.error}};
  return {{"slope", mp.fit.slope},
          {"intercept", mp.fit.intercept},
          {"gof", mp.fit.gof},
          {"n_points", mp.fit.n_points}};
}

json prediction_to_json(const extrapolate::MetricPrediction& mp) {
  if (!mp.ok) return {{"error", mp.error}};
  return {{"quantity", json_quantity(mp.inversion.quantity)},
          {"target", mp.target},
          {"status", extrapolate::inversion_status_name(mp.inversion.status)}};
}

}  // namespace

PredictResult run_predict(const std::filesystem::path& index_file,
                          const PredictOverrides& overrides,
                          const std::filesystem::path& out_dir, int jobs) {
  const json index = load_json(index_file);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path base = index_file.parent_path();

  whitening::WhiteningConfig wcfg;
  std::string problem_id, dataset_id;
  int n_classes = 0;
  std::vector<std::pair<int, std::filesystem::path>> ok_runs;  // (quantity, file)
  try {
    problem_id = index.at("problem_id").get<std::string>();
    dataset_id = index.value("train_dataset", std::string{});
    n_classes = index.at("n_classes").get<int>();
    const json& w = index.at("whitening");
    wcfg.epsilon = w.value("epsilon", 1e-5);
    wcfg.iterations = w.value("iterations", 1000);
    wcfg.gamma = w.value("gamma", 0.0);
    wcfg.seed = w.value("seed", std::uint64_t{0});
    for (const auto& r : index.at("runs")) {
      if (r.at("status").get<std::string>() != "ok") continue;
      ok_runs.emplace_back(r.at("quantity").get<int>(),
                           base / r.at("logits").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ValidationError(index_file.string() + ": " + e.what());
  }
  if (overrides.epsilon) wcfg.epsilon = *overrides.epsilon;
  if (overrides.iterations) wcfg.iterations = *overrides.iterations;
  if (overrides.seed) wcfg.seed = *overrides.seed;

  {
    std::set<int> distinct;
    for (const auto& [q, f] : ok_runs) distinct.insert(q);
    if (distinct.size() < 3)
      throw ValidationError(
          "predict: fewer than 3 distinct quantities with successful runs");
  }

  // metric evaluation per run, order-independent
  extrapolate::QuantitySweep sweep;
  sweep.problem_id = problem_id;
  sweep.dataset_id = dataset_id;
  sweep.points.resize(ok_runs.size());
  std::vector<int> labels;
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  bool failed = false;
  std::string error;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(ok_runs.size()); ++i) {
    try {
      const metrics::PredictionSet pred = classifier::ingest_logits(ok_runs[i].second);
      sweep.points[i].quantity = ok_runs[i].first;
      sweep.points[i].values = metrics::compute_all(pred);
      if (i == 0) labels = pred.labels;
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        error = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error("predict: " + error);

  PredictResult result;
  result.correlation = extrapolate::correlation_gate(sweep);
  result.prediction =
      extrapolate::predict_requirements(sweep, labels, n_classes, wcfg, jobs);
  const auto& pr = result.prediction;

  json report;
  report["schema_version"] = kSchemaVersion;
  report["tool_version"] = kToolVersion;
  report["problem_id"] = problem_id;
  report["dataset_id"] = dataset_id;
  report["n_runs"] = static_cast<int>(ok_runs.size());
  {
    std::set<int> distinct;
    for (const auto& [q, f] : ok_runs) distinct.insert(q);
    report["quantities"] = std::vector<int>(distinct.begin(), distinct.end());
  }
  report["correlation"] = {{"nce", result.correlation.tau_nce},
                           {"leep", result.correlation.tau_leep},
                           {"logme", result.correlation.tau_logme}};
  json fits, predictions;
  for (extrapolate::Metric m : extrapolate::kAllMetrics) {
    fits[extrapolate::metric_name(m)] = fit_to_json(pr.of(m));
    predictions[extrapolate::metric_name(m)] = prediction_to_json(pr.of(m));
  }
  predictions["lower_hint"] = json_quantity(pr.lower_hint);
  predictions["upper_hint"] = json_quantity(pr.upper_hint);
  predictions["midpoint"] = json_quantity(pr.midpoint);
  report["fits"] = fits;
  report["predictions"] = predictions;
  report["targets"] = {
      {"accuracy", pr.targets.mean.accuracy},
      {"nce", pr.targets.mean.nce},
      {"leep", pr.targets.mean.leep},
      {"logme", pr.targets.mean.logme},
      {"accuracy_std_error", pr.targets.std_error.accuracy},
      {"nce_std_error", pr.targets.std_error.nce},
      {"leep_std_error", pr.targets.std_error.leep},
      {"logme_std_error", pr.targets.std_error.logme},
      {"epsilon", wcfg.epsilon},
      {"epsilon_measured", pr.targets.epsilon_measured},
      {"epsilon_measured_std_error", pr.targets.epsilon_measured_std_error},
      {"residual", whitening::residual(wcfg.epsilon, pr.targets.epsilon_measured)},
      {"gamma", pr.targets.gamma},
      {"sigma", pr.targets.sigma},
      {"iterations", pr.targets.iterations},
      {"seed", wcfg.seed},
      {"logme_saturated", pr.targets.logme_saturated}};
  report["best_gof_metric"] =
      pr.has_best_gof ? json(extrapolate::metric_name(pr.best_gof_metric)) : json();
  report["warnings"] = pr.warnings;

  result.report_json = report.dump(2) + "\n";
  write_text(out_dir / "report.json", result.report_json);

  // per-metric plot data: log10 quantity, measured value, fitted value
  for (extrapolate::Metric m : extrapolate::kAllMetrics) {
    const extrapolate::MetricPrediction& mp = pr.of(m);
    if (!mp.ok) continue;
    std::string csv = "log10_quantity,value,fitted\n";
    const std::vector<double> values = sweep.metric_values(m);
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
      const double q = sweep.points[i].quantity;
      csv += format_g17(std::log10(q)) + "," + format_g17(values[i]) + "," +
             format_g17(mp.fit.predict(q)) + "\n";
    }
    write_text(out_dir / ("plot_" + std::string(extrapolate::metric_name(m)) + ".csv"),
               csv);
  }
  return result;
}

// ---- metrics / cost ------------------------------------------------------------

std::string run_metrics(const std::filesystem::path& logits_file) {
  const metrics::PredictionSet pred = classifier::ingest_logits(logits_file);
  const metrics::MetricVector v = metrics::compute_all(pred);
  json out;
  out["accuracy"] = v.accuracy;
  out["nce"] = v.nce;
  out["leep"] = v.leep;
  out["logme"] = v.logme;
  out["n_observations"] = static_cast<int>(pred.size());
  out["n_classes"] = pred.n_classes;
  out["input"] = logits_file.string();
  out["fingerprint"] = file_fingerprint(logits_file);
  return out.dump(2) + "\n";
}

CostEstimate cost_estimate(double opc, int n_classes, int obs_len,
                           double sample_rate_hz, double bytes_per_sample) {
  if (!(opc > 0.0) || n_classes <= 0 || obs_len <= 0 || !(sample_rate_hz > 0.0) ||
      !(bytes_per_sample > 0.0))
    throw ValidationError("cost: all inputs must be positive");
  CostEstimate c;
  c.opc = opc;
  c.n_classes = n_classes;
  c.obs_len = obs_len;
  c.sample_rate_hz = sample_rate_hz;
  c.bytes_per_sample = bytes_per_sample;
  c.total_samples = opc * n_classes * obs_len;
  c.seconds = c.total_samples / sample_rate_hz;
  c.years = c.seconds / 31557600.0;  // Julian year
  c.storage_bytes = c.total_samples * bytes_per_sample;
  return c;
}

std::string cost_json(const CostEstimate& c) {
  json out;
  out["total_samples"] = c.total_samples;
  out["seconds"] = c.seconds;
  out["years"] = c.years;
  out["storage_bytes"] = c.storage_bytes;
  out["storage_terabytes"] = c.storage_bytes / 1e12;
  out["assumptions"] = {{"opc", c.opc},
                        {"n_classes", c.n_classes},
                        {"obs_len", c.obs_len},
                        {"sample_rate_hz", c.sample_rate_hz},
                        {"bytes_per_sample", c.bytes_per_sample},
                        {"seconds_per_year", 31557600.0}};
  return out.dump(2) + "\n";
}

}  // namespace dataneeds::pipeline

#include "dataneeds/classifier.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

#include "dataneeds/errors.hpp"
#include "dataneeds/logits_csv.hpp"
#include "dataneeds/rng.hpp"

namespace dataneeds::classifier {

namespace {

using rfsignal::cplx;

double spectral_flatness(const std::vector<cplx>& x) {
  Eigen::FFT<double> fft;
  std::vector<cplx> spec;
  fft.fwd(spec, x);
  double log_sum = 0.0, lin_sum = 0.0;
  for (const cplx& v : spec) {
    const double p = std::max(std::norm(v), 1e-300);
    log_sum += std::log(p);
    lin_sum += p;
  }
  const double n = static_cast<double>(spec.size());
  return std::exp(log_sum / n) / (lin_sum / n);
}

void softmax_row(const double* logits, int c, double* out) {
  double mx = logits[0];
  for (int k = 1; k < c; ++k) mx = std::max(mx, logits[k]);
  double sum = 0.0;
  for (int k = 0; k < c; ++k) {
    out[k] = std::exp(logits[k] - mx);
    sum += out[k];
  }
  for (int k = 0; k < c; ++k) out[k] /= sum;
}

}  // namespace

FeatureVector extract_features(const rfsignal::Observation& obs) {
  const auto& x = obs.samples;
  const std::size_t n = x.size();
  if (n < 64) throw ValidationError("extract_features: observation shorter than 64");
  for (const cplx& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw ValidationError("extract_features: non-finite sample");

  FeatureVector f{};

  // instantaneous power statistics on the raw samples
  double mean_p = 0.0;
  for (const cplx& v : x) mean_p += std::norm(v);
  mean_p /= n;
  double var_p = 0.0;
  for (const cplx& v : x) {
    const double d = std::norm(v) - mean_p;
    var_p += d * d;
  }
  var_p /= n;
  f[0] = mean_p;
  f[1] = var_p;

  // moments on unit-power-normalized samples
  const double rms = std::sqrt(mean_p);
  std::vector<cplx> xn(n);
  for (std::size_t i = 0; i < n; ++i) xn[i] = rms > 0.0 ? x[i] / rms : x[i];
  cplx m2{0, 0}, m4{0, 0}, m6{0, 0};
  for (const cplx& v : xn) {
    const cplx v2 = v * v;
    m2 += v2;
    m4 += v2 * v2;
    m6 += v2 * v2 * v2;
  }
  f[2] = std::abs(m2) / n;
  f[3] = std::abs(m4) / n;
  f[4] = std::abs(m6) / n;

  // envelope kurtosis; constant-envelope signals map to 0
  double mean_a = 0.0;
  for (const cplx& v : xn) mean_a += std::abs(v);
  mean_a /= n;
  double c2 = 0.0, c4 = 0.0;
  for (const cplx& v : xn) {
    const double d = std::abs(v) - mean_a;
    c2 += d * d;
    c4 += d * d * d * d;
  }
  c2 /= n;
  c4 /= n;
  f[5] = c2 > 1e-24 ? c4 / (c2 * c2) : 0.0;

  f[6] = spectral_flatness(xn);

  // autocorrelation magnitudes at lags 1..8 (xn has unit mean power)
  for (int lag = 1; lag <= 8; ++lag) {
    cplx acc{0, 0};
    for (std::size_t i = 0; i + lag < n; ++i) acc += xn[i + lag] * std::conj(xn[i]);
    f[6 + lag] = std::abs(acc) / static_cast<double>(n);
  }
  return f;
}

FeatureSet extract_features_batch(const rfsignal::Dataset& ds, int jobs) {
  const std::size_t n = ds.observations.size();
  FeatureSet out;
  out.n_classes = ds.n_classes;
  out.labels.resize(n);
  out.features.resize(n * kFeatureDim);

  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  bool failed = false;
  std::string error;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    try {
      const FeatureVector f = extract_features(ds.observations[i]);
      std::copy(f.begin(), f.end(), out.features.begin() + i * kFeatureDim);
      out.labels[i] = ds.observations[i].label;
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        error = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error("extract_features_batch: " + error);
  return out;
}

FeatureSet extract_features_batch_serial(const rfsignal::Dataset& ds) {
  FeatureSet out;
  out.n_classes = ds.n_classes;
  out.labels.reserve(ds.observations.size());
  out.features.reserve(ds.observations.size() * kFeatureDim);
  for (const auto& obs : ds.observations) {
    const FeatureVector f = extract_features(obs);
    out.features.insert(out.features.end(), f.begin(), f.end());
    out.labels.push_back(obs.label);
  }
  return out;
}

SoftmaxModel train(const FeatureSet& data, int quantity_per_class, const Hyper& hyper,
                   std::uint64_t seed) {
  const int c = data.n_classes;
  if (c < 2) throw ValidationError("train: needs at least 2 classes");
  if (quantity_per_class < 1)
    throw ValidationError("train: quantity_per_class must be >= 1");

  // exactly-balanced seeded subsample
  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  std::vector<std::size_t> chosen;
  chosen.reserve(static_cast<std::size_t>(c) * quantity_per_class);
  for (int k = 0; k < c; ++k) {
    auto& idx = by_class[k];
    if (idx.size() < static_cast<std::size_t>(quantity_per_class))
      throw ValidationError("train: class " + std::to_string(k) + " has only " +
                            std::to_string(idx.size()) + " observations, need " +
                            std::to_string(quantity_per_class));
    RandomStream rng =
        RandomStream::derive(seed, {stream_tag::kTrain, static_cast<std::uint64_t>(k)});
    for (std::size_t i = idx.size() - 1; i > 0; --i)
      std::swap(idx[i], idx[rng.uniform_int(i + 1)]);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + quantity_per_class);
  }
  const std::size_t n = chosen.size();

  // standardization from the training subsample only
  SoftmaxModel model;
  model.n_classes = c;
  model.feat_mean.assign(kFeatureDim, 0.0);
  model.feat_std.assign(kFeatureDim, 0.0);
  for (std::size_t i : chosen)
    for (int d = 0; d < kFeatureDim; ++d)
      model.feat_mean[d] += data.features[i * kFeatureDim + d];
  for (int d = 0; d < kFeatureDim; ++d) model.feat_mean[d] /= n;
  for (std::size_t i : chosen)
    for (int d = 0; d < kFeatureDim; ++d) {
      const double v = data.features[i * kFeatureDim + d] - model.feat_mean[d];
      model.feat_std[d] += v * v;
    }
  for (int d = 0; d < kFeatureDim; ++d) {
    model.feat_std[d] = std::sqrt(model.feat_std[d] / n);
    if (model.feat_std[d] < 1e-12) model.feat_std[d] = 1.0;
  }

  std::vector<double> z(n * kFeatureDim);
  for (std::size_t j = 0; j < n; ++j)
    for (int d = 0; d < kFeatureDim; ++d)
      z[j * kFeatureDim + d] =
          (data.features[chosen[j] * kFeatureDim + d] - model.feat_mean[d]) /
          model.feat_std[d];

  model.weights.assign(static_cast<std::size_t>(c) * kFeatureDim, 0.0);
  model.bias.assign(c, 0.0);
  model.meta = {hyper.epochs, hyper.learning_rate, seed, quantity_per_class};

  std::vector<double> logits(c), probs(c);
  std::vector<double> gw(model.weights.size());
  std::vector<double> gb(c);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double* row = &z[j * kFeatureDim];
      for (int k = 0; k < c; ++k) {
        double acc = model.bias[k];
        const double* w = &model.weights[static_cast<std::size_t>(k) * kFeatureDim];
        for (int d = 0; d < kFeatureDim; ++d) acc += w[d] * row[d];
        logits[k] = acc;
      }
      softmax_row(logits.data(), c, probs.data());
      const int y = data.labels[chosen[j]];
      for (int k = 0; k < c; ++k) {
        const double g = (probs[k] - (k == y ? 1.0 : 0.0)) * inv_n;
        gb[k] += g;
        double* gwr = &gw[static_cast<std::size_t>(k) * kFeatureDim];
        for (int d = 0; d < kFeatureDim; ++d) gwr[d] += g * row[d];
      }
    }
    for (std::size_t i = 0; i < gw.size(); ++i)
      model.weights[i] -= hyper.learning_rate * gw[i];
    for (int k = 0; k < c; ++k) model.bias[k] -= hyper.learning_rate * gb[k];
  }
  return model;
}

metrics::PredictionSet evaluate(const SoftmaxModel& model, const FeatureSet& data) {
  if (data.n_classes != model.n_classes)
    throw ValidationError("evaluate: class-count mismatch between model and data");
  const int c = model.n_classes;
  const std::size_t n = data.size();
  metrics::PredictionSet out;
  out.n_classes = c;
  out.labels = data.labels;
  out.probs.resize(n * c);
  std::vector<double> logits(c);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < c; ++k) {
      double acc = model.bias[k];
      const double* w = &model.weights[static_cast<std::size_t>(k) * kFeatureDim];
      for (int d = 0; d < kFeatureDim; ++d)
        acc += w[d] * (data.features[i * kFeatureDim + d] - model.feat_mean[d]) /
               model.feat_std[d];
      logits[k] = acc;
    }
    softmax_row(logits.data(), c, &out.probs[i * c]);
  }
  return out;
}

metrics::PredictionSet ingest_logits(const std::filesystem::path& file) {
  metrics::PredictionSet ps = io::read_logits_csv(file);
  ps.validate();
  return ps;
}

}  // namespace dataneeds::classifier

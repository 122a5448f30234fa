#include "dataneeds/whitening.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "dataneeds/errors.hpp"

namespace dataneeds::whitening {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

double logistic(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

// Acklam's rational approximation to the inverse normal CDF.
double inverse_normal_cdf(double q) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (q < p_low) {
    const double r = std::sqrt(-2.0 * std::log(q));
    return (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
           ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  if (q > 1.0 - p_low) {
    const double r = std::sqrt(-2.0 * std::log(1.0 - q));
    return -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
           ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  const double r = q - 0.5;
  const double s = r * r;
  return (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) * r /
         (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0);
}

struct IterationOutcome {
  metrics::MetricVector metric;
  double epsilon_hat = 0.0;
  bool logme_saturated = false;
};

double resolve_gamma(const WhiteningConfig& config, int n_classes) {
  return config.gamma > 0.0 ? config.gamma : default_gamma(n_classes);
}

}  // namespace

double erf_inv(double p) {
  if (!(p > -1.0 && p < 1.0))
    throw ValidationError("erf_inv: argument must lie in (-1, 1)");
  if (p == 0.0) return 0.0;

  double x = inverse_normal_cdf(0.5 * (p + 1.0)) / 1.4142135623730950488;

  // One Newton step; use erfc on the side where erf(x)-p would cancel.
  const double deriv = 0.5 * kSqrtPi * std::exp(x * x);
  if (p > 0.5)
    x += ((1.0 - p) - std::erfc(x)) * -deriv;
  else if (p < -0.5)
    x += (std::erfc(-x) - (1.0 + p)) * deriv;
  else
    x -= (std::erf(x) - p) * deriv;
  return x;
}

double default_gamma(int n_classes) {
  if (n_classes < 2) throw ValidationError("default_gamma: n_classes must be >= 2");
  double gamma = 0x1.0p-48;
  const double c = static_cast<double>(n_classes);
  while (!(1.0 - gamma * (1.0 - 1.0 / c) < 1.0) || !(gamma / c > 0.0)) gamma *= 2.0;
  return gamma;
}

std::vector<double> smooth_labels(const std::vector<double>& one_hot, int n_classes,
                                  double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ValidationError("smooth_labels: gamma must lie in (0,1)");
  if (n_classes < 2 || one_hot.size() % n_classes != 0)
    throw ValidationError("smooth_labels: matrix shape does not match n_classes");
  const std::size_t rows = one_hot.size() / n_classes;
  const double inv_c = 1.0 / static_cast<double>(n_classes);
  for (std::size_t i = 0; i < rows; ++i) {
    int ones = 0;
    for (int k = 0; k < n_classes; ++k) {
      const double v = one_hot[i * n_classes + k];
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        throw ValidationError("smooth_labels: row " + std::to_string(i) +
                              " is not one-hot");
    }
    if (ones != 1)
      throw ValidationError("smooth_labels: row " + std::to_string(i) +
                            " is not one-hot");
  }
  std::vector<double> out(one_hot.size());
  for (std::size_t i = 0; i < one_hot.size(); ++i)
    out[i] = one_hot[i] - gamma * (one_hot[i] - inv_c);
  return out;
}

std::vector<double> logit_transform(const std::vector<double>& p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0 && p[i] < 1.0))
      throw ValidationError("logit_transform: entry outside (0,1); smooth labels first");
    out[i] = std::log(p[i] / (1.0 - p[i]));
  }
  return out;
}

double sigma_for_epsilon(double epsilon, int n_classes, double gamma) {
  if (n_classes < 2) throw ValidationError("sigma_for_epsilon: n_classes must be >= 2");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ValidationError("sigma_for_epsilon: epsilon must lie in (0,1)");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ValidationError("sigma_for_epsilon: gamma must lie in (0,1)");
  const double c = static_cast<double>(n_classes);
  const double arg = 2.0 * std::pow(1.0 - epsilon, 1.0 / (c - 1.0)) - 1.0;
  if (arg <= 0.0)
    throw ValidationError(
        "sigma_for_epsilon: epsilon at or beyond chance level; noise is unbounded");
  const double numerator = std::log(c * c * (1.0 - gamma) + gamma * gamma * (c - 1.0)) -
                           std::log(gamma * gamma * (c - 1.0));
  return numerator / (2.0 * erf_inv(arg));
}

metrics::PredictionSet whiten(const std::vector<int>& labels, int n_classes,
                              const WhiteningConfig& config, RandomStream& rng) {
  if (labels.empty()) throw ValidationError("whiten: empty label vector");
  for (int l : labels)
    if (l < 0 || l >= n_classes) throw ValidationError("whiten: label out of range");

  const double gamma = resolve_gamma(config, n_classes);
  const double sigma =
      config.zero_noise ? 0.0 : sigma_for_epsilon(config.epsilon, n_classes, gamma);
  const double smooth_hit = 1.0 - gamma * (1.0 - 1.0 / n_classes);
  const double smooth_miss = gamma / n_classes;
  const double logit_hit = std::log(smooth_hit / (1.0 - smooth_hit));
  const double logit_miss = std::log(smooth_miss / (1.0 - smooth_miss));

  const std::size_t n = labels.size();
  metrics::PredictionSet out;
  out.labels = labels;
  out.n_classes = n_classes;
  out.probs.resize(n * n_classes);
  std::vector<double> row(n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < n_classes; ++k) {
      double m = labels[i] == k ? logit_hit : logit_miss;
      if (sigma > 0.0) m += sigma * rng.normal();
      row[k] = logistic(m);
      sum += row[k];
    }
    for (int k = 0; k < n_classes; ++k) out.probs[i * n_classes + k] = row[k] / sum;
  }
  return out;
}

namespace {

IterationOutcome run_iteration(const std::vector<int>& labels, int n_classes,
                               const WhiteningConfig& config, int iteration) {
  RandomStream rng = RandomStream::derive(
      config.seed, {stream_tag::kWhiten, static_cast<std::uint64_t>(iteration)});
  const metrics::PredictionSet ps = whiten(labels, n_classes, config, rng);
  IterationOutcome out;
  metrics::LogMeResult lm = metrics::logme(ps);
  out.metric.accuracy = metrics::accuracy(ps);
  out.metric.nce = metrics::nce(ps);
  out.metric.leep = metrics::leep(ps);
  out.metric.logme = lm.score;
  out.logme_saturated = lm.saturated;
  out.epsilon_hat = 1.0 - out.metric.accuracy;
  return out;
}

TargetMetrics aggregate(const std::vector<IterationOutcome>& outcomes,
                        const WhiteningConfig& config, int n_classes,
                        const std::vector<int>& labels) {
  const int n = static_cast<int>(outcomes.size());
  TargetMetrics tm;
  tm.iterations = n;
  tm.gamma = resolve_gamma(config, n_classes);
  tm.sigma = config.zero_noise ? 0.0
                               : sigma_for_epsilon(config.epsilon, n_classes, tm.gamma);
  (void)labels;

  auto mean_of = [&](auto get) {
    double s = 0.0;
    for (const auto& o : outcomes) s += get(o);
    return s / n;
  };
  auto stderr_of = [&](auto get, double mean) {
    if (n < 2) return 0.0;
    double ss = 0.0;
    for (const auto& o : outcomes) {
      const double d = get(o) - mean;
      ss += d * d;
    }
    return std::sqrt(ss / (n - 1) / n);
  };

  auto acc = [](const IterationOutcome& o) { return o.metric.accuracy; };
  auto nce_v = [](const IterationOutcome& o) { return o.metric.nce; };
  auto leep_v = [](const IterationOutcome& o) { return o.metric.leep; };
  auto logme_v = [](const IterationOutcome& o) { return o.metric.logme; };
  auto eps_v = [](const IterationOutcome& o) { return o.epsilon_hat; };

  tm.mean.accuracy = mean_of(acc);
  tm.mean.nce = mean_of(nce_v);
  tm.mean.leep = mean_of(leep_v);
  tm.mean.logme = mean_of(logme_v);
  tm.epsilon_measured = mean_of(eps_v);
  tm.std_error.accuracy = stderr_of(acc, tm.mean.accuracy);
  tm.std_error.nce = stderr_of(nce_v, tm.mean.nce);
  tm.std_error.leep = stderr_of(leep_v, tm.mean.leep);
  tm.std_error.logme = stderr_of(logme_v, tm.mean.logme);
  tm.epsilon_measured_std_error = stderr_of(eps_v, tm.epsilon_measured);
  for (const auto& o : outcomes) tm.logme_saturated = tm.logme_saturated || o.logme_saturated;
  return tm;
}

void validate_config(const WhiteningConfig& config) {
  if (config.iterations < 1)
    throw ValidationError("whitening: iterations must be >= 1");
  if (!config.zero_noise && !(config.epsilon > 0.0 && config.epsilon < 1.0))
    throw ValidationError("whitening: epsilon must lie in (0,1)");
}

}  // namespace

TargetMetrics target_metric_estimate(const std::vector<int>& labels, int n_classes,
                                     const WhiteningConfig& config, int jobs) {
  validate_config(config);
  // resolve sigma up front so parameter errors surface before the parallel region
  if (!config.zero_noise)
    sigma_for_epsilon(config.epsilon, n_classes, resolve_gamma(config, n_classes));

  const int n = config.iterations;
  std::vector<IterationOutcome> outcomes(n);
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  bool failed = false;
  std::string error;

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int it = 0; it < n; ++it) {
    try {
      outcomes[it] = run_iteration(labels, n_classes, config, it);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        error = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error("target_metric_estimate: " + error);
  return aggregate(outcomes, config, n_classes, labels);
}

TargetMetrics target_metric_estimate_serial(const std::vector<int>& labels,
                                            int n_classes,
                                            const WhiteningConfig& config) {
  validate_config(config);
  std::vector<IterationOutcome> outcomes(config.iterations);
  for (int it = 0; it < config.iterations; ++it)
    outcomes[it] = run_iteration(labels, n_classes, config, it);
  return aggregate(outcomes, config, n_classes, labels);
}

double residual(double epsilon, double epsilon_hat) {
  if (epsilon == 0.0) throw ValidationError("residual: epsilon must be nonzero");
  return (epsilon - epsilon_hat) / epsilon;
}

}  // namespace dataneeds::whitening

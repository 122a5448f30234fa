#pragma once

#include <cstdint>
#include <vector>

#include "dataneeds/metrics.hpp"
#include "dataneeds/rng.hpp"

namespace dataneeds::whitening {

struct WhiteningConfig {
  double gamma = 0.0;      // smoothing factor; <= 0 selects default_gamma(C)
  double epsilon = 1e-5;   // target accuracy degradation
  int iterations = 1000;   // Monte Carlo repeats
  std::uint64_t seed = 0;
  bool zero_noise = false;  // test bypass: skip the Gaussian noise entirely
};

// Near-perfect reference metric values, averaged over the Monte Carlo
// iterations, used as inversion targets for the log-linear fits.
struct TargetMetrics {
  metrics::MetricVector mean;
  metrics::MetricVector std_error;
  double epsilon_measured = 0.0;  // mean per-iteration argmax flip rate
  double epsilon_measured_std_error = 0.0;
  int iterations = 0;
  double gamma = 0.0;  // resolved values actually used
  double sigma = 0.0;
  bool logme_saturated = false;
};

// Smallest smoothing factor that provably changes every entry of a one-hot
// row in 64-bit arithmetic. 2^-48 for all practical class counts.
double default_gamma(int n_classes);

// l~ = l - gamma*(l - 1/C), elementwise on one-hot rows.
std::vector<double> smooth_labels(const std::vector<double>& one_hot, int n_classes,
                                  double gamma);

// Elementwise log-odds; every entry must lie strictly inside (0,1).
std::vector<double> logit_transform(const std::vector<double>& p);

// Inverse error function: rational approximation (Acklam's inverse-normal
// coefficients) refined by one Newton step against std::erf/std::erfc.
double erf_inv(double p);

// Noise level that degrades argmax accuracy by epsilon for the given class
// count and smoothing factor. Throws when epsilon is at or beyond the level
// where the required noise is unbounded.
double sigma_for_epsilon(double epsilon, int n_classes, double gamma);

// One-hot -> smooth -> logit -> +N(0, sigma^2) -> logistic -> row-normalize.
metrics::PredictionSet whiten(const std::vector<int>& labels, int n_classes,
                              const WhiteningConfig& config, RandomStream& rng);

// Runs whiten() `iterations` times on per-iteration derived streams and
// aggregates in iteration-index order, so the result is independent of the
// thread count. jobs <= 0 uses all available threads.
TargetMetrics target_metric_estimate(const std::vector<int>& labels, int n_classes,
                                     const WhiteningConfig& config, int jobs = 0);

// Plain-loop reference implementation; must match target_metric_estimate
// bit-for-bit.
TargetMetrics target_metric_estimate_serial(const std::vector<int>& labels,
                                            int n_classes,
                                            const WhiteningConfig& config);

// (epsilon - epsilon_hat) / epsilon
double residual(double epsilon, double epsilon_hat);

}  // namespace dataneeds::whitening

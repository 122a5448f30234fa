#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dataneeds/metrics.hpp"
#include "dataneeds/whitening.hpp"

namespace dataneeds::extrapolate {

enum class Metric { kAccuracy = 0, kNce = 1, kLeep = 2, kLogme = 3 };
inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::kAccuracy, Metric::kNce,
                                                      Metric::kLeep, Metric::kLogme};
const char* metric_name(Metric m);

struct SweepPoint {
  double quantity = 0.0;  // observations per class used for training
  metrics::MetricVector values;
};

struct QuantitySweep {
  std::vector<SweepPoint> points;
  std::string dataset_id;
  std::string problem_id;

  std::vector<double> quantities() const;
  std::vector<double> metric_values(Metric m) const;
  // at least 3 distinct positive quantities
  void validate() const;
};

struct LogLinearFit {
  double slope = 0.0;      // per decade of quantity
  double intercept = 0.0;  // value at quantity 1
  double gof = 0.0;        // NRWMSE against the fitted data
  Metric metric = Metric::kAccuracy;
  int n_points = 0;
  double min_quantity = 0.0;  // smallest quantity seen by the fit

  double predict(double quantity) const;
};

// Normalized per-point weights: three log-spaced bins between min and max,
// the middle bin carrying one third the edge weight. Bins are half-open from
// below; the maximum closes the top bin. Always sums to 1.
std::vector<double> bin_weights(const std::vector<double>& quantities);

// Ordinary least squares of values against log10(quantity); the gof field is
// filled in via gof_nrwmse.
LogLinearFit fit_loglinear(const std::vector<double>& quantities,
                           const std::vector<double>& values, Metric metric);

// sqrt( sum_i w_i * (fit(q_i) - v_i)^2 / Var(v) ), sample variance.
double gof_nrwmse(const LogLinearFit& fit, const std::vector<double>& quantities,
                  const std::vector<double>& values);

enum class InversionStatus {
  kOk,
  kUnreachable,  // flat fit with target above intercept, or overflow: +inf
  kAlreadyMet,   // flat fit with target at or below intercept, or underflow
};
const char* inversion_status_name(InversionStatus s);

struct Inversion {
  double quantity = 0.0;  // may be +inf
  InversionStatus status = InversionStatus::kOk;
};

// 10^((target - intercept)/slope). A fit with slope <= 1e-12 per decade is
// treated as flat: the quantity is +inf when the target sits above the
// intercept and the smallest quantity the fit saw (flagged) otherwise.
// Exponent over/underflow is flagged the same way.
Inversion invert_fit(const LogLinearFit& fit, double target_value);

// Geometric mean; +inf if either input is infinite.
double midpoint_estimate(double q_nce, double q_logme);

struct MetricPrediction {
  bool ok = false;
  std::string error;  // set when !ok
  LogLinearFit fit;
  double target = 0.0;
  Inversion inversion;
};

struct QuantityPrediction {
  std::array<MetricPrediction, 4> per_metric;  // indexed by Metric
  double lower_hint = 0.0;  // NCE-derived quantity
  double upper_hint = 0.0;  // LogME-derived quantity
  double midpoint = 0.0;    // geometric mean of the hints (NaN if a hint failed)
  whitening::TargetMetrics targets;
  Metric best_gof_metric = Metric::kAccuracy;
  bool has_best_gof = false;
  std::vector<std::string> warnings;

  const MetricPrediction& of(Metric m) const {
    return per_metric[static_cast<std::size_t>(m)];
  }
};

// Fits all four metrics against quantity, derives target values by label
// whitening over the evaluation labels, inverts each fit at its target, and
// combines the NCE/LogME pair into the midpoint estimate. Individual metric
// failures are recorded in the result rather than aborting the rest.
QuantityPrediction predict_requirements(const QuantitySweep& sweep,
                                        const std::vector<int>& labels, int n_classes,
                                        const whitening::WhiteningConfig& config,
                                        int jobs = 0);

struct CorrelationGate {
  double tau_nce = 0.0;
  double tau_leep = 0.0;
  double tau_logme = 0.0;
};

// Weighted Kendall's tau between accuracy and each metric across the sweep.
CorrelationGate correlation_gate(const QuantitySweep& sweep);

}  // namespace dataneeds::extrapolate

#include "dataneeds/extrapolate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "dataneeds/errors.hpp"

namespace dataneeds::extrapolate {

namespace {

constexpr double kFlatSlope = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double metric_of(const metrics::MetricVector& v, Metric m) {
  switch (m) {
    case Metric::kAccuracy: return v.accuracy;
    case Metric::kNce: return v.nce;
    case Metric::kLeep: return v.leep;
    case Metric::kLogme: return v.logme;
  }
  return 0.0;
}

std::size_t count_distinct(const std::vector<double>& q) {
  return std::set<double>(q.begin(), q.end()).size();
}

}  // namespace

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::kAccuracy: return "accuracy";
    case Metric::kNce: return "nce";
    case Metric::kLeep: return "leep";
    case Metric::kLogme: return "logme";
  }
  return "?";
}

const char* inversion_status_name(InversionStatus s) {
  switch (s) {
    case InversionStatus::kOk: return "ok";
    case InversionStatus::kUnreachable: return "unreachable";
    case InversionStatus::kAlreadyMet: return "already_met";
  }
  return "?";
}

std::vector<double> QuantitySweep::quantities() const {
  std::vector<double> q;
  q.reserve(points.size());
  for (const auto& p : points) q.push_back(p.quantity);
  return q;
}

std::vector<double> QuantitySweep::metric_values(Metric m) const {
  std::vector<double> v;
  v.reserve(points.size());
  for (const auto& p : points) v.push_back(metric_of(p.values, m));
  return v;
}

void QuantitySweep::validate() const {
  for (const auto& p : points)
    if (!(p.quantity > 0.0))
      throw ValidationError("QuantitySweep: quantities must be positive");
  if (count_distinct(quantities()) < 3)
    throw ValidationError("QuantitySweep: needs at least 3 distinct quantities");
}

double LogLinearFit::predict(double quantity) const {
  return slope * std::log10(quantity) + intercept;
}

std::vector<double> bin_weights(const std::vector<double>& quantities) {
  const std::size_t n = quantities.size();
  if (n < 2) throw ValidationError("bin_weights: needs at least 2 quantities");
  for (double q : quantities)
    if (!(q > 0.0)) throw ValidationError("bin_weights: quantities must be positive");
  const auto [mn_it, mx_it] = std::minmax_element(quantities.begin(), quantities.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mn == mx) throw ValidationError("bin_weights: all quantities equal");

  const double lo = std::log10(mn), hi = std::log10(mx);
  const double e1 = lo + (hi - lo) / 3.0;
  const double e2 = lo + 2.0 * (hi - lo) / 3.0;

  // [e0,e1), [e1,e2), [e2,e3]; the max closes the top bin
  std::vector<int> bin(n);
  std::array<std::size_t, 3> occupancy = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double lq = std::log10(quantities[i]);
    int b;
    if (quantities[i] == mx)
      b = 2;
    else if (lq < e1)
      b = 0;
    else if (lq < e2)
      b = 1;
    else
      b = 2;
    bin[i] = b;
    ++occupancy[b];
  }

  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double occ = static_cast<double>(occupancy[bin[i]]);
    const double raw = bin[i] == 1 ? n / (3.0 * occ) : n / occ;
    w[i] = raw;
    total += raw;
  }
  for (double& v : w) v /= total;
  return w;
}

LogLinearFit fit_loglinear(const std::vector<double>& quantities,
                           const std::vector<double>& values, Metric metric) {
  const std::size_t n = quantities.size();
  if (n != values.size()) throw ValidationError("fit_loglinear: length mismatch");
  if (n < 3) throw ValidationError("fit_loglinear: needs at least 3 points");
  if (count_distinct(quantities) < 2)
    throw ValidationError("fit_loglinear: degenerate design, all quantities equal");

  double mx = 0.0, mv = 0.0;
  std::vector<double> lx(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(quantities[i] > 0.0))
      throw ValidationError("fit_loglinear: quantities must be positive");
    lx[i] = std::log10(quantities[i]);
    mx += lx[i];
    mv += values[i];
  }
  mx /= n;
  mv /= n;
  double sxx = 0.0, sxv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxv += (lx[i] - mx) * (values[i] - mv);
  }

  LogLinearFit fit;
  fit.slope = sxv / sxx;
  fit.intercept = mv - fit.slope * mx;
  fit.metric = metric;
  fit.n_points = static_cast<int>(n);
  fit.min_quantity = *std::min_element(quantities.begin(), quantities.end());
  fit.gof = gof_nrwmse(fit, quantities, values);
  return fit;
}

double gof_nrwmse(const LogLinearFit& fit, const std::vector<double>& quantities,
                  const std::vector<double>& values) {
  const std::size_t n = quantities.size();
  if (n != values.size()) throw ValidationError("gof_nrwmse: length mismatch");
  const std::vector<double> w = bin_weights(quantities);

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n - 1);
  if (var == 0.0) throw ValidationError("gof_nrwmse: values have zero variance");

  double wmse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = fit.predict(quantities[i]) - values[i];
    wmse += w[i] * r * r;
  }
  return std::sqrt(wmse / var);
}

Inversion invert_fit(const LogLinearFit& fit, double target_value) {
  if (!std::isfinite(fit.slope) || !std::isfinite(fit.intercept))
    throw ValidationError("invert_fit: fit is not finite");
  if (fit.slope <= kFlatSlope) {
    if (target_value > fit.intercept) return {kInf, InversionStatus::kUnreachable};
    return {fit.min_quantity, InversionStatus::kAlreadyMet};
  }
  const double exponent = (target_value - fit.intercept) / fit.slope;
  if (exponent > 308.25) return {kInf, InversionStatus::kUnreachable};
  if (exponent < -308.25) return {fit.min_quantity, InversionStatus::kAlreadyMet};
  return {std::pow(10.0, exponent), InversionStatus::kOk};
}

double midpoint_estimate(double q_nce, double q_logme) {
  if (std::isinf(q_nce) || std::isinf(q_logme)) return kInf;
  if (!(q_nce > 0.0) || !(q_logme > 0.0))
    throw ValidationError("midpoint_estimate: inputs must be positive");
  return std::pow(10.0, 0.5 * (std::log10(q_nce) + std::log10(q_logme)));
}

QuantityPrediction predict_requirements(const QuantitySweep& sweep,
                                        const std::vector<int>& labels, int n_classes,
                                        const whitening::WhiteningConfig& config,
                                        int jobs) {
  sweep.validate();
  QuantityPrediction out;
  out.targets = whitening::target_metric_estimate(labels, n_classes, config, jobs);

  const std::vector<double> q = sweep.quantities();
  for (Metric m : kAllMetrics) {
    MetricPrediction& mp = out.per_metric[static_cast<std::size_t>(m)];
    mp.target = metric_of(out.targets.mean, m);
    try {
      mp.fit = fit_loglinear(q, sweep.metric_values(m), m);
      mp.inversion = invert_fit(mp.fit, mp.target);
      mp.ok = true;
      if (mp.inversion.status != InversionStatus::kOk)
        out.warnings.push_back(std::string(metric_name(m)) + ": non-informative fit (" +
                               inversion_status_name(mp.inversion.status) + ")");
    } catch (const std::exception& e) {
      mp.ok = false;
      mp.error = e.what();
      out.warnings.push_back(std::string(metric_name(m)) + ": " + e.what());
    }
  }

  const MetricPrediction& nce_p = out.of(Metric::kNce);
  const MetricPrediction& logme_p = out.of(Metric::kLogme);
  out.lower_hint = nce_p.ok ? nce_p.inversion.quantity
                            : std::numeric_limits<double>::quiet_NaN();
  out.upper_hint = logme_p.ok ? logme_p.inversion.quantity
                              : std::numeric_limits<double>::quiet_NaN();
  if (nce_p.ok && logme_p.ok)
    out.midpoint = midpoint_estimate(out.lower_hint, out.upper_hint);
  else
    out.midpoint = std::numeric_limits<double>::quiet_NaN();

  double best = std::numeric_limits<double>::infinity();
  for (Metric m : kAllMetrics) {
    const MetricPrediction& mp = out.of(m);
    if (mp.ok && mp.fit.gof < best) {
      best = mp.fit.gof;
      out.best_gof_metric = m;
      out.has_best_gof = true;
    }
  }
  return out;
}

CorrelationGate correlation_gate(const QuantitySweep& sweep) {
  if (sweep.points.size() < 3)
    throw ValidationError("correlation_gate: needs at least 3 points");
  const std::vector<double> acc = sweep.metric_values(Metric::kAccuracy);
  CorrelationGate g;
  g.tau_nce = metrics::weighted_kendall_tau(acc, sweep.metric_values(Metric::kNce));
  g.tau_leep = metrics::weighted_kendall_tau(acc, sweep.metric_values(Metric::kLeep));
  g.tau_logme = metrics::weighted_kendall_tau(acc, sweep.metric_values(Metric::kLogme));
  return g;
}

}  // namespace dataneeds::extrapolate

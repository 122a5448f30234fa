#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dataneeds/errors.hpp"
#include "dataneeds/extrapolate.hpp"
#include "dataneeds/rng.hpp"

using namespace dataneeds;
using extrapolate::Metric;

namespace {

// independent transcription of the GoF formula, own bin-weight code
double nrwmse_oracle(double slope, double intercept, const std::vector<double>& q,
                     const std::vector<double>& v) {
  const std::size_t n = q.size();
  double lo = std::log10(q[0]), hi = std::log10(q[0]);
  for (double x : q) {
    lo = std::min(lo, std::log10(x));
    hi = std::max(hi, std::log10(x));
  }
  const double e1 = lo + (hi - lo) / 3.0, e2 = lo + 2.0 * (hi - lo) / 3.0;
  double qmax = q[0];
  for (double x : q) qmax = std::max(qmax, x);
  std::vector<int> bin(n);
  double occ[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double l = std::log10(q[i]);
    bin[i] = q[i] == qmax ? 2 : (l < e1 ? 0 : (l < e2 ? 1 : 2));
    occ[bin[i]] += 1.0;
  }
  std::vector<double> w(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = bin[i] == 1 ? n / (3.0 * occ[1]) : n / occ[bin[i]];
    wsum += w[i];
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= (n - 1);
  double wmse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = slope * std::log10(q[i]) + intercept - v[i];
    wmse += (w[i] / wsum) * r * r;
  }
  return std::sqrt(wmse / var);
}

extrapolate::QuantitySweep exact_line_sweep() {
  // all four metrics on exact lines vs log10 q
  extrapolate::QuantitySweep sweep;
  for (double q : {100.0, 1000.0, 10000.0, 100000.0}) {
    extrapolate::SweepPoint p;
    p.quantity = q;
    const double lq = std::log10(q);
    p.values.accuracy = 0.1 * lq + 0.2;
    p.values.nce = 0.3 * lq - 2.0;
    p.values.leep = 0.25 * lq - 1.9;
    p.values.logme = 0.05 * lq - 0.5;
    sweep.points.push_back(p);
  }
  return sweep;
}

}  // namespace

TEST_CASE("bin_weights: equal occupancy gives the 1/7-1/21-1/7 pattern") {
  const std::vector<double> q = {1, 2, 5, 10, 20, 50, 100, 200, 1000};
  const std::vector<double> w = extrapolate::bin_weights(q);
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(1.0 / 7).epsilon(1e-12));
  for (int i = 3; i < 6; ++i) CHECK(w[i] == doctest::Approx(1.0 / 21).epsilon(1e-12));
  for (int i = 6; i < 9; ++i) CHECK(w[i] == doctest::Approx(1.0 / 7).epsilon(1e-12));
  for (double v : w) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bin_weights: empty middle bin renormalizes to the outer points") {
  const std::vector<double> w = extrapolate::bin_weights({10, 1000});
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bin_weights: always a probability vector") {
  RandomStream rng(3);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + rng.uniform_int(20);
    std::vector<double> q(n);
    for (double& v : q) v = std::pow(10.0, rng.uniform(0.0, 6.0));
    q[0] = 1.0;
    q[1] = 2.0 + rng.uniform() * 1e6;  // guarantee two distinct values
    const std::vector<double> w = extrapolate::bin_weights(q);
    double sum = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS((void)extrapolate::bin_weights({5, 5, 5}), ValidationError);
  CHECK_THROWS_AS((void)extrapolate::bin_weights({5}), ValidationError);
}

TEST_CASE("fit_loglinear recovers an exact line") {
  const std::vector<double> q = {10, 100, 1000, 10000};
  std::vector<double> v;
  for (double x : q) v.push_back(0.1 * std::log10(x) - 1.5);
  const extrapolate::LogLinearFit fit =
      extrapolate::fit_loglinear(q, v, Metric::kAccuracy);
  CHECK(fit.slope == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(fit.gof <= 1e-12);
  CHECK(fit.n_points == 4);
  CHECK(fit.min_quantity == 10);
}

TEST_CASE("fit_loglinear: determinism and noisy slope recovery") {
  RandomStream rng(10);
  std::vector<double> q, v;
  for (int i = 0; i < 20; ++i) {
    q.push_back(std::pow(10.0, 1.0 + 0.2 * i));
    v.push_back(0.07 * std::log10(q.back()) + 0.3 + 1e-3 * rng.normal());
  }
  const auto a = extrapolate::fit_loglinear(q, v, Metric::kNce);
  const auto b = extrapolate::fit_loglinear(q, v, Metric::kNce);
  CHECK(a.slope == b.slope);
  CHECK(a.intercept == b.intercept);
  CHECK(std::abs(a.slope - 0.07) < 1e-2);

  CHECK_THROWS_AS((void)extrapolate::fit_loglinear({1, 2}, {1, 2}, Metric::kNce),
                  ValidationError);
  CHECK_THROWS_AS((void)extrapolate::fit_loglinear({7, 7, 7}, {1, 2, 3}, Metric::kNce),
                  ValidationError);
}

TEST_CASE("gof_nrwmse: exact fit, constant residual, transcription oracle") {
  const std::vector<double> q = {10, 100, 1000, 10000, 100000};
  std::vector<double> v;
  for (double x : q) v.push_back(0.2 * std::log10(x) + 1.0);
  extrapolate::LogLinearFit fit = extrapolate::fit_loglinear(q, v, Metric::kAccuracy);
  CHECK(extrapolate::gof_nrwmse(fit, q, v) <= 1e-12);

  // shift all values by c: residual is constantly c, so NRWMSE = |c|/sd(v)
  std::vector<double> shifted = v;
  for (double& x : shifted) x -= 0.37;
  double mean = 0.0;
  for (double x : shifted) mean += x;
  mean /= shifted.size();
  double var = 0.0;
  for (double x : shifted) var += (x - mean) * (x - mean);
  var /= (shifted.size() - 1);
  CHECK(extrapolate::gof_nrwmse(fit, q, shifted) ==
        doctest::Approx(0.37 / std::sqrt(var)).epsilon(1e-12));

  // random instances against the independently coded formula
  RandomStream rng(11);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> rq, rv;
    const int n = 5 + static_cast<int>(rng.uniform_int(15));
    for (int i = 0; i < n; ++i) {
      rq.push_back(std::pow(10.0, rng.uniform(0.5, 5.5)));
      rv.push_back(rng.normal());
    }
    rq[0] = 3.0;
    rq[1] = 30000.0;
    const auto rfit = extrapolate::fit_loglinear(rq, rv, Metric::kLeep);
    CHECK(extrapolate::gof_nrwmse(rfit, rq, rv) ==
          doctest::Approx(nrwmse_oracle(rfit.slope, rfit.intercept, rq, rv))
              .epsilon(1e-12));
  }

  CHECK_THROWS_AS((void)extrapolate::gof_nrwmse(fit, q, {1, 1, 1, 1, 1}),
                  ValidationError);
}

TEST_CASE("gof_nrwmse is invariant to joint affine rescaling") {
  RandomStream rng(12);
  std::vector<double> q, v;
  for (int i = 0; i < 12; ++i) {
    q.push_back(std::pow(10.0, rng.uniform(1.0, 6.0)));
    v.push_back(rng.normal());
  }
  const auto fit = extrapolate::fit_loglinear(q, v, Metric::kLogme);
  const double base = extrapolate::gof_nrwmse(fit, q, v);
  const double a = -2.5, b = 0.7;
  std::vector<double> v2 = v;
  for (double& x : v2) x = a * x + b;
  extrapolate::LogLinearFit fit2 = fit;
  fit2.slope = a * fit.slope;
  fit2.intercept = a * fit.intercept + b;
  CHECK(extrapolate::gof_nrwmse(fit2, q, v2) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("invert_fit: closed form, paper anchor, flat conventions") {
  // line through (1e6, 0.81) and (5.25e6, 0.90), inverted at 0.90
  const double lq1 = std::log10(1e6), lq2 = std::log10(5.25e6);
  extrapolate::LogLinearFit fit;
  fit.slope = (0.90 - 0.81) / (lq2 - lq1);
  fit.intercept = 0.81 - fit.slope * lq1;
  fit.min_quantity = 1e6;
  const auto anchor = extrapolate::invert_fit(fit, 0.90);
  CHECK(anchor.status == extrapolate::InversionStatus::kOk);
  CHECK(std::abs(anchor.quantity / 5.25e6 - 1.0) < 1e-6);

  fit.slope = 0.1;
  fit.intercept = -1.5;
  const auto closed = extrapolate::invert_fit(fit, -0.5);
  CHECK(closed.quantity == doctest::Approx(1e10).epsilon(1e-9));

  fit.slope = 0.0;
  fit.intercept = 0.2;
  fit.min_quantity = 32;
  const auto flat_above = extrapolate::invert_fit(fit, 0.9);
  CHECK(std::isinf(flat_above.quantity));
  CHECK(flat_above.status == extrapolate::InversionStatus::kUnreachable);
  const auto flat_below = extrapolate::invert_fit(fit, 0.1);
  CHECK(flat_below.status == extrapolate::InversionStatus::kAlreadyMet);
  CHECK(flat_below.quantity == 32);
}

TEST_CASE("invert_fit round trip across magnitudes") {
  RandomStream rng(13);
  for (int t = 0; t < 50; ++t) {
    extrapolate::LogLinearFit fit;
    fit.slope = rng.uniform(1e-6, 2.0);
    fit.intercept = rng.normal();
    const double q = std::pow(10.0, rng.uniform(1.0, 12.0));
    const auto inv = extrapolate::invert_fit(fit, fit.predict(q));
    CHECK(std::abs(inv.quantity / q - 1.0) < 1e-9);
  }
}

TEST_CASE("midpoint_estimate: geometric mean with infinity propagation") {
  CHECK(extrapolate::midpoint_estimate(1e6, 1e8) == doctest::Approx(1e7).epsilon(1e-12));
  CHECK(extrapolate::midpoint_estimate(5e6, 2e7) == doctest::Approx(1e7).epsilon(1e-12));
  CHECK(extrapolate::midpoint_estimate(123.0, 123.0) ==
        doctest::Approx(123.0).epsilon(1e-12));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(std::isinf(extrapolate::midpoint_estimate(1e6, inf)));
  CHECK(std::isinf(extrapolate::midpoint_estimate(inf, 1e6)));
  CHECK_THROWS_AS((void)extrapolate::midpoint_estimate(-1.0, 10.0), ValidationError);

  RandomStream rng(14);
  for (int t = 0; t < 30; ++t) {
    const double a = std::pow(10.0, rng.uniform(0.0, 10.0));
    const double b = std::pow(10.0, rng.uniform(0.0, 10.0));
    const double m1 = extrapolate::midpoint_estimate(a, b);
    const double m2 = extrapolate::midpoint_estimate(b, a);
    CHECK(m1 == m2);
    CHECK(m1 >= std::min(a, b) * (1 - 1e-12));
    CHECK(m1 <= std::max(a, b) * (1 + 1e-12));
  }
}

TEST_CASE("predict_requirements on exact-line sweeps hits closed-form inversions") {
  extrapolate::QuantitySweep sweep = exact_line_sweep();
  whitening::WhiteningConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.iterations = 5;
  cfg.seed = 21;
  std::vector<int> labels(100);
  for (int i = 0; i < 100; ++i) labels[i] = i % 5;

  const extrapolate::QuantityPrediction pred =
      extrapolate::predict_requirements(sweep, labels, 5, cfg, 1);
  for (Metric m : extrapolate::kAllMetrics) {
    const auto& mp = pred.of(m);
    REQUIRE(mp.ok);
    const double expected =
        std::pow(10.0, (mp.target - mp.fit.intercept) / mp.fit.slope);
    CHECK(std::abs(mp.inversion.quantity / expected - 1.0) < 1e-9);
  }
  CHECK(pred.lower_hint == pred.of(Metric::kNce).inversion.quantity);
  CHECK(pred.upper_hint == pred.of(Metric::kLogme).inversion.quantity);
  const double gm = extrapolate::midpoint_estimate(pred.lower_hint, pred.upper_hint);
  CHECK(pred.midpoint == gm);
  CHECK(pred.has_best_gof);

  // determinism for a fixed whitening seed
  const extrapolate::QuantityPrediction again =
      extrapolate::predict_requirements(sweep, labels, 5, cfg, 1);
  CHECK(again.midpoint == pred.midpoint);
  CHECK(again.of(Metric::kNce).inversion.quantity ==
        pred.of(Metric::kNce).inversion.quantity);
}

TEST_CASE("predict_requirements: flat accuracy goes to infinity, others survive") {
  extrapolate::QuantitySweep sweep = exact_line_sweep();
  // accuracy independent of quantity, with jitter so the variance is nonzero
  for (std::size_t i = 0; i < sweep.points.size(); ++i)
    sweep.points[i].values.accuracy = 0.2 + (i % 2 ? 1e-9 : -1e-9);
  whitening::WhiteningConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.iterations = 3;
  cfg.seed = 22;
  std::vector<int> labels(60);
  for (int i = 0; i < 60; ++i) labels[i] = i % 5;

  const extrapolate::QuantityPrediction pred =
      extrapolate::predict_requirements(sweep, labels, 5, cfg, 1);
  REQUIRE(pred.of(Metric::kAccuracy).ok);
  CHECK(std::isinf(pred.of(Metric::kAccuracy).inversion.quantity));
  CHECK(pred.of(Metric::kNce).ok);
  CHECK(std::isfinite(pred.of(Metric::kNce).inversion.quantity));
  CHECK(!pred.warnings.empty());
}

TEST_CASE("correlation_gate: monotone and reversed metrics") {
  extrapolate::QuantitySweep sweep;
  for (int i = 0; i < 6; ++i) {
    extrapolate::SweepPoint p;
    p.quantity = std::pow(2.0, 5 + i);
    p.values.accuracy = 0.3 + 0.1 * i;
    p.values.nce = -2.0 + 0.2 * i;     // increases with accuracy
    p.values.leep = -3.0 + 0.25 * i;   // increases with accuracy
    p.values.logme = -p.values.accuracy;  // exactly reversed
    sweep.points.push_back(p);
  }
  const extrapolate::CorrelationGate g = extrapolate::correlation_gate(sweep);
  CHECK(g.tau_nce == 1.0);
  CHECK(g.tau_leep == 1.0);
  CHECK(g.tau_logme == -1.0);
}

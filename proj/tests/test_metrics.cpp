#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dataneeds/errors.hpp"
#include "dataneeds/metrics.hpp"
#include "dataneeds/rng.hpp"
#include "oracles.hpp"

using namespace dataneeds;
using metrics::PredictionSet;

namespace {

PredictionSet make(std::vector<std::vector<double>> rows, std::vector<int> labels) {
  PredictionSet ps;
  ps.n_classes = static_cast<int>(rows[0].size());
  ps.labels = std::move(labels);
  for (const auto& r : rows) ps.probs.insert(ps.probs.end(), r.begin(), r.end());
  return ps;
}

PredictionSet one_hot_from(const std::vector<int>& hard, const std::vector<int>& labels,
                           int c) {
  PredictionSet ps;
  ps.n_classes = c;
  ps.labels = labels;
  ps.probs.assign(hard.size() * c, 0.0);
  for (std::size_t i = 0; i < hard.size(); ++i) ps.probs[i * c + hard[i]] = 1.0;
  return ps;
}

}  // namespace

TEST_CASE("hard_labels: argmax with lowest-index ties") {
  CHECK(metrics::hard_labels(make({{0.9, 0.1}}, {0})) == std::vector<int>{0});
  CHECK(metrics::hard_labels(make({{0.5, 0.5}}, {0})) == std::vector<int>{0});
  CHECK(metrics::hard_labels(make({{0.1, 0.2, 0.7}, {0.6, 0.3, 0.1}}, {0, 0})) ==
        std::vector<int>{2, 0});
}

TEST_CASE("accuracy basics") {
  CHECK(metrics::accuracy(one_hot_from({0, 1, 2}, {0, 1, 2}, 3)) == 1.0);
  CHECK(metrics::accuracy(one_hot_from({0, 0, 0, 0}, {0, 0, 1, 1}, 2)) == 0.5);
  CHECK(metrics::accuracy(one_hot_from({0, 1, 1, 0}, {0, 1, 1, 1}, 2)) == 0.75);
}

TEST_CASE("nce hand-enumerated values") {
  // perfect predictions: deterministic mapping per bin
  CHECK(metrics::nce(one_hot_from({0, 1, 0, 1}, {0, 1, 0, 1}, 2)) == 0.0);
  // each bin sees a 50/50 truth split
  CHECK(metrics::nce(one_hot_from({0, 0, 1, 1}, {0, 1, 0, 1}, 2)) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));
  // constant predictor, uniform truth
  CHECK(metrics::nce(one_hot_from({0, 0, 0, 0}, {0, 1, 0, 1}, 2)) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("leep hand values and degenerate error") {
  CHECK(metrics::leep(one_hot_from({0, 1, 2}, {0, 1, 2}, 3)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  const PredictionSet uniform =
      make({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}, {0, 1, 0, 1});
  CHECK(metrics::leep(uniform) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("nce/leep match the transcription oracles on random instances") {
  RandomStream rng(123);
  for (int t = 0; t < 50; ++t) {
    const int n = 5 + static_cast<int>(rng.uniform_int(46));
    const int c = 2 + static_cast<int>(rng.uniform_int(4));
    const PredictionSet ps = oracles::random_instance(n, c, rng);
    CHECK(metrics::nce(ps) == doctest::Approx(oracles::nce_oracle(ps)).epsilon(1e-12));
    CHECK(metrics::leep(ps) == doctest::Approx(oracles::leep_oracle(ps)).epsilon(1e-12));
  }
}

TEST_CASE("leep equals per-observation log conditional on one-hot inputs") {
  RandomStream rng(7);
  for (int t = 0; t < 10; ++t) {
    const int n = 20, c = 3;
    std::vector<int> hard(n), labels(n);
    for (int i = 0; i < n; ++i) {
      hard[i] = static_cast<int>(rng.uniform_int(c));
      labels[i] = static_cast<int>(rng.uniform_int(c));
    }
    const PredictionSet ps = one_hot_from(hard, labels, c);
    // NCE-style average log conditional per observation
    std::vector<std::vector<double>> joint(c, std::vector<double>(c, 0.0));
    std::vector<double> marg(c, 0.0);
    for (int i = 0; i < n; ++i) {
      joint[hard[i]][labels[i]] += 1.0;
      marg[hard[i]] += 1.0;
    }
    double expected = 0.0;
    for (int i = 0; i < n; ++i)
      expected += std::log(joint[hard[i]][labels[i]] / marg[hard[i]]);
    expected /= n;
    CHECK(metrics::leep(ps) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(metrics::leep(ps) <= 1e-15);
    CHECK(metrics::nce(ps) <= 1e-15);
  }
}

TEST_CASE("permutation invariance and class-relabeling equivariance") {
  RandomStream rng(99);
  const PredictionSet ps = oracles::random_instance(40, 4, rng);
  const metrics::MetricVector base = metrics::compute_all(ps);

  // shuffle observation order
  PredictionSet shuffled = ps;
  std::vector<std::size_t> perm(ps.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = perm.size() - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.labels[i] = ps.labels[perm[i]];
    for (int k = 0; k < ps.n_classes; ++k)
      shuffled.prob(i, k) = ps.prob(perm[i], k);
  }
  metrics::MetricVector mv = metrics::compute_all(shuffled);
  CHECK(mv.accuracy == doctest::Approx(base.accuracy).epsilon(1e-12));
  CHECK(mv.nce == doctest::Approx(base.nce).epsilon(1e-12));
  CHECK(mv.leep == doctest::Approx(base.leep).epsilon(1e-12));
  CHECK(mv.logme == doctest::Approx(base.logme).epsilon(1e-12));

  // permute class indices in labels and probability columns together
  const std::vector<int> cperm = {2, 0, 3, 1};
  PredictionSet relabeled = ps;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    relabeled.labels[i] = cperm[ps.labels[i]];
    for (int k = 0; k < ps.n_classes; ++k) relabeled.prob(i, cperm[k]) = ps.prob(i, k);
  }
  mv = metrics::compute_all(relabeled);
  CHECK(mv.accuracy == doctest::Approx(base.accuracy).epsilon(1e-12));
  CHECK(mv.nce == doctest::Approx(base.nce).epsilon(1e-12));
  CHECK(mv.leep == doctest::Approx(base.leep).epsilon(1e-12));
  CHECK(mv.logme == doctest::Approx(base.logme).epsilon(1e-12));
}

TEST_CASE("logme agrees with the dense grid-search oracle") {
  RandomStream rng(2024);
  for (int t = 0; t < 5; ++t) {
    const int n = 20 + static_cast<int>(rng.uniform_int(11));
    const int c = 3;
    const PredictionSet ps = oracles::random_instance(n, c, rng);
    const metrics::LogMeResult res = metrics::logme(ps);
    double grid_total = 0.0;
    for (int k = 0; k < c; ++k) grid_total += oracles::logme_grid_oracle(ps, k, 201);
    const double grid_score = grid_total / (static_cast<double>(n) * c);
    CHECK(std::abs(res.score - grid_score) <=
          1e-3 * std::max(1.0, std::abs(grid_score)));
  }
}

TEST_CASE("logme fixed-point self-consistency at convergence") {
  RandomStream rng(31415);
  const PredictionSet ps = oracles::random_instance(40, 3, rng);
  const metrics::LogMeResult res = metrics::logme(ps);
  // reconstruct residuals from the returned (alpha, beta)
  for (int k = 0; k < ps.n_classes; ++k) {
    const metrics::EvidenceParams& ep = res.per_class[k];
    REQUIRE(!ep.saturated);
    CHECK(ep.iterations_used <= 100);
    Eigen::MatrixXd f(ps.size(), ps.n_classes);
    Eigen::VectorXd y(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (int j = 0; j < ps.n_classes; ++j) f(i, j) = ps.prob(i, j);
      y(i) = ps.labels[i] == k ? 1.0 : 0.0;
    }
    Eigen::MatrixXd a = ep.beta * (f.transpose() * f);
    a.diagonal().array() += ep.alpha;
    const Eigen::VectorXd m = ep.beta * a.llt().solve(f.transpose() * y);
    const double res_sq = (f * m - y).squaredNorm();
    const Eigen::VectorXd sv =
        Eigen::JacobiSVD<Eigen::MatrixXd>(f).singularValues();
    double gamma_eff = 0.0;
    for (int d = 0; d < sv.size(); ++d) {
      const double s2 = sv(d) * sv(d);
      gamma_eff += ep.beta * s2 / (ep.alpha + ep.beta * s2);
    }
    CHECK(std::abs(ep.alpha * m.squaredNorm() - gamma_eff) < 1e-4);
    CHECK(std::abs(ep.beta * res_sq - (ps.size() - gamma_eff)) < 1e-4);
  }
}

TEST_CASE("logme: duplicate observations reproduce the doubled-set computation") {
  RandomStream rng(555);
  const PredictionSet ps = oracles::random_instance(15, 3, rng);
  PredictionSet doubled;
  doubled.n_classes = ps.n_classes;
  for (int rep = 0; rep < 2; ++rep) {
    doubled.labels.insert(doubled.labels.end(), ps.labels.begin(), ps.labels.end());
    doubled.probs.insert(doubled.probs.end(), ps.probs.begin(), ps.probs.end());
  }
  const double once = metrics::logme(doubled).score;
  const double again = metrics::logme(doubled).score;
  CHECK(once == again);  // deterministic
}

TEST_CASE("logme saturates on perfectly separable one-hot features") {
  const PredictionSet ps = one_hot_from({0, 1, 2, 0, 1, 2}, {0, 1, 2, 0, 1, 2}, 3);
  const metrics::LogMeResult res = metrics::logme(ps);
  CHECK(res.saturated);
  CHECK(std::isfinite(res.score));
  bool any_capped = false;
  for (const auto& ep : res.per_class) any_capped = any_capped || ep.beta >= 1e12;
  CHECK(any_capped);
}

TEST_CASE("logme rejects non-finite features") {
  PredictionSet ps = make({{0.5, 0.5}}, {0});
  ps.probs[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)metrics::logme(ps), ValidationError);
}

TEST_CASE("weighted Kendall tau: exact extremes and oracle agreement") {
  const std::vector<double> inc = {1, 2, 3, 4};
  const std::vector<double> dec = {4, 3, 2, 1};
  CHECK(metrics::weighted_kendall_tau(inc, inc) == 1.0);
  CHECK(metrics::weighted_kendall_tau(inc, dec) == -1.0);

  RandomStream rng(17);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 3 + rng.uniform_int(10);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform();
      y[i] = rng.uniform();
    }
    CHECK(metrics::weighted_kendall_tau(x, y) ==
          doctest::Approx(oracles::kendall_oracle(x, y)).epsilon(1e-12));
  }
  // with ties
  const std::vector<double> tx = {1, 1, 2, 3, 3, 0};
  const std::vector<double> ty = {2, 2, 1, 5, 4, 4};
  CHECK(metrics::weighted_kendall_tau(tx, ty) ==
        doctest::Approx(oracles::kendall_oracle(tx, ty)).epsilon(1e-12));
}

TEST_CASE("weighted Kendall tau input validation") {
  const std::vector<double> a = {1, 2, 3};
  const std::vector<double> b = {1, 2};
  CHECK_THROWS_AS((void)metrics::weighted_kendall_tau(a, b), ValidationError);
  const std::vector<double> single = {1};
  CHECK_THROWS_AS((void)metrics::weighted_kendall_tau(single, single), ValidationError);
}

TEST_CASE("PredictionSet validation") {
  PredictionSet ps = make({{0.6, 0.4}, {0.2, 0.8}}, {0, 1});
  CHECK_NOTHROW(ps.validate());
  ps.probs[0] = 0.7;  // row no longer sums to 1
  CHECK_THROWS_AS(ps.validate(), ValidationError);
  ps = make({{0.6, 0.4}}, {2});
  CHECK_THROWS_AS(ps.validate(), ValidationError);
}

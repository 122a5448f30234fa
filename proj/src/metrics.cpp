#include "dataneeds/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dataneeds/errors.hpp"

namespace dataneeds::metrics {

namespace {

constexpr double kRowSumTolerance = 1e-9;

}  // namespace

void PredictionSet::validate() const {
  if (n_classes < 2) throw ValidationError("PredictionSet: n_classes must be >= 2");
  if (labels.empty()) throw ValidationError("PredictionSet: needs at least one observation");
  if (probs.size() != labels.size() * static_cast<std::size_t>(n_classes))
    throw ValidationError("PredictionSet: probs size does not match labels x n_classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes)
      throw ValidationError("PredictionSet: label out of range at row " + std::to_string(i));
    double sum = 0.0;
    for (int k = 0; k < n_classes; ++k) {
      const double p = prob(i, k);
      if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("PredictionSet: probability outside [0,1] at row " +
                              std::to_string(i));
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance)
      throw ValidationError("PredictionSet: row " + std::to_string(i) +
                            " sums to " + std::to_string(sum));
  }
}

std::vector<int> hard_labels(const PredictionSet& pred) {
  const std::size_t n = pred.size();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double best_p = pred.prob(i, 0);
    for (int k = 1; k < pred.n_classes; ++k) {
      const double p = pred.prob(i, k);
      if (p > best_p) {
        best_p = p;
        best = k;
      }
    }
    out[i] = best;
  }
  return out;
}

double accuracy(const PredictionSet& pred) {
  const std::vector<int> hard = hard_labels(pred);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < hard.size(); ++i)
    if (hard[i] == pred.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(hard.size());
}

double nce(const PredictionSet& pred) {
  const int c = pred.n_classes;
  const std::size_t n = pred.size();
  const std::vector<int> hard = hard_labels(pred);

  // joint[j][k]: count of (prediction j, truth k)
  std::vector<double> joint(static_cast<std::size_t>(c) * c, 0.0);
  std::vector<double> marginal(c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    joint[static_cast<std::size_t>(hard[i]) * c + pred.labels[i]] += 1.0;
    marginal[hard[i]] += 1.0;
  }

  double total = 0.0;
  for (int j = 0; j < c; ++j) {
    if (marginal[j] == 0.0) continue;  // empty prediction bin
    const double p_j = marginal[j] / static_cast<double>(n);
    double cond_entropy = 0.0;
    for (int k = 0; k < c; ++k) {
      const double p_kj = joint[static_cast<std::size_t>(j) * c + k] / marginal[j];
      if (p_kj > 0.0) cond_entropy += p_kj * std::log(p_kj);
    }
    total += p_j * cond_entropy;
  }
  return total;
}

double leep(const PredictionSet& pred) {
  const int c = pred.n_classes;
  const std::size_t n = pred.size();

  // joint[k][j] = (1/N) sum_i probs[i][j] * 1(labels[i]==k)
  std::vector<double> joint(static_cast<std::size_t>(c) * c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = pred.labels[i];
    for (int j = 0; j < c; ++j)
      joint[static_cast<std::size_t>(k) * c + j] += pred.prob(i, j);
  }
  for (double& v : joint) v /= static_cast<double>(n);

  // column-normalize over k to get cond[k][j] = P(k|j)
  std::vector<double> cond(static_cast<std::size_t>(c) * c, 0.0);
  for (int j = 0; j < c; ++j) {
    double col = 0.0;
    for (int k = 0; k < c; ++k) col += joint[static_cast<std::size_t>(k) * c + j];
    if (col > 0.0)
      for (int k = 0; k < c; ++k)
        cond[static_cast<std::size_t>(k) * c + j] =
            joint[static_cast<std::size_t>(k) * c + j] / col;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = pred.labels[i];
    double inner = 0.0;
    for (int j = 0; j < c; ++j)
      inner += pred.prob(i, j) * cond[static_cast<std::size_t>(k) * c + j];
    if (inner <= 0.0)
      throw ValidationError("leep: zero expected probability at row " + std::to_string(i));
    total += std::log(inner);
  }
  return total / static_cast<double>(n);
}

namespace {

// One-vs-rest evidence maximization in the singular basis of F.
EvidenceParams maximize_evidence(const Eigen::VectorXd& sv,   // singular values of F
                                 const Eigen::VectorXd& z,    // U^T y
                                 double y_sq,                 // ||y||^2
                                 std::size_t n_rows, const LogMeOptions& opts) {
  const int d = static_cast<int>(sv.size());
  const double n = static_cast<double>(n_rows);
  const double z_sq = z.squaredNorm();
  const Eigen::ArrayXd s2 = sv.array().square();
  const Eigen::ArrayXd z2 = z.array().square();

  double alpha = 1.0, beta = 1.0;
  double log_ev = -std::numeric_limits<double>::infinity();
  EvidenceParams out;

  auto evaluate = [&](double a, double b, double& m_sq, double& res_sq, double& gamma_eff) {
    const Eigen::ArrayXd denom = a + b * s2;
    m_sq = ((b * sv.array() * z.array()) / denom).square().sum();
    res_sq = ((a / denom).square() * z2).sum() + (y_sq - z_sq);
    gamma_eff = (b * s2 / denom).sum();
    return 0.5 * d * std::log(a) + 0.5 * n * std::log(b) -
           0.5 * n * std::log(2.0 * 3.14159265358979323846) - 0.5 * b * res_sq -
           0.5 * a * m_sq - 0.5 * denom.log().sum();
  };

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    double m_sq, res_sq, gamma_eff;
    const double l = evaluate(alpha, beta, m_sq, res_sq, gamma_eff);
    if (it > 0 && std::abs(l - log_ev) < opts.tolerance) {
      log_ev = l;
      break;
    }
    log_ev = l;
    alpha = gamma_eff / std::max(m_sq, 1e-300);
    beta = (n - gamma_eff) / std::max(res_sq, 1e-300);
    if (beta >= opts.beta_cap) {
      beta = opts.beta_cap;
      out.saturated = true;
    }
    if (alpha <= 0.0 || !std::isfinite(alpha)) alpha = 1e-300;
  }
  // recompute at the final (alpha, beta) so the reported evidence matches them
  double m_sq, res_sq, gamma_eff;
  out.log_evidence = evaluate(alpha, beta, m_sq, res_sq, gamma_eff);
  out.alpha = alpha;
  out.beta = beta;
  out.iterations_used = std::min(it + 1, opts.max_iterations);
  return out;
}

}  // namespace

LogMeResult logme(const PredictionSet& pred, const LogMeOptions& opts) {
  const int c = pred.n_classes;
  const std::size_t n = pred.size();
  for (double v : pred.probs)
    if (!std::isfinite(v)) throw ValidationError("logme: non-finite feature value");

  Eigen::MatrixXd f(n, c);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < c; ++k) f(static_cast<Eigen::Index>(i), k) = pred.prob(i, k);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(f, Eigen::ComputeThinU);
  const Eigen::VectorXd sv = svd.singularValues();
  const Eigen::MatrixXd& u = svd.matrixU();

  LogMeResult result;
  result.per_class.reserve(c);
  double total = 0.0;
  for (int k = 0; k < c; ++k) {
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i)
      y(static_cast<Eigen::Index>(i)) = pred.labels[i] == k ? 1.0 : 0.0;
    const Eigen::VectorXd z = u.transpose() * y;
    EvidenceParams ep = maximize_evidence(sv, z, y.squaredNorm(), n, opts);
    total += ep.log_evidence;
    result.saturated = result.saturated || ep.saturated;
    result.per_class.push_back(std::move(ep));
  }
  result.score = total / (static_cast<double>(n) * static_cast<double>(c));
  return result;
}

double weighted_kendall_tau(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw ValidationError("weighted_kendall_tau: length mismatch");
  if (n < 2) throw ValidationError("weighted_kendall_tau: needs at least 2 elements");

  // zero-based ranks by decreasing x, ties broken by decreasing y
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] > x[b];
    if (y[a] != y[b]) return y[a] > y[b];
    return a < b;
  });
  std::vector<double> weight(n);
  for (std::size_t r = 0; r < n; ++r) weight[order[r]] = 1.0 / static_cast<double>(r + 1);

  double numer = 0.0, denom = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = weight[i] + weight[j];
      const double sx = x[i] > x[j] ? 1.0 : (x[i] < x[j] ? -1.0 : 0.0);
      const double sy = y[i] > y[j] ? 1.0 : (y[i] < y[j] ? -1.0 : 0.0);
      numer += w * sx * sy;
      denom += w;
    }
  }
  return numer / denom;
}

MetricVector compute_all(const PredictionSet& pred, const LogMeOptions& opts) {
  MetricVector m;
  m.accuracy = accuracy(pred);
  m.nce = nce(pred);
  m.leep = leep(pred);
  m.logme = logme(pred, opts).score;
  return m;
}

}  // namespace dataneeds::metrics

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dataneeds::metrics {

// Per-observation class-probability rows plus the true labels. This is the
// common currency between the classifier, the whitening generator, and the
// metric functions below.
struct PredictionSet {
  std::vector<double> probs;  // row-major, size() == labels.size() * n_classes
  std::vector<int> labels;    // each in [0, n_classes)
  int n_classes = 0;

  std::size_t size() const { return labels.size(); }

  double prob(std::size_t i, int k) const {
    return probs[i * static_cast<std::size_t>(n_classes) + static_cast<std::size_t>(k)];
  }
  double& prob(std::size_t i, int k) {
    return probs[i * static_cast<std::size_t>(n_classes) + static_cast<std::size_t>(k)];
  }

  // Throws ValidationError unless rows sum to 1 within 1e-9, all entries lie
  // in [0,1], labels are in range, and there is at least one observation.
  void validate() const;
};

struct MetricVector {
  double accuracy = 0.0;
  double nce = 0.0;
  double leep = 0.0;
  double logme = 0.0;
};

// Evidence-maximization state for one one-vs-rest class of logme().
struct EvidenceParams {
  double alpha = 1.0;
  double beta = 1.0;
  double log_evidence = 0.0;
  int iterations_used = 0;
  bool saturated = false;  // beta hit the cap (separable / zero-residual data)
};

struct LogMeResult {
  double score = 0.0;  // (1/(N*C)) * sum of per-class log evidences
  std::vector<EvidenceParams> per_class;
  bool saturated = false;  // any class saturated
};

struct LogMeOptions {
  double tolerance = 1e-6;  // stop when successive log-evidence change is below
  int max_iterations = 100;
  double beta_cap = 1e12;
};

// Per-row argmax; ties resolve to the lowest class index.
std::vector<int> hard_labels(const PredictionSet& pred);

// Fraction of observations whose argmax equals the true label.
double accuracy(const PredictionSet& pred);

// Negative conditional entropy of the truth given the hard prediction,
// computed from the empirical joint/marginal tables. Natural log; always <= 0
// and 0 exactly when each prediction bin maps to a single truth class.
double nce(const PredictionSet& pred);

// Log expected empirical prediction: average log probability of the true
// label under the column-normalized empirical source->target conditional.
double leep(const PredictionSet& pred);

// Per-class Bayesian linear-regression log evidence, maximized over the
// precisions (alpha, beta) with the singular-value fixed point, averaged over
// classes and normalized by the observation count. Features are the
// probability rows themselves.
LogMeResult logme(const PredictionSet& pred, const LogMeOptions& opts = {});

// Weighted Kendall's tau with additive hyperbolic weights
// w_ij = 1/(r_i+1) + 1/(r_j+1), ranks by decreasing x (ties by decreasing y).
// Pairs tied in either vector contribute zero to the numerator but their
// weight still enters the denominator.
double weighted_kendall_tau(std::span<const double> x, std::span<const double> y);

MetricVector compute_all(const PredictionSet& pred, const LogMeOptions& opts = {});

}  // namespace dataneeds::metrics

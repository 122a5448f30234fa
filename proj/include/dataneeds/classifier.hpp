#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dataneeds/metrics.hpp"
#include "dataneeds/rfsignal.hpp"

namespace dataneeds::classifier {

// Fixed hand statistics over an IQ observation:
//   [0] mean |x|^2            [1] variance of |x|^2
//   [2] |E[x^2]|  [3] |E[x^4]|  [4] |E[x^6]|   (on unit-power samples)
//   [5] kurtosis of |x|       [6] spectral flatness
//   [7..14] max-normalized autocorrelation magnitudes at lags 1..8
inline constexpr int kFeatureDim = 15;
using FeatureVector = std::array<double, kFeatureDim>;

FeatureVector extract_features(const rfsignal::Observation& obs);

struct FeatureSet {
  std::vector<double> features;  // row-major, n x kFeatureDim
  std::vector<int> labels;
  int n_classes = 0;

  std::size_t size() const { return labels.size(); }
};

FeatureSet extract_features_batch(const rfsignal::Dataset& ds, int jobs = 0);
FeatureSet extract_features_batch_serial(const rfsignal::Dataset& ds);

struct Hyper {
  int epochs = 500;
  double learning_rate = 0.1;
};

struct TrainMeta {
  int epochs = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  int quantity_per_class = 0;
};

// Linear softmax classifier over standardized features. Training is
// full-batch gradient descent with a fixed step, so a (seed, config) pair
// reproduces the weights bit-exactly.
struct SoftmaxModel {
  std::vector<double> weights;  // n_classes x kFeatureDim
  std::vector<double> bias;     // n_classes
  std::vector<double> feat_mean;  // standardization from the training subsample
  std::vector<double> feat_std;
  int n_classes = 0;
  TrainMeta meta;
};

// Subsamples exactly quantity_per_class observations of every class (seeded),
// standardizes with subsample statistics only, and minimizes cross-entropy.
SoftmaxModel train(const FeatureSet& data, int quantity_per_class, const Hyper& hyper,
                   std::uint64_t seed);

metrics::PredictionSet evaluate(const SoftmaxModel& model, const FeatureSet& data);

// Reads a logits CSV (see the file-format docs); kind=logits rows are
// converted through softmax, kind=probs rows are validated and renormalized.
metrics::PredictionSet ingest_logits(const std::filesystem::path& file);

}  // namespace dataneeds::classifier

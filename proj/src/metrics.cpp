#include "sfr/metrics.hpp"

#include <cmath>

namespace sfr {

double nlpd(const std::vector<OutputDistribution>& predictions,
            const Eigen::Ref<const Eigen::VectorXd>& labels) {
  if (static_cast<Eigen::Index>(predictions.size()) != labels.size()) {
    throw LengthMismatch("nlpd: predictions and labels differ in length");
  }
  if (predictions.empty()) throw LengthMismatch("nlpd: empty inputs");
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    total -= predictions[i].log_predictive(labels[static_cast<Eigen::Index>(i)]);
  }
  return total / static_cast<double>(predictions.size());
}

double accuracy(const std::vector<OutputDistribution>& predictions,
                const Eigen::Ref<const Eigen::VectorXd>& labels) {
  if (static_cast<Eigen::Index>(predictions.size()) != labels.size()) {
    throw LengthMismatch("accuracy: predictions and labels differ in length");
  }
  if (predictions.empty()) throw LengthMismatch("accuracy: empty inputs");
  long correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!predictions[i].classification) {
      throw UnsupportedMethod("accuracy: defined for classification outputs");
    }
    const auto pred = predictions[i].predicted_class();
    if (pred == static_cast<Eigen::Index>(
                    std::llround(labels[static_cast<Eigen::Index>(i)]))) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace sfr

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "h2st/matrix.hpp"
#include "h2st/nn.hpp"

namespace h2st {

struct ClassifierConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_units{128};
  double learning_rate = 0.01;
  std::uint64_t seed = 0;

  /// Throws DomainError on a zero dimension or non-positive learning rate.
  void validate() const;
};

// Binary source(0) / target(1) classifier: ReLU MLP with a single sigmoid
// output, trained online by full-batch SGD on binary cross-entropy.
class OnlineClassifier {
 public:
  explicit OnlineClassifier(ClassifierConfig config);

  /// Probability that `feature` is a target sample.
  double predict(std::span<const double> feature) const;
  std::vector<double> predict_batch(const Matrix& features) const;

  /// Hard label: 1 iff probability > 0.5.
  static int label_of(double probability) { return probability > 0.5 ? 1 : 0; }

  /// One SGD step on the whole batch. Returns the mean loss before the step.
  /// Labels must be 0 or 1.
  double update(const Matrix& features, std::span<const int> labels);

  /// Mean binary cross-entropy without updating.
  double loss(const Matrix& features, std::span<const int> labels) const;

  /// Gradient of the mean loss, flattened in parameters() order.
  std::vector<double> gradient(const Matrix& features, std::span<const int> labels) const;

  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);
  std::size_t parameter_count() const { return net_.parameter_count(); }

  const ClassifierConfig& config() const { return config_; }
  const Mlp& network() const { return net_; }
  Mlp& network() { return net_; }

 private:
  void check_batch(const Matrix& features, std::span<const int> labels) const;
  // Mean loss and dLoss/dLogit per row.
  double loss_and_logit_grad(const Matrix& logits, std::span<const int> labels, Matrix* grad) const;

  ClassifierConfig config_;
  Mlp net_;
};

}  // namespace h2st

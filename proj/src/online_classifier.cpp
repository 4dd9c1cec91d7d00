#include "h2st/online_classifier.hpp"

#include <cmath>

#include "h2st/errors.hpp"

namespace h2st {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) - y z, stable for large |z|.
double bce_from_logit(double z, int y) {
  return std::fmax(z, 0.0) - static_cast<double>(y) * z + std::log1p(std::exp(-std::fabs(z)));
}

std::vector<std::size_t> output_widths(const ClassifierConfig& c) {
  std::vector<std::size_t> widths = c.hidden_units;
  widths.push_back(1);
  return widths;
}

}  // namespace

void ClassifierConfig::validate() const {
  if (input_dim == 0) throw DomainError("ClassifierConfig: input_dim must be at least 1");
  for (std::size_t h : hidden_units) {
    if (h == 0) throw DomainError("ClassifierConfig: hidden layer width must be at least 1");
  }
  if (!(learning_rate > 0.0)) throw DomainError("ClassifierConfig: learning_rate must be positive");
}

OnlineClassifier::OnlineClassifier(ClassifierConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.seed);
  const auto widths = output_widths(config_);
  net_ = Mlp(config_.input_dim, widths, /*activate_output=*/false, rng);
}

double OnlineClassifier::predict(std::span<const double> feature) const {
  if (feature.size() != config_.input_dim) {
    throw DimensionError("OnlineClassifier::predict: feature length mismatch");
  }
  Matrix m(1, feature.size());
  std::copy(feature.begin(), feature.end(), m.data.begin());
  return predict_batch(m).front();
}

std::vector<double> OnlineClassifier::predict_batch(const Matrix& features) const {
  if (features.cols != config_.input_dim) {
    throw DimensionError("OnlineClassifier::predict_batch: feature width mismatch");
  }
  const auto trace = net_.forward(features);
  std::vector<double> probs(features.rows);
  for (std::size_t r = 0; r < features.rows; ++r) probs[r] = sigmoid(trace.output()(r, 0));
  return probs;
}

void OnlineClassifier::check_batch(const Matrix& features, std::span<const int> labels) const {
  if (features.rows == 0) throw EmptyInputError("OnlineClassifier: empty batch");
  if (features.cols != config_.input_dim) {
    throw DimensionError("OnlineClassifier: feature width mismatch");
  }
  if (labels.size() != features.rows) throw DimensionError("OnlineClassifier: label count mismatch");
  for (int y : labels) {
    if (y != 0 && y != 1) throw DomainError("OnlineClassifier: labels must be 0 or 1");
  }
}

double OnlineClassifier::loss_and_logit_grad(const Matrix& logits, std::span<const int> labels,
                                             Matrix* grad) const {
  const double inv_n = 1.0 / static_cast<double>(logits.rows);
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const double z = logits(r, 0);
    total += bce_from_logit(z, labels[r]);
    if (grad != nullptr) (*grad)(r, 0) = (sigmoid(z) - labels[r]) * inv_n;
  }
  return total * inv_n;
}

double OnlineClassifier::update(const Matrix& features, std::span<const int> labels) {
  check_batch(features, labels);
  const auto trace = net_.forward(features);
  Matrix grad_logit(features.rows, 1);
  const double pre_loss = loss_and_logit_grad(trace.output(), labels, &grad_logit);
  const auto grads = net_.backward(trace, grad_logit);
  net_.descend(grads, config_.learning_rate);
  return pre_loss;
}

double OnlineClassifier::loss(const Matrix& features, std::span<const int> labels) const {
  check_batch(features, labels);
  return loss_and_logit_grad(net_.forward(features).output(), labels, nullptr);
}

std::vector<double> OnlineClassifier::gradient(const Matrix& features,
                                               std::span<const int> labels) const {
  check_batch(features, labels);
  const auto trace = net_.forward(features);
  Matrix grad_logit(features.rows, 1);
  loss_and_logit_grad(trace.output(), labels, &grad_logit);
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flatten_into(net_.backward(trace, grad_logit), flat);
  return flat;
}

std::vector<double> OnlineClassifier::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flatten_into(net_.layers(), flat);
  return flat;
}

void OnlineClassifier::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw DimensionError("OnlineClassifier::set_parameters: wrong parameter count");
  }
  unflatten_from(values, net_.layers());
}

}  // namespace h2st

#include "h2st/detection.hpp"

#include <cmath>
#include <string>

#include "h2st/errors.hpp"

namespace h2st {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::hierarchical: return "h2st";
    case Strategy::flat: return "c2st";
    case Strategy::single: return "single_c2st";
  }
  return "unknown";
}

void DetectorConfig::validate() const {
  if (window_size == 0) throw DomainError("DetectorConfig: window_size must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("DetectorConfig: alpha must lie in (0, 1)");
}

bool rejects_null(const stats::SlidingWindow& window, double alpha, stats::CpInterval* interval) {
  const auto [mu, pairs] = window.mu_hat();
  const auto trials = static_cast<std::uint64_t>(2 * pairs);
  const auto successes = static_cast<std::uint64_t>(std::llround(static_cast<double>(trials) * mu));
  const auto cp = stats::clopper_pearson(successes, trials, alpha);
  if (interval != nullptr) *interval = cp;
  return !cp.contains(0.5);
}

TestLayer::TestLayer(int task_id, ClassifierConfig classifier, DetectorConfig config)
    : task_id_(task_id),
      config_(config),
      classifier_((config.validate(), std::move(classifier))),
      window_(config.window_size) {}

LayerOutcome TestLayer::step(const Matrix& source, const Matrix& target) {
  if (source.empty() || target.empty()) throw EmptyInputError("TestLayer::step: empty sample set");
  if (source.rows != target.rows) {
    throw DimensionError("TestLayer::step: source and target counts differ");
  }
  if (source.cols != target.cols) throw DimensionError("TestLayer::step: feature width mismatch");

  // 1. predict with the classifier as it stands
  const auto p_source = classifier_.predict_batch(source);
  const auto p_target = classifier_.predict_batch(target);

  // 2. online update: sources are 0, targets are 1
  std::vector<int> labels(source.rows + target.rows, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(source.rows), labels.end(), 1);
  LayerOutcome outcome;
  outcome.task_id = task_id_;
  outcome.loss = classifier_.update(Matrix::vstack(source, target), labels);

  // 3. calibrated test on the window
  for (std::size_t i = 0; i < source.rows; ++i) {
    window_.push(OnlineClassifier::label_of(p_source[i]) == 0,
                 OnlineClassifier::label_of(p_target[i]) == 1);
  }
  const auto mu = window_.mu_hat();
  outcome.mu_hat = mu.mu;
  outcome.pairs = mu.pairs;
  outcome.rejected = rejects_null(window_, config_.alpha, &outcome.interval);
  return outcome;
}

Cascade::Cascade(Strategy strategy, DetectorConfig config, ClassifierConfig layer_template,
                 std::uint64_t seed)
    : strategy_(strategy), config_(config), template_(std::move(layer_template)), seed_(seed) {
  config_.validate();
}

TestLayer Cascade::make_layer(int task_id, std::size_t input_dim) const {
  ClassifierConfig c = template_;
  c.input_dim = input_dim;
  c.seed = derive_seed(seed_, "layer", static_cast<std::uint64_t>(task_id));
  return TestLayer(task_id, std::move(c), config_);
}

void Cascade::add_layer(int task_id, std::size_t input_dim) {
  if (strategy_ == Strategy::single) {
    throw DomainError("Cascade::add_layer: the unified strategy keeps exactly one layer");
  }
  layers_.push_back(make_layer(task_id, input_dim));
}

void Cascade::ensure_unified_layer(std::size_t input_dim) {
  if (strategy_ != Strategy::single) {
    throw DomainError("Cascade::ensure_unified_layer: only valid for the unified strategy");
  }
  if (layers_.empty()) layers_.push_back(make_layer(0, input_dim));
}

namespace {

void require(const Cascade& cascade, Strategy expected, const char* who) {
  if (cascade.strategy() != expected) {
    throw DomainError(std::string(who) + ": cascade strategy mismatch");
  }
  if (cascade.empty()) throw EmptyInputError(std::string(who) + ": cascade has no layers");
}

Matrix source_features(MemoryStore& buffers, const TaskModel& extractor, int task, std::size_t n) {
  const auto drawn = buffers.draw(task, n);
  return extractor.extract_batch(features_of(drawn));
}

}  // namespace

DetectionTrace h2st_detect(Cascade& cascade, const Matrix& target_inputs, MemoryStore& buffers,
                           const TaskModel& extractor) {
  require(cascade, Strategy::hierarchical, "h2st_detect");
  if (target_inputs.empty()) throw EmptyInputError("h2st_detect: no target samples");
  const Matrix target = extractor.extract_batch(target_inputs);
  DetectionTrace trace;
  for (auto& layer : cascade.layers()) {
    const Matrix source = source_features(buffers, extractor, layer.task_id(), target.rows);
    trace.layers.push_back(layer.step(source, target));
    if (!trace.layers.back().rejected) {
      trace.verdict = Detection::in_distribution(layer.task_id());
      return trace;
    }
  }
  trace.verdict = Detection::out_of_distribution();
  return trace;
}

DetectionTrace c2st_detect(Cascade& cascade, const Matrix& target_inputs, MemoryStore& buffers,
                           const TaskModel& extractor) {
  require(cascade, Strategy::flat, "c2st_detect");
  if (target_inputs.empty()) throw EmptyInputError("c2st_detect: no target samples");
  const Matrix target = extractor.extract_batch(target_inputs);
  DetectionTrace trace;
  bool found = false;
  for (auto& layer : cascade.layers()) {
    const Matrix source = source_features(buffers, extractor, layer.task_id(), target.rows);
    trace.layers.push_back(layer.step(source, target));
    if (!found && !trace.layers.back().rejected) {
      trace.verdict = Detection::in_distribution(layer.task_id());
      found = true;
    }
  }
  if (!found) trace.verdict = Detection::out_of_distribution();
  return trace;
}

DetectionTrace single_c2st_detect(Cascade& cascade, const Matrix& target_inputs,
                                  MemoryStore& buffers, const TaskModel& extractor) {
  require(cascade, Strategy::single, "single_c2st_detect");
  if (target_inputs.empty()) throw EmptyInputError("single_c2st_detect: no target samples");
  const Matrix target = extractor.extract_batch(target_inputs);
  const Matrix source = extractor.extract_batch(features_of(buffers.draw_even(target.rows)));
  DetectionTrace trace;
  trace.layers.push_back(cascade.layers().front().step(source, target));
  trace.verdict = trace.layers.back().rejected ? Detection::out_of_distribution()
                                               : Detection::in_distribution(0);
  return trace;
}

DetectionTrace detect(Cascade& cascade, const Matrix& target_inputs, MemoryStore& buffers,
                      const TaskModel& extractor) {
  switch (cascade.strategy()) {
    case Strategy::hierarchical: return h2st_detect(cascade, target_inputs, buffers, extractor);
    case Strategy::flat: return c2st_detect(cascade, target_inputs, buffers, extractor);
    case Strategy::single: return single_c2st_detect(cascade, target_inputs, buffers, extractor);
  }
  throw DomainError("detect: unknown strategy");
}

}  // namespace h2st

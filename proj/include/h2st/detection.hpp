#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "h2st/matrix.hpp"
#include "h2st/memory.hpp"
#include "h2st/online_classifier.hpp"
#include "h2st/stats.hpp"
#include "h2st/task_model.hpp"

namespace h2st {

enum class Strategy { hierarchical, flat, single };

std::string_view to_string(Strategy s);

struct DetectorConfig {
  std::size_t window_size = 20;
  double alpha = 0.05;

  void validate() const;
};

// Verdict of one detection: in-distribution with a task id, or OOD.
// task_id() == 0 on an ID verdict means "ID, task unknown" (unified test).
class Detection {
 public:
  static Detection in_distribution(int task) { return Detection(true, task); }
  static Detection out_of_distribution() { return Detection(false, 0); }

  bool is_id() const { return id_; }
  bool is_ood() const { return !id_; }
  int task_id() const { return task_; }

  bool operator==(const Detection&) const = default;

 private:
  Detection(bool id, int task) : id_(id), task_(task) {}
  bool id_;
  int task_;
};

struct LayerOutcome {
  int task_id = 0;
  bool rejected = false;
  double mu_hat = 0.0;
  std::size_t pairs = 0;
  double loss = 0.0;
  stats::CpInterval interval;
};

/// True when 1/2 lies outside the Clopper-Pearson interval of the window's
/// correct indicators (2 * pairs trials).
bool rejects_null(const stats::SlidingWindow& window, double alpha,
                  stats::CpInterval* interval = nullptr);

// One task-specific classifier two-sample test.
class TestLayer {
 public:
  TestLayer(int task_id, ClassifierConfig classifier, DetectorConfig config);

  /// Predicts source/target labels with the current classifier, takes one
  /// SGD step on the combined batch (sources 0, targets 1), pushes one
  /// correctness pair per (source, target) row pair, then tests the window.
  LayerOutcome step(const Matrix& source, const Matrix& target);

  int task_id() const { return task_id_; }
  const OnlineClassifier& classifier() const { return classifier_; }
  const stats::SlidingWindow& window() const { return window_; }
  const DetectorConfig& config() const { return config_; }

 private:
  int task_id_;
  DetectorConfig config_;
  OnlineClassifier classifier_;
  stats::SlidingWindow window_;
};

class Cascade {
 public:
  Cascade(Strategy strategy, DetectorConfig config, ClassifierConfig layer_template,
          std::uint64_t seed);

  /// Appends a fresh layer for `task_id`. Hierarchical and flat only.
  void add_layer(int task_id, std::size_t input_dim);

  /// Creates the single unified layer on first call; no-op afterwards.
  /// Single strategy only.
  void ensure_unified_layer(std::size_t input_dim);

  Strategy strategy() const { return strategy_; }
  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  const std::vector<TestLayer>& layers() const { return layers_; }
  std::vector<TestLayer>& layers() { return layers_; }
  const DetectorConfig& config() const { return config_; }

 private:
  TestLayer make_layer(int task_id, std::size_t input_dim) const;

  Strategy strategy_;
  DetectorConfig config_;
  ClassifierConfig template_;
  std::uint64_t seed_;
  std::vector<TestLayer> layers_;
};

struct DetectionTrace {
  Detection verdict = Detection::out_of_distribution();
  std::vector<LayerOutcome> layers;

  std::size_t layers_visited() const { return layers.size(); }
};

/// Walks layers in order and exits at the first one that does not reject.
/// Layers past the exit are neither updated nor tested.
DetectionTrace h2st_detect(Cascade& cascade, const Matrix& target_inputs, MemoryStore& buffers,
                           const TaskModel& extractor);

/// Steps every layer; the lowest-index non-rejecting layer names the task.
DetectionTrace c2st_detect(Cascade& cascade, const Matrix& target_inputs, MemoryStore& buffers,
                           const TaskModel& extractor);

/// One unified layer whose sources are drawn evenly from every buffer.
/// ID verdicts carry task id 0.
DetectionTrace single_c2st_detect(Cascade& cascade, const Matrix& target_inputs,
                                  MemoryStore& buffers, const TaskModel& extractor);

/// Dispatches on cascade.strategy().
DetectionTrace detect(Cascade& cascade, const Matrix& target_inputs, MemoryStore& buffers,
                      const TaskModel& extractor);

}  // namespace h2st

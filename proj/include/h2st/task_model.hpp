#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "h2st/matrix.hpp"
#include "h2st/memory.hpp"
#include "h2st/nn.hpp"

namespace h2st {

struct TaskModelConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden_units{64, 32};
  std::size_t classes_per_task = 2;
  double learning_rate = 0.05;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingSummary {
  int task = 0;
  std::vector<double> epoch_loss;
  std::size_t replay_draws = 0;
};

// Continually trained classifier: a shared ReLU feature extractor plus one
// linear head per learned task, trained with experience replay.
class TaskModel {
 public:
  explicit TaskModel(TaskModelConfig config);

  /// Feature vector (last extractor activation) for one raw input.
  std::vector<double> extract(std::span<const double> x) const;
  Matrix extract_batch(const Matrix& inputs) const;

  /// Raw head outputs for `task`. Throws DomainError for an unknown task.
  std::vector<double> logits(std::span<const double> x, int task) const;

  /// Argmax of logits(x, task); ties go to the lower class index.
  int predict_label(std::span<const double> x, int task) const;

  /// Adds the head for `task` if needed, runs the configured epochs of
  /// minibatch SGD with an equal-size replay batch drawn evenly from the
  /// existing buffers of other tasks, then stores class-balanced exemplars.
  TrainingSummary train_increment(int task, std::span<const Sample> data, MemoryStore& store);

  /// Fraction of samples whose predicted label under their own task head
  /// matches the true label.
  double accuracy(std::span<const Sample> samples) const;

  bool has_task(int task) const { return heads_.contains(task); }
  std::vector<int> tasks() const;
  std::size_t feature_dim() const { return extractor_.output_dim(); }
  std::size_t input_dim() const { return config_.input_dim; }
  const TaskModelConfig& config() const { return config_; }

  /// Weighted sum of per-sample cross-entropies, each sample scored by the
  /// head of its own task.
  double loss(std::span<const Sample> samples, std::span<const double> weights) const;

  /// Gradient of loss() flattened in parameters() order (extractor layers,
  /// then heads in ascending task order).
  std::vector<double> gradient(std::span<const Sample> samples, std::span<const double> weights) const;

  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

  /// Binary checkpoint; see README for the byte layout.
  void save(std::ostream& out) const;
  static TaskModel load(std::istream& in);


 private:
  TaskModel() = default;

  // Returns the loss; fills grads when requested (extractor, heads).
  double loss_and_grad(std::span<const Sample> samples, std::span<const double> weights,
                       std::vector<DenseLayer>* extractor_grads,
                       std::map<int, DenseLayer>* head_grads) const;
  void step(std::span<const Sample> samples, std::span<const double> weights);
  const DenseLayer& head(int task) const;

  TaskModelConfig config_;
  Mlp extractor_;
  std::map<int, DenseLayer> heads_;
  std::uint64_t head_seed_ = 0;
  std::uint64_t shuffle_state_ = 0;
};

}  // namespace h2st

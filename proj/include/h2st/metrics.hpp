#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "h2st/detection.hpp"

namespace h2st {

// Binary ID-vs-OOD confusion with ID as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;  // ID predicted ID
  std::uint64_t fp = 0;  // OOD predicted ID
  std::uint64_t tn = 0;  // OOD predicted OOD
  std::uint64_t fn = 0;  // ID predicted OOD

  void add(bool truly_id, bool predicted_id);
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// F1 in percent. 0 when tp == 0; throws DomainError when tp + fp + fn == 0.
double f1_score(const ConfusionCounts& c);

struct SampleOutcome {
  bool truly_id = false;
  int true_task = 0;
  Detection verdict = Detection::out_of_distribution();
};

/// Whether the verdict gets both the ID/OOD call and the task id right.
bool task_correct(const SampleOutcome& s);

/// Percentage of samples with task_correct().
double task_accuracy(std::span<const SampleOutcome> records);

// Accuracy after each learned task (rows) on every task learned so far
// (columns). Row r holds exactly r + 1 values.
class AccuracyMatrix {
 public:
  void add_row(std::vector<double> accuracies);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::vector<double>>& data() const { return rows_; }

 private:
  std::vector<std::vector<double>> rows_;
};

struct AccFt {
  double acc = 0.0;
  double ft = 0.0;
};

/// ACC: mean of the final row. FT: mean over all but the last task of
/// (final accuracy - accuracy right after learning that task).
/// Throws EmptyInputError for an empty matrix.
AccFt acc_and_ft(const AccuracyMatrix& m);

struct RoundMetrics {
  std::uint64_t run = 0;
  std::size_t round = 0;
  std::string role;
  int phase = 0;
  ConfusionCounts counts;
  std::size_t samples = 0;
  std::size_t task_correct = 0;
  std::size_t layer_visits = 0;
  std::size_t correct_id = 0;
  std::size_t correct_id_visits = 0;
  std::size_t ambiguous = 0;
};

struct MetricsReport {
  double f1_mean = 0.0;
  double ta_mean = 0.0;
  double acc = 0.0;
  double ft = 0.0;
  std::vector<double> phase_f1;
  std::vector<double> phase_ta;
  std::vector<RoundMetrics> rounds;
  std::vector<std::vector<double>> accuracy_matrix;
  std::uint64_t ambiguous_count = 0;
  double mean_layer_visits = 0.0;
  double mean_layer_visits_correct_id = 0.0;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
};

// Collects round and checkpoint results. Detection quality is averaged over
// phases: a phase is one OOD round together with the ID rounds that follow
// it, so every phase contains both classes.
//
// merge() is associative and commutative: entries are keyed by (run, round).
class MetricsAccumulator {
 public:
  void add_round(const RoundMetrics& round);
  void add_checkpoint(std::uint64_t run, std::vector<double> accuracies);
  void merge(const MetricsAccumulator& other);
  MetricsReport report() const;

 private:
  std::map<std::pair<std::uint64_t, std::size_t>, RoundMetrics> rounds_;
  std::map<std::uint64_t, AccuracyMatrix> matrices_;
};

}  // namespace h2st

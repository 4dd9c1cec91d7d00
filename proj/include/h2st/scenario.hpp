#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "h2st/baselines.hpp"
#include "h2st/detection.hpp"
#include "h2st/memory.hpp"
#include "h2st/metrics.hpp"
#include "h2st/task_model.hpp"

namespace h2st {

struct StreamConfig {
  std::size_t num_tasks = 5;
  std::size_t classes_per_task = 2;
  std::size_t input_dim = 32;
  std::size_t ood_round_size = 600;  // also the bootstrap training set size
  std::size_t id_round_size = 200;
  std::size_t id_rounds_per_task = 2;
  std::size_t batch_size = 20;
  std::size_t segment_length = 0;  // samples per single-task run; 0 means batch_size
  double ood_mix_fraction = 0.0;   // share of OOD-round segments drawn from learned tasks
  std::size_t test_size_per_task = 200;

  void validate() const;
  std::size_t segment() const { return segment_length == 0 ? batch_size : segment_length; }
};

// Gaussian class clusters. Each task has a center drawn with spread
// `task_spread` per coordinate; its class means scatter around that center
// with `class_spread`; samples add isotropic noise `sigma`.
struct SyntheticLayout {
  double task_spread = 1.0;
  double class_spread = 0.5;
  double sigma = 1.0;
};

struct SyntheticTaskSpec {
  std::vector<std::vector<double>> class_means;
  double sigma = 1.0;
};

std::vector<SyntheticTaskSpec> make_synthetic_specs(const StreamConfig& config,
                                                    const SyntheticLayout& layout,
                                                    std::uint64_t seed);

enum class RoundRole { bootstrap, ood, id };
std::string_view to_string(RoundRole role);

struct Round {
  RoundRole role = RoundRole::id;
  int task = 0;  // the arriving task for bootstrap and OOD rounds
  std::vector<Sample> samples;
};

struct Stream {
  std::vector<Round> rounds;
  std::map<int, std::vector<Sample>> test_sets;
  std::size_t input_dim = 0;
  std::size_t classes_per_task = 0;
  std::size_t batch_size = 0;
};

/// Bootstrap round for task 1, then per further task: one OOD round of that
/// task followed by id_rounds_per_task ID rounds over tasks learned so far.
/// ID rounds are built from single-task segments whose tasks are balanced
/// across the learned set and shuffled. Throws DomainError when
/// specs.size() != num_tasks.
Stream generate_stream(const StreamConfig& config, const std::vector<SyntheticTaskSpec>& specs,
                       std::uint64_t seed);

// Labeled rows grouped by task, e.g. loaded from a feature file.
struct TaskPools {
  std::map<int, std::vector<Sample>> rows;
  std::size_t input_dim = 0;
  std::size_t classes = 0;
};

/// Reads `task_id,label,f0,...,f{d-1}` CSV. Task ids must be 1..T.
TaskPools load_feature_csv(std::istream& in);
TaskPools load_feature_csv_file(const std::string& path);

/// Same round structure as generate_stream, drawing rows with replacement
/// from each task's pool after holding out test_size_per_task rows (at most
/// a fifth of the pool) per task for accuracy checkpoints.
Stream stream_from_pools(const StreamConfig& config, const TaskPools& pools, std::uint64_t seed);

struct SampleVerdict {
  Detection verdict = Detection::out_of_distribution();
  std::size_t layers_visited = 0;
  bool ambiguous = false;
};

// Produces verdicts for a detection round and reacts to newly learned tasks.
class StreamDetector {
 public:
  virtual ~StreamDetector() = default;
  virtual std::vector<SampleVerdict> detect_round(std::span<const Sample> samples,
                                                  const std::set<int>& learned,
                                                  const TaskModel& model, MemoryStore& store) = 0;
  virtual void on_task_learned(int task, const TaskModel& model) = 0;
  virtual std::string name() const = 0;
};

// Cascade strategies processed in consecutive batches of `batch_size`.
class CascadeDetector : public StreamDetector {
 public:
  CascadeDetector(Cascade& cascade, std::size_t batch_size);
  std::vector<SampleVerdict> detect_round(std::span<const Sample> samples, const std::set<int>& learned,
                                          const TaskModel& model, MemoryStore& store) override;
  void on_task_learned(int task, const TaskModel& model) override;
  std::string name() const override;

 private:
  Cascade& cascade_;
  std::size_t batch_size_;
};

// Score baseline with per-round oracle thresholds: for each learned task t,
// scores of the round's task-t samples are positives and every other
// sample's score is a negative. A task absent from the round gets an
// unreachable threshold; a task with no negatives accepts everything.
class BaselineDetector : public StreamDetector {
 public:
  explicit BaselineDetector(ScoreKind kind) : kind_(kind) {}
  std::vector<SampleVerdict> detect_round(std::span<const Sample> samples, const std::set<int>& learned,
                                          const TaskModel& model, MemoryStore& store) override;
  void on_task_learned(int, const TaskModel&) override {}
  std::string name() const override;

 private:
  ScoreKind kind_;
};

struct RoundLogRecord {
  std::size_t sample_idx = 0;
  int true_task = 0;
  int true_label = 0;
  bool verdict_id = false;
  int pred_task = -1;
  int pred_label = -1;
  std::size_t layers_visited = 0;
};

struct RoundLog {
  std::size_t round = 0;
  RoundRole role = RoundRole::id;
  int task = 0;
  std::vector<RoundLogRecord> records;
  bool degenerate = false;        // OOD round in which nothing of the new task was flagged
  std::size_t excluded = 0;       // flagged-OOD samples left out of new-task training
  std::size_t trained_on = 0;     // samples handed to train_increment
};

struct ExperimentResult {
  std::vector<RoundLog> logs;
  MetricsReport report;
};

/// Runs the closed loop over the stream: bootstrap on the first round, then
/// for every detection round produce verdicts, classify ID samples with the
/// predicted task head, and after an OOD round train the new task on the
/// samples flagged OOD whose true task is the new one. A round with no such
/// samples is logged as degenerate and training is skipped.
ExperimentResult run_experiment(const Stream& stream, TaskModel& model, StreamDetector& detector,
                                MemoryStore& store, MetricsAccumulator& metrics,
                                std::uint64_t run_id = 0);

/// `round,role,sample_idx,true_task,true_label,verdict,pred_task,pred_label,layers_visited`
void write_round_log_csv(std::ostream& out, const std::vector<RoundLog>& logs);

}  // namespace h2st

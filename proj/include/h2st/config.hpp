#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "h2st/baselines.hpp"
#include "h2st/detection.hpp"
#include "h2st/online_classifier.hpp"
#include "h2st/scenario.hpp"
#include "h2st/task_model.hpp"

namespace h2st {

enum class DetectorKind { h2st, c2st, single_c2st, baseline };

struct DetectorChoice {
  DetectorKind kind = DetectorKind::h2st;
  ScoreKind score = ScoreKind::msp;  // baseline only

  /// h2st | c2st | single_c2st | baseline:{msp,maxlogit,energy,featurenorm}
  static DetectorChoice parse(std::string_view token);
  std::string token() const;
};

// Everything needed to reproduce one experiment. Serialized as a JSON
// document of nested sections; unknown keys are rejected.
struct ExperimentConfig {
  StreamConfig stream;
  SyntheticLayout synthetic;
  std::string feature_file;  // when set, replaces the synthetic tasks
  DetectorConfig detector;
  // input_dim and seed are filled in per layer. The rate is above the
  // classifier's own default: at 0.01 a fresh layer needs a dozen batches
  // before it can reject a new task.
  ClassifierConfig classifier{.input_dim = 0, .hidden_units = {128}, .learning_rate = 0.05, .seed = 0};
  std::size_t memory_capacity = 200;
  DetectorChoice strategy;
  TaskModelConfig task_model;  // input_dim and classes come from the stream
  std::string output_dir = "out";
  std::uint64_t seed = 7;

  void validate() const;
  std::string to_json() const;

  /// Parses a full or partial document; missing keys keep their defaults.
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  /// Overrides one dotted key ("memory.capacity") with a value literal.
  /// Values that are not valid JSON are taken as strings.
  void set(std::string_view dotted_key, std::string_view value);
};

/// Builds the stream, model, memory and detector from the config (all seeds
/// derived from config.seed) and runs the closed loop.
ExperimentResult execute_experiment(const ExperimentConfig& config, std::uint64_t run_id = 0);

}  // namespace h2st

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>

#include "h2st/detection.hpp"
#include "h2st/task_model.hpp"

namespace h2st {

enum class ScoreKind { msp, max_logit, energy, feature_norm };

std::string_view to_string(ScoreKind kind);
std::optional<ScoreKind> parse_score_kind(std::string_view token);

/// OOD score where higher means more in-distribution.
///   msp          max softmax probability
///   max_logit    largest logit
///   energy       log-sum-exp of the logits (temperature 1)
///   feature_norm Euclidean norm of the feature vector
double score(ScoreKind kind, std::span<const double> logits, std::span<const double> feature);

struct ThresholdFit {
  double threshold = 0.0;
  double f1 = 0.0;  // percentage
};

/// Grid search over 1000 evenly spaced thresholds from the pooled minimum to
/// the pooled maximum. A score >= threshold counts as ID (the positive
/// class). Returns the F1-maximizing threshold; ties go to the smallest.
ThresholdFit threshold_search(std::span<const double> id_scores, std::span<const double> ood_scores);

struct ThresholdTable {
  ScoreKind kind = ScoreKind::msp;
  std::map<int, double> thresholds;
};

struct BaselineVerdict {
  Detection verdict = Detection::out_of_distribution();
  bool ambiguous = false;  // more than one task passed its threshold
};

/// Applies per-task thresholds to precomputed per-task scores. Several
/// passing tasks resolve to the largest margin score - threshold.
BaselineVerdict decide(const ThresholdTable& table, const std::map<int, double>& task_scores);

/// Scores `x` under every learned head and applies decide().
/// Throws DomainError when a learned task has no threshold.
BaselineVerdict baseline_detect(const ThresholdTable& table, const TaskModel& model,
                                std::span<const double> x);

}  // namespace h2st

#include "h2st/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "h2st/errors.hpp"
#include "h2st/metrics.hpp"

namespace h2st {

namespace {
constexpr std::size_t kThresholdCandidates = 1000;
}

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::msp: return "msp";
    case ScoreKind::max_logit: return "maxlogit";
    case ScoreKind::energy: return "energy";
    case ScoreKind::feature_norm: return "featurenorm";
  }
  return "unknown";
}

std::optional<ScoreKind> parse_score_kind(std::string_view token) {
  for (auto k : {ScoreKind::msp, ScoreKind::max_logit, ScoreKind::energy, ScoreKind::feature_norm}) {
    if (token == to_string(k)) return k;
  }
  return std::nullopt;
}

double score(ScoreKind kind, std::span<const double> logits, std::span<const double> feature) {
  if (kind == ScoreKind::feature_norm) {
    if (feature.empty()) throw EmptyInputError("score: empty feature vector");
    double ss = 0.0;
    for (double v : feature) ss += v * v;
    return std::sqrt(ss);
  }
  if (logits.empty()) throw EmptyInputError("score: empty logits");
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - zmax);
  switch (kind) {
    case ScoreKind::msp: return 1.0 / denom;
    case ScoreKind::max_logit: return zmax;
    case ScoreKind::energy: return zmax + std::log(denom);
    case ScoreKind::feature_norm: break;
  }
  throw DomainError("score: unknown kind");
}

ThresholdFit threshold_search(std::span<const double> id_scores, std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) {
    throw EmptyInputError("threshold_search: both score lists must be non-empty");
  }
  double lo = std::min(*std::min_element(id_scores.begin(), id_scores.end()),
                       *std::min_element(ood_scores.begin(), ood_scores.end()));
  double hi = std::max(*std::max_element(id_scores.begin(), id_scores.end()),
                       *std::max_element(ood_scores.begin(), ood_scores.end()));
  const double step = (hi - lo) / static_cast<double>(kThresholdCandidates - 1);

  ThresholdFit best{lo, -1.0};
  for (std::size_t k = 0; k < kThresholdCandidates; ++k) {
    const double gamma = k + 1 == kThresholdCandidates ? hi : lo + step * static_cast<double>(k);
    ConfusionCounts c;
    for (double s : id_scores) (s >= gamma ? c.tp : c.fn) += 1;
    for (double s : ood_scores) (s >= gamma ? c.fp : c.tn) += 1;
    const double f = f1_score(c);
    if (f > best.f1) best = {gamma, f};
    if (step == 0.0) break;
  }
  return best;
}

BaselineVerdict decide(const ThresholdTable& table, const std::map<int, double>& task_scores) {
  BaselineVerdict out;
  int passing = 0;
  double best_margin = 0.0;
  for (const auto& [task, s] : task_scores) {
    auto it = table.thresholds.find(task);
    if (it == table.thresholds.end()) {
      throw DomainError("baseline_detect: no threshold for task " + std::to_string(task));
    }
    if (s < it->second) continue;
    const double margin = s - it->second;
    if (passing == 0 || margin > best_margin) {
      best_margin = margin;
      out.verdict = Detection::in_distribution(task);
    }
    ++passing;
  }
  out.ambiguous = passing > 1;
  return out;
}

BaselineVerdict baseline_detect(const ThresholdTable& table, const TaskModel& model,
                                std::span<const double> x) {
  const auto feature = model.extract(x);
  std::map<int, double> scores;
  for (int task : model.tasks()) {
    const auto z = model.logits(x, task);
    scores[task] = score(table.kind, z, feature);
  }
  return decide(table, scores);
}

}  // namespace h2st

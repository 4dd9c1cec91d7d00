#include "h2st/baselines.hpp"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "h2st/errors.hpp"
#include "h2st/memory.hpp"

namespace h2st {
namespace {

const std::vector<double> kEmpty;

TEST(Score, KnownValues) {
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_DOUBLE_EQ(score(ScoreKind::msp, zeros, kEmpty), 0.5);
  EXPECT_DOUBLE_EQ(score(ScoreKind::energy, zeros, kEmpty), std::numbers::ln2);
  EXPECT_DOUBLE_EQ(score(ScoreKind::feature_norm, zeros, std::vector<double>{0.0, 0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(score(ScoreKind::max_logit, std::vector<double>{3, 1, 2}, kEmpty), 3.0);
  EXPECT_DOUBLE_EQ(score(ScoreKind::feature_norm, zeros, std::vector<double>{3.0, 4.0}), 5.0);
}

TEST(Score, EnergyIsStableForLargeLogits) {
  const double e = score(ScoreKind::energy, std::vector<double>{1000.0, 1000.0}, kEmpty);
  EXPECT_NEAR(e, 1000.0 + std::numbers::ln2, 1e-9);
}

TEST(Score, TokensRoundTrip) {
  for (auto k : {ScoreKind::msp, ScoreKind::max_logit, ScoreKind::energy, ScoreKind::feature_norm}) {
    EXPECT_EQ(parse_score_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_score_kind("odin").has_value());
}

TEST(ThresholdSearch, SeparableScoresReachPerfectF1) {
  const std::vector<double> id{0.9, 0.8};
  const std::vector<double> ood{0.2, 0.1};
  const auto fit = threshold_search(id, ood);
  EXPECT_DOUBLE_EQ(fit.f1, 100.0);
  EXPECT_GT(fit.threshold, 0.2);
  EXPECT_LE(fit.threshold, 0.8);
}

TEST(ThresholdSearch, IdenticalDistributionsFallBackToAllId) {
  const std::vector<double> s{0.1, 0.4, 0.4, 0.7, 0.9};
  const auto fit = threshold_search(s, s);
  // Brute force over every candidate the search may use.
  double best = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double g = k == 999 ? 0.9 : 0.1 + 0.8 * k / 999.0;
    double tp = 0, fp = 0, fn = 0;
    for (double v : s) (v >= g ? tp : fn) += 1;
    for (double v : s) fp += v >= g;
    best = std::max(best, tp == 0 ? 0.0 : 200.0 * tp / (2 * tp + fp + fn));
  }
  EXPECT_NEAR(fit.f1, best, 1e-12);
  EXPECT_NEAR(fit.f1, 200.0 / 3.0, 1e-9);
  EXPECT_DOUBLE_EQ(fit.threshold, 0.1);
}

TEST(ThresholdSearch, SingleCandidateRegion) {
  const auto fit = threshold_search(std::vector<double>{1.0}, std::vector<double>{0.0});
  EXPECT_GT(fit.threshold, 0.0);
  EXPECT_LT(fit.threshold, 1.0);
  EXPECT_DOUBLE_EQ(fit.f1, 100.0);
}

TEST(ThresholdSearch, DuplicatingScoresChangesNothing) {
  Rng rng(3);
  std::vector<double> id(40), ood(30);
  for (auto& v : id) v = rng.normal() + 1.0;
  for (auto& v : ood) v = rng.normal();
  auto id2 = id;
  auto ood2 = ood;
  id2.insert(id2.end(), id.begin(), id.end());
  ood2.insert(ood2.end(), ood.begin(), ood.end());
  const auto a = threshold_search(id, ood);
  const auto b = threshold_search(id2, ood2);
  EXPECT_DOUBLE_EQ(a.threshold, b.threshold);
  EXPECT_DOUBLE_EQ(a.f1, b.f1);
}

TEST(ThresholdSearch, EmptyInputThrows) {
  EXPECT_THROW(threshold_search(kEmpty, std::vector<double>{1.0}), EmptyInputError);
}

TEST(Decide, NoPassIsOod) {
  const ThresholdTable t{ScoreKind::msp, {{1, 0.9}, {2, 0.9}}};
  const auto v = decide(t, {{1, 0.5}, {2, 0.6}});
  EXPECT_TRUE(v.verdict.is_ood());
  EXPECT_FALSE(v.ambiguous);
}

TEST(Decide, SinglePassNamesTask) {
  const ThresholdTable t{ScoreKind::msp, {{1, 0.9}, {2, 0.5}}};
  const auto v = decide(t, {{1, 0.5}, {2, 0.6}});
  EXPECT_EQ(v.verdict, Detection::in_distribution(2));
  EXPECT_FALSE(v.ambiguous);
}

TEST(Decide, LargestMarginWinsAndFlagsAmbiguity) {
  const ThresholdTable t{ScoreKind::msp, {{1, 0.5}, {2, 0.5}}};
  const auto v = decide(t, {{1, 0.8}, {2, 0.6}});
  EXPECT_EQ(v.verdict, Detection::in_distribution(1));
  EXPECT_TRUE(v.ambiguous);
}

TEST(Decide, MissingThresholdThrows) {
  const ThresholdTable t{ScoreKind::msp, {{1, 0.5}}};
  EXPECT_THROW(decide(t, {{1, 0.8}, {2, 0.6}}), DomainError);
}

TEST(BaselineDetect, ScoresEveryLearnedHead) {
  TaskModelConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden_units = {8};
  TaskModel model(cfg);
  MemoryStore store(10, 1);
  std::vector<Sample> a, b;
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    a.push_back({{rng.normal(), rng.normal(), 3.0, 0.0}, 1, i % 2});
    b.push_back({{rng.normal(), rng.normal(), 0.0, 3.0}, 2, i % 2});
  }
  model.train_increment(1, a, store);
  model.train_increment(2, b, store);
  const std::vector<double> x{0.1, 0.2, 3.0, 0.0};
  const ThresholdTable accept_none{ScoreKind::max_logit, {{1, 1e9}, {2, 1e9}}};
  EXPECT_TRUE(baseline_detect(accept_none, model, x).verdict.is_ood());
  const ThresholdTable only_two{ScoreKind::max_logit, {{1, 1e9}, {2, -1e9}}};
  EXPECT_EQ(baseline_detect(only_two, model, x).verdict, Detection::in_distribution(2));
  const ThresholdTable partial{ScoreKind::max_logit, {{1, 0.0}}};
  EXPECT_THROW(baseline_detect(partial, model, x), DomainError);
}

}  // namespace
}  // namespace h2st

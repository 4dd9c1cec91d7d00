#include "h2st/detection.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "h2st/errors.hpp"
#include "h2st/memory.hpp"
#include "h2st/task_model.hpp"

namespace h2st {
namespace {

constexpr std::size_t kDim = 8;

DetectorConfig detector_config(std::size_t w = 20) {
  DetectorConfig c;
  c.window_size = w;
  c.alpha = 0.05;
  return c;
}

ClassifierConfig layer_template(double lr = 0.1) {
  ClassifierConfig c;
  c.hidden_units = {32};
  c.learning_rate = lr;
  return c;
}

// Cluster `center` shifted along a task-specific axis.
std::vector<Sample> cluster(int task, double offset, std::size_t n, Rng& rng) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s{std::vector<double>(kDim), task, static_cast<int>(i % 2)};
    for (auto& v : s.features) v = 0.3 * rng.normal();
    s.features[static_cast<std::size_t>(std::abs(task)) % kDim] += offset;
    out.push_back(std::move(s));
  }
  return out;
}

struct Fixture {
  TaskModel model;
  MemoryStore store{60, 3};
  Rng rng{17};

  Fixture() : model([] {
    TaskModelConfig c;
    c.input_dim = kDim;
    c.hidden_units = {16};
    c.seed = 5;
    return c;
  }()) {}

  void add_tasks(int n) {
    for (int t = 1; t <= n; ++t) store.store(t, cluster(t, 4.0, 60, rng));
  }
  Matrix target(int task, std::size_t n = 20, double offset = 4.0) {
    return features_of(cluster(task, offset, n, rng));
  }
};

TEST(RejectsNull, SaturatedCorrectWindowRejects) {
  stats::SlidingWindow w(20);
  for (int i = 0; i < 20; ++i) w.push(true, true);
  stats::CpInterval ci;
  EXPECT_TRUE(rejects_null(w, 0.05, &ci));
  EXPECT_NEAR(ci.lower, std::pow(0.025, 1.0 / 40.0), 1e-12);
}

TEST(RejectsNull, ChanceWindowDoesNotReject) {
  stats::SlidingWindow w(20);
  for (int i = 0; i < 20; ++i) w.push(i % 2 == 0, i % 2 == 1);
  EXPECT_FALSE(rejects_null(w, 0.05));
}

TEST(RejectsNull, SinglePerfectPairDoesNotReject) {
  stats::SlidingWindow w(20);
  w.push(true, true);
  stats::CpInterval ci;
  EXPECT_FALSE(rejects_null(w, 0.05, &ci));
  EXPECT_NEAR(ci.lower, std::sqrt(0.025), 1e-12);
}

TEST(TestLayer, PredictsThenUpdatesThenTests) {
  ClassifierConfig cc = layer_template();
  cc.input_dim = 3;
  cc.seed = 4;
  TestLayer layer(1, cc, detector_config());
  Rng rng(2);
  Matrix src(5, 3), tgt(5, 3);
  for (auto& v : src.data) v = rng.normal();
  for (auto& v : tgt.data) v = rng.normal() + 1.0;

  OnlineClassifier shadow = layer.classifier();
  std::size_t expected_correct = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    expected_correct += OnlineClassifier::label_of(shadow.predict(src.row(i))) == 0;
    expected_correct += OnlineClassifier::label_of(shadow.predict(tgt.row(i))) == 1;
  }
  const std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const double loss = shadow.update(Matrix::vstack(src, tgt), labels);

  const auto outcome = layer.step(src, tgt);
  EXPECT_EQ(layer.window().correct(), expected_correct);
  EXPECT_EQ(outcome.pairs, 5u);
  EXPECT_DOUBLE_EQ(outcome.loss, loss);
  EXPECT_EQ(layer.classifier().parameters(), shadow.parameters());
}

TEST(TestLayer, RejectsMismatchedBatches) {
  ClassifierConfig cc = layer_template();
  cc.input_dim = 2;
  TestLayer layer(1, cc, detector_config());
  EXPECT_THROW(layer.step(Matrix(2, 2), Matrix(3, 2)), DimensionError);
  EXPECT_THROW(layer.step(Matrix(0, 2), Matrix(0, 2)), EmptyInputError);
}

TEST(Cascade, AddLayerGrowsAndPreservesExisting) {
  Cascade c(Strategy::hierarchical, detector_config(), layer_template(), 9);
  EXPECT_TRUE(c.empty());
  c.add_layer(1, kDim);
  EXPECT_EQ(c.size(), 1u);
  const auto first = c.layers()[0].classifier().parameters();
  c.add_layer(2, kDim);
  EXPECT_EQ(c.layers()[0].classifier().parameters(), first);
  EXPECT_TRUE(c.layers()[1].window().empty());
  EXPECT_THROW(c.layers()[1].window().mu_hat(), EmptyInputError);
}

TEST(Cascade, StrategyGuards) {
  Cascade single(Strategy::single, detector_config(), layer_template(), 1);
  EXPECT_THROW(single.add_layer(1, kDim), DomainError);
  single.ensure_unified_layer(kDim);
  single.ensure_unified_layer(kDim);
  EXPECT_EQ(single.size(), 1u);
  Cascade flat(Strategy::flat, detector_config(), layer_template(), 1);
  EXPECT_THROW(flat.ensure_unified_layer(kDim), DomainError);
}

TEST(H2stDetect, EarlyExitLeavesDeeperLayersUntouched) {
  Fixture f;
  f.add_tasks(3);
  Cascade c(Strategy::hierarchical, detector_config(), layer_template(), 2);
  for (int t = 1; t <= 3; ++t) c.add_layer(t, f.model.feature_dim());
  const auto before = c.layers()[1].classifier().parameters();
  const auto trace = h2st_detect(c, f.target(1), f.store, f.model);
  ASSERT_TRUE(trace.verdict.is_id());
  EXPECT_EQ(trace.verdict.task_id(), 1);
  EXPECT_EQ(trace.layers_visited(), 1u);
  EXPECT_TRUE(c.layers()[1].window().empty());
  EXPECT_TRUE(c.layers()[2].window().empty());
  EXPECT_EQ(c.layers()[1].classifier().parameters(), before);
}

TEST(H2stDetect, ForeignTargetsEventuallyRejectedEverywhere) {
  Fixture f;
  f.add_tasks(3);
  Cascade c(Strategy::hierarchical, detector_config(), layer_template(), 2);
  for (int t = 1; t <= 3; ++t) c.add_layer(t, f.model.feature_dim());
  DetectionTrace trace;
  for (int step = 0; step < 40; ++step) trace = h2st_detect(c, f.target(5, 20, -5.0), f.store, f.model);
  EXPECT_TRUE(trace.verdict.is_ood());
  EXPECT_EQ(trace.layers_visited(), 3u);
}

TEST(H2stDetect, FindsTheMatchingLayer) {
  Fixture f;
  f.add_tasks(3);
  Cascade c(Strategy::hierarchical, detector_config(), layer_template(), 2);
  for (int t = 1; t <= 3; ++t) c.add_layer(t, f.model.feature_dim());
  DetectionTrace trace;
  for (int step = 0; step < 40; ++step) trace = h2st_detect(c, f.target(3), f.store, f.model);
  ASSERT_TRUE(trace.verdict.is_id());
  EXPECT_EQ(trace.verdict.task_id(), 3);
  EXPECT_EQ(trace.layers_visited(), 3u);
}

TEST(C2stDetect, TouchesEveryLayerAndPicksLowestAcceptance) {
  Fixture f;
  // Tasks 2 and 4 share a distribution; 1 and 3 sit elsewhere.
  f.store.store(1, cluster(1, 4.0, 60, f.rng));
  f.store.store(3, cluster(3, 4.0, 60, f.rng));
  auto shared = cluster(2, 4.0, 120, f.rng);
  std::vector<Sample> two(shared.begin(), shared.begin() + 60);
  std::vector<Sample> four(shared.begin() + 60, shared.end());
  for (auto& s : four) s.task_id = 4;
  f.store.store(2, two);
  f.store.store(4, four);

  Cascade c(Strategy::flat, detector_config(), layer_template(), 2);
  for (int t = 1; t <= 4; ++t) c.add_layer(t, f.model.feature_dim());
  DetectionTrace trace;
  for (int step = 0; step < 40; ++step) {
    trace = c2st_detect(c, f.target(2), f.store, f.model);
    ASSERT_EQ(trace.layers_visited(), 4u);
  }
  ASSERT_TRUE(trace.verdict.is_id());
  EXPECT_EQ(trace.verdict.task_id(), 2);
  EXPECT_FALSE(trace.layers[3].rejected);
}

TEST(C2stDetect, AllRejectingIsOod) {
  Fixture f;
  f.add_tasks(2);
  Cascade c(Strategy::flat, detector_config(), layer_template(), 2);
  for (int t = 1; t <= 2; ++t) c.add_layer(t, f.model.feature_dim());
  DetectionTrace trace;
  for (int step = 0; step < 40; ++step) trace = c2st_detect(c, f.target(6, 20, -5.0), f.store, f.model);
  EXPECT_TRUE(trace.verdict.is_ood());
}

TEST(SingleC2stDetect, IdVerdictCarriesNoTask) {
  Fixture f;
  f.add_tasks(4);
  Cascade c(Strategy::single, detector_config(), layer_template(), 2);
  c.ensure_unified_layer(f.model.feature_dim());
  const auto trace = single_c2st_detect(c, f.target(2, 10), f.store, f.model);
  EXPECT_EQ(trace.layers_visited(), 1u);
  EXPECT_EQ(trace.layers[0].pairs, 10u);
  if (trace.verdict.is_id()) {
    EXPECT_EQ(trace.verdict.task_id(), 0);
  }
}

TEST(SingleC2stDetect, ForeignTargetsRejected) {
  Fixture f;
  f.add_tasks(2);
  Cascade c(Strategy::single, detector_config(), layer_template(), 2);
  c.ensure_unified_layer(f.model.feature_dim());
  DetectionTrace trace;
  for (int step = 0; step < 40; ++step) trace = single_c2st_detect(c, f.target(6, 20, -5.0), f.store, f.model);
  EXPECT_TRUE(trace.verdict.is_ood());
}

TEST(Detect, DispatchAndMismatchGuards) {
  Fixture f;
  f.add_tasks(1);
  Cascade h(Strategy::hierarchical, detector_config(), layer_template(), 2);
  EXPECT_THROW(detect(h, f.target(1), f.store, f.model), EmptyInputError);
  h.add_layer(1, f.model.feature_dim());
  EXPECT_THROW(c2st_detect(h, f.target(1), f.store, f.model), DomainError);
  EXPECT_THROW(detect(h, Matrix(0, kDim), f.store, f.model), EmptyInputError);
  EXPECT_EQ(detect(h, f.target(1), f.store, f.model).layers_visited(), 1u);
}

TEST(Detection, VerdictAccessors) {
  EXPECT_TRUE(Detection::in_distribution(3).is_id());
  EXPECT_EQ(Detection::in_distribution(3).task_id(), 3);
  EXPECT_TRUE(Detection::out_of_distribution().is_ood());
  EXPECT_EQ(to_string(Strategy::hierarchical), "h2st");
  EXPECT_EQ(to_string(Strategy::flat), "c2st");
  EXPECT_EQ(to_string(Strategy::single), "single_c2st");
}

}  // namespace
}  // namespace h2st

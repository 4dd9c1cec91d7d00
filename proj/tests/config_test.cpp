#include "h2st/config.hpp"

#include <gtest/gtest.h>

#include "h2st/errors.hpp"

namespace h2st {
namespace {

TEST(DetectorChoice, ParsesEveryToken) {
  EXPECT_EQ(DetectorChoice::parse("h2st").kind, DetectorKind::h2st);
  EXPECT_EQ(DetectorChoice::parse("c2st").kind, DetectorKind::c2st);
  EXPECT_EQ(DetectorChoice::parse("single_c2st").kind, DetectorKind::single_c2st);
  const auto b = DetectorChoice::parse("baseline:energy");
  EXPECT_EQ(b.kind, DetectorKind::baseline);
  EXPECT_EQ(b.score, ScoreKind::energy);
  EXPECT_EQ(b.token(), "baseline:energy");
  EXPECT_THROW(DetectorChoice::parse("baseline:odin"), ConfigError);
  EXPECT_THROW(DetectorChoice::parse("hst"), ConfigError);
}

TEST(ExperimentConfig, EmptyDocumentGivesDefaults) {
  const auto c = ExperimentConfig::from_json("{}");
  EXPECT_EQ(c.stream.num_tasks, 5u);
  EXPECT_EQ(c.stream.batch_size, 20u);
  EXPECT_EQ(c.detector.window_size, 20u);
  EXPECT_DOUBLE_EQ(c.detector.alpha, 0.05);
  EXPECT_EQ(c.memory_capacity, 200u);
  EXPECT_EQ(c.classifier.hidden_units, (std::vector<std::size_t>{128}));
  EXPECT_EQ(c.strategy.kind, DetectorKind::h2st);
}

TEST(ExperimentConfig, PartialSectionsOverrideOnlyGivenKeys) {
  const auto c = ExperimentConfig::from_json(
      R"({"seed": 3, "strategy": "c2st", "memory": {"capacity": 40}, "detector": {"alpha": 0.1}})");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.strategy.kind, DetectorKind::c2st);
  EXPECT_EQ(c.memory_capacity, 40u);
  EXPECT_DOUBLE_EQ(c.detector.alpha, 0.1);
  EXPECT_EQ(c.detector.window_size, 20u);
}

TEST(ExperimentConfig, UnknownKeysAreErrors) {
  EXPECT_THROW(ExperimentConfig::from_json(R"({"sead": 3})"), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"memory": {"size": 3}})"), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"memory": 3})"), ConfigError);
}

TEST(ExperimentConfig, BadValuesAreErrors) {
  EXPECT_THROW(ExperimentConfig::from_json(R"({"seed": "x"})"), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"detector": {"alpha": 1.5}})"), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(R"({"stream": {"batch_size": 0}})"), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json("{not json"), ConfigError);
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST(ExperimentConfig, JsonRoundTrip) {
  auto c = ExperimentConfig::from_json(R"({"strategy": "baseline:msp", "task_model": {"epochs": 2}})");
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.task_model.epochs, 2u);
}

TEST(ExperimentConfig, DottedOverrides) {
  ExperimentConfig c;
  c.set("memory.capacity", "40");
  c.set("strategy", "single_c2st");
  c.set("classifier.hidden_units", "[64,32]");
  EXPECT_EQ(c.memory_capacity, 40u);
  EXPECT_EQ(c.strategy.kind, DetectorKind::single_c2st);
  EXPECT_EQ(c.classifier.hidden_units, (std::vector<std::size_t>{64, 32}));
  EXPECT_THROW(c.set("memory.slots", "3"), ConfigError);
  EXPECT_THROW(c.set("detector.alpha", "2"), ConfigError);
}

TEST(ExecuteExperiment, SmallRunIsDeterministic) {
  const auto c = ExperimentConfig::from_json(R"({
    "stream": {"num_tasks": 3, "ood_round_size": 100, "id_round_size": 60, "test_size_per_task": 50},
    "task_model": {"epochs": 2}
  })");
  const auto a = execute_experiment(c);
  const auto b = execute_experiment(c);
  EXPECT_EQ(a.report.to_json(), b.report.to_json());
  EXPECT_EQ(a.logs.size(), 1u + 2u * 3u);
}

}  // namespace
}  // namespace h2st

#include "h2st/scenario.hpp"

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "h2st/errors.hpp"

namespace h2st {
namespace {

StreamConfig small_stream(std::size_t tasks = 3) {
  StreamConfig c;
  c.num_tasks = tasks;
  c.input_dim = 6;
  c.ood_round_size = 60;
  c.id_round_size = 40;
  c.batch_size = 10;
  c.test_size_per_task = 30;
  return c;
}

Stream make_stream(const StreamConfig& c, std::uint64_t seed = 4) {
  SyntheticLayout layout;
  layout.task_spread = 2.0;
  return generate_stream(c, make_synthetic_specs(c, layout, seed), seed);
}

TaskModel small_model() {
  TaskModelConfig c;
  c.input_dim = 6;
  c.hidden_units = {12, 8};
  c.epochs = 2;
  c.seed = 3;
  return TaskModel(c);
}

// Knows the truth: ID with the true task when learned, OOD otherwise.
class OracleDetector : public StreamDetector {
 public:
  explicit OracleDetector(bool never_ood = false) : never_ood_(never_ood) {}
  std::vector<SampleVerdict> detect_round(std::span<const Sample> samples, const std::set<int>& learned,
                                          const TaskModel&, MemoryStore&) override {
    std::vector<SampleVerdict> out;
    for (const auto& s : samples) {
      SampleVerdict v;
      if (never_ood_) {
        v.verdict = Detection::in_distribution(*learned.begin());
      } else if (learned.contains(s.task_id)) {
        v.verdict = Detection::in_distribution(s.task_id);
      }
      v.layers_visited = 1;
      out.push_back(v);
    }
    return out;
  }
  void on_task_learned(int task, const TaskModel&) override { learned_.push_back(task); }
  std::string name() const override { return "oracle"; }
  std::vector<int> learned_;

 private:
  bool never_ood_;
};

TEST(GenerateStream, TwoTaskStructure) {
  const auto s = make_stream(small_stream(2));
  ASSERT_EQ(s.rounds.size(), 4u);
  EXPECT_EQ(s.rounds[0].role, RoundRole::bootstrap);
  EXPECT_EQ(s.rounds[0].task, 1);
  EXPECT_EQ(s.rounds[1].role, RoundRole::ood);
  EXPECT_EQ(s.rounds[1].task, 2);
  EXPECT_EQ(s.rounds[2].role, RoundRole::id);
  EXPECT_EQ(s.rounds[3].role, RoundRole::id);
  EXPECT_EQ(s.rounds[1].samples.size(), 60u);
  EXPECT_EQ(s.rounds[2].samples.size(), 40u);
}

TEST(GenerateStream, IdRoundsOnlyHoldLearnedTasks) {
  const auto s = make_stream(small_stream(4));
  std::set<int> learned;
  for (const auto& r : s.rounds) {
    if (r.role != RoundRole::id) {
      for (const auto& x : r.samples) EXPECT_EQ(x.task_id, r.task);
      learned.insert(r.task);
      continue;
    }
    for (const auto& x : r.samples) EXPECT_TRUE(learned.contains(x.task_id));
  }
}

TEST(GenerateStream, SegmentsAreSingleTask) {
  const auto s = make_stream(small_stream(4));
  for (const auto& r : s.rounds) {
    for (std::size_t k = 0; k < r.samples.size(); k += 10) {
      for (std::size_t j = k; j < k + 10; ++j) EXPECT_EQ(r.samples[j].task_id, r.samples[k].task_id);
    }
  }
}

TEST(GenerateStream, SameSeedSameStream) {
  const auto a = make_stream(small_stream(), 9);
  const auto b = make_stream(small_stream(), 9);
  ASSERT_EQ(a.rounds.size(), b.rounds.size());
  for (std::size_t i = 0; i < a.rounds.size(); ++i) EXPECT_EQ(a.rounds[i].samples, b.rounds[i].samples);
}

TEST(GenerateStream, SpecCountMismatchThrows) {
  const auto c = small_stream(3);
  const auto specs = make_synthetic_specs(small_stream(2), {}, 1);
  EXPECT_THROW(generate_stream(c, specs, 1), DomainError);
}

TEST(GenerateStream, MixFractionBringsLearnedTasksIntoOodRounds) {
  auto c = small_stream(3);
  c.ood_mix_fraction = 0.5;
  const auto s = make_stream(c);
  std::size_t foreign = 0;
  for (const auto& x : s.rounds[1].samples) foreign += x.task_id != 2;
  EXPECT_EQ(foreign, 30u);
}

TEST(StreamConfig, RejectsZeroCounts) {
  auto c = small_stream();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunExperiment, PerfectDetectorTrainsOnWholeOodRound) {
  const auto c = small_stream(3);
  const auto s = make_stream(c);
  TaskModel model = small_model();
  MemoryStore store(20, 1);
  MetricsAccumulator metrics;
  OracleDetector det;
  const auto result = run_experiment(s, model, det, store, metrics);
  EXPECT_EQ(det.learned_, (std::vector<int>{1, 2, 3}));
  for (const auto& log : result.logs) {
    if (log.role == RoundRole::ood) {
      EXPECT_EQ(log.trained_on, c.ood_round_size);
      EXPECT_FALSE(log.degenerate);
    }
    if (log.role != RoundRole::bootstrap) {
      EXPECT_EQ(log.records.size(), s.rounds[log.round].samples.size());
    }
  }
  EXPECT_DOUBLE_EQ(result.report.f1_mean, 100.0);
  EXPECT_DOUBLE_EQ(result.report.ta_mean, 100.0);
  EXPECT_EQ(result.report.accuracy_matrix.size(), 3u);
}

TEST(RunExperiment, NoOodFlagsMeansDegenerateRounds) {
  const auto s = make_stream(small_stream(3));
  TaskModel model = small_model();
  MemoryStore store(20, 1);
  MetricsAccumulator metrics;
  OracleDetector det(true);
  const auto result = run_experiment(s, model, det, store, metrics);
  EXPECT_EQ(det.learned_, (std::vector<int>{1}));
  EXPECT_TRUE(result.logs[1].degenerate);
  EXPECT_EQ(result.logs[1].trained_on, 0u);
  EXPECT_EQ(model.tasks(), (std::vector<int>{1}));
}

TEST(RunExperiment, CascadeGrowsWithLearnedTasks) {
  const auto s = make_stream(small_stream(3));
  TaskModel model = small_model();
  MemoryStore store(20, 1);
  MetricsAccumulator metrics;
  ClassifierConfig cc;
  cc.hidden_units = {16};
  cc.learning_rate = 0.1;
  Cascade cascade(Strategy::hierarchical, DetectorConfig{}, cc, 5);
  CascadeDetector det(cascade, 10);
  const auto result = run_experiment(s, model, det, store, metrics);
  EXPECT_EQ(cascade.size(), model.tasks().size());
  for (const auto& log : result.logs) {
    for (const auto& rec : log.records) {
      EXPECT_GE(rec.layers_visited, 1u);
      EXPECT_LE(rec.layers_visited, cascade.size());
    }
  }
}

TEST(RunExperiment, RoundLogIsReproducible) {
  const auto run_once = [] {
    const auto s = make_stream(small_stream(3), 12);
    TaskModel model = small_model();
    MemoryStore store(20, 1);
    MetricsAccumulator metrics;
    Cascade cascade(Strategy::flat, DetectorConfig{}, ClassifierConfig{}, 5);
    CascadeDetector det(cascade, 10);
    std::ostringstream out;
    write_round_log_csv(out, run_experiment(s, model, det, store, metrics).logs);
    return out.str();
  };
  const auto a = run_once();
  EXPECT_EQ(a, run_once());
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "round,role,sample_idx,true_task,true_label,verdict,pred_task,pred_label,layers_visited");
}

TEST(RunExperiment, BaselineDetectorRuns) {
  const auto s = make_stream(small_stream(3));
  TaskModel model = small_model();
  MemoryStore store(20, 1);
  MetricsAccumulator metrics;
  BaselineDetector det(ScoreKind::energy);
  const auto result = run_experiment(s, model, det, store, metrics);
  for (const auto& log : result.logs) {
    for (const auto& rec : log.records) EXPECT_EQ(rec.layers_visited, 0u);
  }
  EXPECT_GT(result.report.f1_mean, 0.0);
}

TEST(RunExperiment, RequiresBootstrapRound) {
  Stream s;
  s.rounds.push_back(Round{RoundRole::id, 0, {}});
  TaskModel model = small_model();
  MemoryStore store(20, 1);
  MetricsAccumulator metrics;
  OracleDetector det;
  EXPECT_THROW(run_experiment(s, model, det, store, metrics), DomainError);
}

TEST(RoundLogCsv, BootstrapEmitsNoRowsAndOodHasSentinels) {
  RoundLog boot;
  boot.role = RoundRole::bootstrap;
  boot.records.push_back({});
  RoundLog ood;
  ood.round = 1;
  ood.role = RoundRole::ood;
  ood.records.push_back({0, 2, 1, false, -1, -1, 3});
  ood.records.push_back({1, 1, 0, true, 1, 0, 1});
  std::ostringstream out;
  write_round_log_csv(out, {boot, ood});
  EXPECT_EQ(out.str(),
            "round,role,sample_idx,true_task,true_label,verdict,pred_task,pred_label,layers_visited\n"
            "1,ood,0,2,1,OOD,-1,-1,3\n"
            "1,ood,1,1,0,ID,1,0,1\n");
}

TEST(FeatureCsv, ParsesPools) {
  std::istringstream in(
      "task_id,label,f0,f1\n"
      "1,0,0.5,1.5\n"
      "1,1,-2,3e-1\n"
      "2,0,4,4\n");
  const auto pools = load_feature_csv(in);
  EXPECT_EQ(pools.input_dim, 2u);
  EXPECT_EQ(pools.rows.size(), 2u);
  EXPECT_EQ(pools.rows.at(1).size(), 2u);
  EXPECT_DOUBLE_EQ(pools.rows.at(1)[1].features[1], 0.3);
}

TEST(FeatureCsv, RejectsMalformedInput) {
  std::istringstream bad_header("task,label,f0\n1,0,1\n");
  EXPECT_THROW(load_feature_csv(bad_header), ConfigError);
  std::istringstream bad_number("task_id,label,f0\n1,0,abc\n");
  EXPECT_THROW(load_feature_csv(bad_number), ConfigError);
  std::istringstream gap("task_id,label,f0\n1,0,1\n3,0,1\n");
  EXPECT_THROW(load_feature_csv(gap), ConfigError);
  std::istringstream short_row("task_id,label,f0,f1\n1,0,1\n");
  EXPECT_THROW(load_feature_csv(short_row), ConfigError);
  EXPECT_THROW(load_feature_csv_file("/nonexistent/features.csv"), ConfigError);
}

TEST(FeatureCsv, StreamFromPoolsMatchesSyntheticShape) {
  TaskPools pools;
  pools.input_dim = 6;
  pools.classes = 2;
  Rng rng(1);
  for (int t = 1; t <= 3; ++t) {
    for (int i = 0; i < 100; ++i) {
      Sample s{std::vector<double>(6), t, i % 2};
      for (auto& v : s.features) v = rng.normal() + t;
      pools.rows[t].push_back(s);
    }
  }
  const auto s = stream_from_pools(small_stream(3), pools, 2);
  EXPECT_EQ(s.rounds.size(), 1u + 2u * 3u);
  EXPECT_EQ(s.test_sets.at(2).size(), 20u);  // a fifth of the pool
}

}  // namespace
}  // namespace h2st

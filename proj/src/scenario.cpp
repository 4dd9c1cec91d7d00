#include "h2st/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>

#include "h2st/errors.hpp"

namespace h2st {

void StreamConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("stream.") + name + " must be at least 1");
  };
  positive(num_tasks, "num_tasks");
  positive(classes_per_task, "classes_per_task");
  positive(input_dim, "input_dim");
  positive(ood_round_size, "ood_round_size");
  positive(id_round_size, "id_round_size");
  positive(id_rounds_per_task, "id_rounds_per_task");
  positive(batch_size, "batch_size");
  positive(test_size_per_task, "test_size_per_task");
  if (classes_per_task < 2) throw ConfigError("stream.classes_per_task must be at least 2");
  if (!(ood_mix_fraction >= 0.0 && ood_mix_fraction <= 1.0)) {
    throw ConfigError("stream.ood_mix_fraction must lie in [0, 1]");
  }
}

std::vector<SyntheticTaskSpec> make_synthetic_specs(const StreamConfig& config,
                                                    const SyntheticLayout& layout,
                                                    std::uint64_t seed) {
  config.validate();
  if (!(layout.sigma > 0.0)) throw ConfigError("synthetic sigma must be positive");
  Rng rng(seed);
  std::vector<SyntheticTaskSpec> specs(config.num_tasks);
  for (auto& spec : specs) {
    std::vector<double> center(config.input_dim);
    for (double& c : center) c = layout.task_spread * rng.normal();
    spec.sigma = layout.sigma;
    spec.class_means.resize(config.classes_per_task);
    for (auto& mean : spec.class_means) {
      mean.resize(config.input_dim);
      for (std::size_t d = 0; d < config.input_dim; ++d) {
        mean[d] = center[d] + layout.class_spread * rng.normal();
      }
    }
  }
  return specs;
}

std::string_view to_string(RoundRole role) {
  switch (role) {
    case RoundRole::bootstrap: return "bootstrap";
    case RoundRole::ood: return "ood";
    case RoundRole::id: return "id";
  }
  return "unknown";
}

namespace {

using Sampler = std::function<Sample(int task, Rng& rng)>;

std::vector<Sample> draw_segmented(std::size_t count, std::size_t segment,
                                   const std::vector<int>& segment_tasks, const Sampler& sampler,
                                   Rng& rng) {
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t s = 0; out.size() < count; ++s) {
    const int task = segment_tasks[s];
    for (std::size_t k = 0; k < segment && out.size() < count; ++k) out.push_back(sampler(task, rng));
  }
  return out;
}

Stream build_stream(const StreamConfig& config, const Sampler& sampler,
                    std::map<int, std::vector<Sample>> test_sets, std::uint64_t seed) {
  config.validate();
  Stream stream;
  stream.input_dim = config.input_dim;
  stream.classes_per_task = config.classes_per_task;
  stream.batch_size = config.batch_size;
  stream.test_sets = std::move(test_sets);

  Rng rng(derive_seed(seed, "stream"));
  Rng order_rng(derive_seed(seed, "segment-order"));
  const std::size_t seg = config.segment();

  Round boot;
  boot.role = RoundRole::bootstrap;
  boot.task = 1;
  for (std::size_t k = 0; k < config.ood_round_size; ++k) boot.samples.push_back(sampler(1, rng));
  stream.rounds.push_back(std::move(boot));

  for (int task = 2; task <= static_cast<int>(config.num_tasks); ++task) {
    const std::size_t ood_segments = (config.ood_round_size + seg - 1) / seg;
    // An exact share of segments comes from already-learned tasks.
    const auto mixed = static_cast<std::size_t>(
        std::llround(config.ood_mix_fraction * static_cast<double>(ood_segments)));
    std::vector<int> ood_tasks(ood_segments, task);
    for (std::size_t k = 0; k < mixed; ++k) {
      ood_tasks[k] = 1 + static_cast<int>(order_rng.below(static_cast<std::size_t>(task - 1)));
    }
    if (mixed > 0) order_rng.shuffle(ood_tasks);
    Round ood;
    ood.role = RoundRole::ood;
    ood.task = task;
    ood.samples = draw_segmented(config.ood_round_size, seg, ood_tasks, sampler, rng);
    stream.rounds.push_back(std::move(ood));

    for (std::size_t r = 0; r < config.id_rounds_per_task; ++r) {
      const std::size_t segments = (config.id_round_size + seg - 1) / seg;
      std::vector<int> perm(static_cast<std::size_t>(task));
      for (int t = 1; t <= task; ++t) perm[static_cast<std::size_t>(t - 1)] = t;
      order_rng.shuffle(perm);
      std::vector<int> seg_tasks;
      for (std::size_t s = 0; s < segments; ++s) seg_tasks.push_back(perm[s % perm.size()]);
      order_rng.shuffle(seg_tasks);
      Round id;
      id.role = RoundRole::id;
      id.samples = draw_segmented(config.id_round_size, seg, seg_tasks, sampler, rng);
      stream.rounds.push_back(std::move(id));
    }
  }
  return stream;
}

}  // namespace

Stream generate_stream(const StreamConfig& config, const std::vector<SyntheticTaskSpec>& specs,
                       std::uint64_t seed) {
  if (specs.size() != config.num_tasks) {
    throw DomainError("generate_stream: expected " + std::to_string(config.num_tasks) +
                      " task specs, got " + std::to_string(specs.size()));
  }
  for (const auto& spec : specs) {
    if (spec.class_means.size() != config.classes_per_task) {
      throw DomainError("generate_stream: class count mismatch in task spec");
    }
    for (const auto& m : spec.class_means) {
      if (m.size() != config.input_dim) throw DimensionError("generate_stream: mean length mismatch");
    }
  }
  Sampler sampler = [&specs](int task, Rng& rng) {
    const auto& spec = specs[static_cast<std::size_t>(task - 1)];
    Sample s;
    s.task_id = task;
    s.label = static_cast<int>(rng.below(spec.class_means.size()));
    const auto& mean = spec.class_means[static_cast<std::size_t>(s.label)];
    s.features.resize(mean.size());
    for (std::size_t d = 0; d < mean.size(); ++d) s.features[d] = mean[d] + spec.sigma * rng.normal();
    return s;
  };

  std::map<int, std::vector<Sample>> tests;
  Rng test_rng(derive_seed(seed, "test-sets"));
  for (int task = 1; task <= static_cast<int>(config.num_tasks); ++task) {
    auto& set = tests[task];
    for (std::size_t k = 0; k < config.test_size_per_task; ++k) set.push_back(sampler(task, test_rng));
  }
  return build_stream(config, sampler, std::move(tests), seed);
}

TaskPools load_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("feature csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "task_id" || header[1] != "label") {
    throw ConfigError("feature csv: header must be task_id,label,f0,...");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[d + 2] != "f" + std::to_string(d)) {
      throw ConfigError("feature csv: expected column f" + std::to_string(d));
    }
  }

  TaskPools pools;
  pools.input_dim = dim;
  int max_label = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc() || ptr != comma) {
        throw ConfigError("feature csv: bad number on line " + std::to_string(line_no));
      }
      values.push_back(v);
      p = comma + 1;
    }
    if (values.size() != dim + 2) {
      throw ConfigError("feature csv: wrong column count on line " + std::to_string(line_no));
    }
    Sample s;
    s.task_id = static_cast<int>(values[0]);
    s.label = static_cast<int>(values[1]);
    if (s.task_id < 1 || s.label < 0 || values[0] != s.task_id || values[1] != s.label) {
      throw ConfigError("feature csv: task_id must be >= 1 and label >= 0 integers (line " +
                        std::to_string(line_no) + ")");
    }
    s.features.assign(values.begin() + 2, values.end());
    max_label = std::max(max_label, s.label);
    pools.rows[s.task_id].push_back(std::move(s));
  }
  if (pools.rows.empty()) throw ConfigError("feature csv: no rows");
  int expected = 1;
  for (const auto& [task, rows] : pools.rows) {
    if (task != expected++) throw ConfigError("feature csv: task ids must be consecutive from 1");
  }
  pools.classes = static_cast<std::size_t>(max_label + 1);
  return pools;
}

TaskPools load_feature_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("feature csv: cannot open " + path);
  return load_feature_csv(in);
}

Stream stream_from_pools(const StreamConfig& config, const TaskPools& pools, std::uint64_t seed) {
  if (pools.rows.size() != config.num_tasks) {
    throw DomainError("stream_from_pools: pool has " + std::to_string(pools.rows.size()) +
                      " tasks, config expects " + std::to_string(config.num_tasks));
  }
  if (pools.input_dim != config.input_dim) {
    throw DimensionError("stream_from_pools: feature width differs from stream.input_dim");
  }
  Rng split_rng(derive_seed(seed, "pool-split"));
  auto train = std::make_shared<std::map<int, std::vector<Sample>>>();
  std::map<int, std::vector<Sample>> tests;
  for (const auto& [task, rows] : pools.rows) {
    std::vector<Sample> shuffled = rows;
    split_rng.shuffle(shuffled);
    const std::size_t hold = std::min(config.test_size_per_task, shuffled.size() / 5);
    tests[task].assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(hold));
    (*train)[task].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(hold), shuffled.end());
    if ((*train)[task].empty()) throw DomainError("stream_from_pools: task with no training rows");
  }
  Sampler sampler = [train](int task, Rng& rng) {
    const auto& rows = train->at(task);
    return rows[rng.below(rows.size())];
  };
  return build_stream(config, sampler, std::move(tests), seed);
}

CascadeDetector::CascadeDetector(Cascade& cascade, std::size_t batch_size)
    : cascade_(cascade), batch_size_(batch_size) {
  if (batch_size_ == 0) throw DomainError("CascadeDetector: batch size must be at least 1");
}

std::vector<SampleVerdict> CascadeDetector::detect_round(std::span<const Sample> samples,
                                                         const std::set<int>&,
                                                         const TaskModel& model,
                                                         MemoryStore& store) {
  std::vector<SampleVerdict> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size_) {
    const auto chunk = samples.subspan(start, std::min(batch_size_, samples.size() - start));
    const auto trace = detect(cascade_, features_of(chunk), store, model);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      out.push_back({trace.verdict, trace.layers_visited(), false});
    }
  }
  return out;
}

void CascadeDetector::on_task_learned(int task, const TaskModel& model) {
  if (cascade_.strategy() == Strategy::single) {
    cascade_.ensure_unified_layer(model.feature_dim());
  } else {
    cascade_.add_layer(task, model.feature_dim());
  }
}

std::string CascadeDetector::name() const { return std::string(to_string(cascade_.strategy())); }

std::vector<SampleVerdict> BaselineDetector::detect_round(std::span<const Sample> samples,
                                                          const std::set<int>& learned,
                                                          const TaskModel& model, MemoryStore&) {
  const Matrix feats = model.extract_batch(features_of(samples));
  std::vector<std::map<int, double>> scores(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    for (int task : learned) {
      const auto z = model.logits(samples[r].features, task);
      scores[r][task] = score(kind_, z, feats.row(r));
    }
  }

  ThresholdTable table;
  table.kind = kind_;
  for (int task : learned) {
    std::vector<double> pos, neg;
    for (std::size_t r = 0; r < samples.size(); ++r) {
      (samples[r].task_id == task ? pos : neg).push_back(scores[r].at(task));
    }
    if (pos.empty()) {
      table.thresholds[task] = std::numeric_limits<double>::infinity();
    } else if (neg.empty()) {
      table.thresholds[task] = -std::numeric_limits<double>::infinity();
    } else {
      table.thresholds[task] = threshold_search(pos, neg).threshold;
    }
  }

  std::vector<SampleVerdict> out;
  out.reserve(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto v = decide(table, scores[r]);
    out.push_back({v.verdict, 0, v.ambiguous});
  }
  return out;
}

std::string BaselineDetector::name() const { return "baseline:" + std::string(to_string(kind_)); }

namespace {

std::vector<double> checkpoint_row(const TaskModel& model, const Stream& stream,
                                   const std::vector<int>& learned_order) {
  std::vector<double> row;
  for (int task : learned_order) {
    auto it = stream.test_sets.find(task);
    if (it == stream.test_sets.end() || it->second.empty()) {
      row.push_back(0.0);
      continue;
    }
    row.push_back(100.0 * model.accuracy(it->second));
  }
  return row;
}

}  // namespace

ExperimentResult run_experiment(const Stream& stream, TaskModel& model, StreamDetector& detector,
                                MemoryStore& store, MetricsAccumulator& metrics,
                                std::uint64_t run_id) {
  if (stream.rounds.empty() || stream.rounds.front().role != RoundRole::bootstrap) {
    throw DomainError("run_experiment: stream must open with a bootstrap round");
  }
  ExperimentResult result;
  std::set<int> learned;
  std::vector<int> learned_order;
  int phase = 0;

  auto learn = [&](int task, std::span<const Sample> data) {
    model.train_increment(task, data, store);
    learned.insert(task);
    learned_order.push_back(task);
    detector.on_task_learned(task, model);
    metrics.add_checkpoint(run_id, checkpoint_row(model, stream, learned_order));
  };

  for (std::size_t ri = 0; ri < stream.rounds.size(); ++ri) {
    const Round& round = stream.rounds[ri];
    RoundLog log;
    log.round = ri;
    log.role = round.role;
    log.task = round.task;

    if (round.role == RoundRole::bootstrap) {
      learn(round.task, round.samples);
      log.trained_on = round.samples.size();
      result.logs.push_back(std::move(log));
      continue;
    }
    if (round.role == RoundRole::ood) ++phase;

    const auto verdicts = detector.detect_round(round.samples, learned, model, store);
    if (verdicts.size() != round.samples.size()) {
      throw DimensionError("run_experiment: detector returned the wrong number of verdicts");
    }
    RoundMetrics rm;
    rm.run = run_id;
    rm.round = ri;
    rm.role = std::string(to_string(round.role));
    rm.phase = phase;
    std::vector<Sample> new_task_data;

    for (std::size_t k = 0; k < round.samples.size(); ++k) {
      const Sample& s = round.samples[k];
      const SampleVerdict& v = verdicts[k];
      const bool truly_id = learned.contains(s.task_id);
      RoundLogRecord rec;
      rec.sample_idx = k;
      rec.true_task = s.task_id;
      rec.true_label = s.label;
      rec.verdict_id = v.verdict.is_id();
      rec.layers_visited = v.layers_visited;
      if (v.verdict.is_id()) {
        rec.pred_task = v.verdict.task_id();
        if (model.has_task(rec.pred_task)) rec.pred_label = model.predict_label(s.features, rec.pred_task);
      }
      log.records.push_back(rec);

      rm.counts.add(truly_id, v.verdict.is_id());
      rm.samples += 1;
      rm.layer_visits += v.layers_visited;
      rm.ambiguous += v.ambiguous ? 1 : 0;
      const SampleOutcome outcome{truly_id, s.task_id, v.verdict};
      if (task_correct(outcome)) {
        rm.task_correct += 1;
        if (truly_id) {
          rm.correct_id += 1;
          rm.correct_id_visits += v.layers_visited;
        }
      }
      if (round.role == RoundRole::ood && v.verdict.is_ood()) {
        if (s.task_id == round.task && !truly_id) {
          new_task_data.push_back(s);
        } else {
          log.excluded += 1;
        }
      }
    }
    metrics.add_round(rm);

    if (round.role == RoundRole::ood) {
      if (new_task_data.empty()) {
        log.degenerate = true;
      } else {
        learn(round.task, new_task_data);
        log.trained_on = new_task_data.size();
      }
    }
    result.logs.push_back(std::move(log));
  }
  result.report = metrics.report();
  return result;
}

void write_round_log_csv(std::ostream& out, const std::vector<RoundLog>& logs) {
  out << "round,role,sample_idx,true_task,true_label,verdict,pred_task,pred_label,layers_visited\n";
  for (const auto& log : logs) {
    if (log.role == RoundRole::bootstrap) continue;
    for (const auto& r : log.records) {
      out << log.round << ',' << to_string(log.role) << ',' << r.sample_idx << ',' << r.true_task << ','
          << r.true_label << ',' << (r.verdict_id ? "ID" : "OOD") << ',' << r.pred_task << ','
          << r.pred_label << ',' << r.layers_visited << '\n';
    }
  }
}

}  // namespace h2st

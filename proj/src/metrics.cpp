#include "h2st/metrics.hpp"

#include <json.hpp>

#include "h2st/errors.hpp"

namespace h2st {

void ConfusionCounts::add(bool truly_id, bool predicted_id) {
  if (truly_id) {
    (predicted_id ? tp : fn) += 1;
  } else {
    (predicted_id ? fp : tn) += 1;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

double f1_score(const ConfusionCounts& c) {
  if (c.tp + c.fp + c.fn == 0) throw DomainError("f1_score: undefined without positives");
  if (c.tp == 0) return 0.0;
  const double tp2 = 2.0 * static_cast<double>(c.tp);
  return 100.0 * tp2 / (tp2 + static_cast<double>(c.fp) + static_cast<double>(c.fn));
}

bool task_correct(const SampleOutcome& s) {
  if (!s.truly_id) return s.verdict.is_ood();
  return s.verdict.is_id() && s.verdict.task_id() == s.true_task;
}

double task_accuracy(std::span<const SampleOutcome> records) {
  if (records.empty()) throw EmptyInputError("task_accuracy: no records");
  std::size_t hits = 0;
  for (const auto& r : records) hits += task_correct(r) ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
}

void AccuracyMatrix::add_row(std::vector<double> accuracies) {
  if (accuracies.size() != rows_.size() + 1) {
    throw DimensionError("AccuracyMatrix::add_row: row " + std::to_string(rows_.size()) +
                         " must hold " + std::to_string(rows_.size() + 1) + " values");
  }
  rows_.push_back(std::move(accuracies));
}

AccFt acc_and_ft(const AccuracyMatrix& m) {
  if (m.rows() == 0) throw EmptyInputError("acc_and_ft: empty accuracy matrix");
  const auto& rows = m.data();
  const auto& last = rows.back();
  AccFt out;
  for (double a : last) out.acc += a;
  out.acc /= static_cast<double>(last.size());
  if (last.size() > 1) {
    for (std::size_t j = 0; j + 1 < last.size(); ++j) out.ft += last[j] - rows[j][j];
    out.ft /= static_cast<double>(last.size() - 1);
  }
  return out;
}

void MetricsAccumulator::add_round(const RoundMetrics& round) {
  rounds_[{round.run, round.round}] = round;
}

void MetricsAccumulator::add_checkpoint(std::uint64_t run, std::vector<double> accuracies) {
  matrices_[run].add_row(std::move(accuracies));
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  for (const auto& [key, r] : other.rounds_) rounds_[key] = r;
  for (const auto& [run, m] : other.matrices_) {
    if (!matrices_.contains(run)) matrices_[run] = m;
  }
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport rep;
  std::map<std::pair<std::uint64_t, int>, std::pair<ConfusionCounts, std::pair<std::size_t, std::size_t>>>
      phases;
  std::size_t samples = 0, visits = 0, correct_id = 0, correct_id_visits = 0;
  for (const auto& [key, r] : rounds_) {
    rep.rounds.push_back(r);
    rep.ambiguous_count += r.ambiguous;
    samples += r.samples;
    visits += r.layer_visits;
    correct_id += r.correct_id;
    correct_id_visits += r.correct_id_visits;
    if (r.phase <= 0) continue;  // bootstrap rounds carry no detections
    auto& [counts, ta] = phases[{r.run, r.phase}];
    counts += r.counts;
    ta.first += r.task_correct;
    ta.second += r.samples;
  }
  for (const auto& [key, p] : phases) {
    const auto& [counts, ta] = p;
    if (ta.second == 0) continue;
    rep.phase_ta.push_back(100.0 * static_cast<double>(ta.first) / static_cast<double>(ta.second));
    if (counts.tp + counts.fp + counts.fn > 0) rep.phase_f1.push_back(f1_score(counts));
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  rep.f1_mean = mean(rep.phase_f1);
  rep.ta_mean = mean(rep.phase_ta);
  rep.mean_layer_visits = samples ? static_cast<double>(visits) / static_cast<double>(samples) : 0.0;
  rep.mean_layer_visits_correct_id =
      correct_id ? static_cast<double>(correct_id_visits) / static_cast<double>(correct_id) : 0.0;

  std::vector<double> accs, fts;
  for (const auto& [run, m] : matrices_) {
    if (m.rows() == 0) continue;
    const auto r = acc_and_ft(m);
    accs.push_back(r.acc);
    fts.push_back(r.ft);
    if (matrices_.size() == 1) rep.accuracy_matrix = m.data();
  }
  rep.acc = mean(accs);
  rep.ft = mean(fts);
  return rep;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["f1_mean"] = f1_mean;
  j["ta_mean"] = ta_mean;
  j["acc"] = acc;
  j["ft"] = ft;
  j["ambiguous_count"] = ambiguous_count;
  j["mean_layer_visits"] = mean_layer_visits;
  j["mean_layer_visits_correct_id"] = mean_layer_visits_correct_id;
  j["per_phase"] = {{"f1", phase_f1}, {"ta", phase_ta}};
  nlohmann::ordered_json pr;
  for (const char* k : {"run", "round", "role", "phase", "tp", "fp", "tn", "fn", "samples",
                        "task_correct", "layer_visits", "correct_id", "correct_id_visits",
                        "ambiguous"}) {
    pr[k] = nlohmann::ordered_json::array();
  }
  for (const auto& r : rounds) {
    pr["run"].push_back(r.run);
    pr["round"].push_back(r.round);
    pr["role"].push_back(r.role);
    pr["phase"].push_back(r.phase);
    pr["tp"].push_back(r.counts.tp);
    pr["fp"].push_back(r.counts.fp);
    pr["tn"].push_back(r.counts.tn);
    pr["fn"].push_back(r.counts.fn);
    pr["samples"].push_back(r.samples);
    pr["task_correct"].push_back(r.task_correct);
    pr["layer_visits"].push_back(r.layer_visits);
    pr["correct_id"].push_back(r.correct_id);
    pr["correct_id_visits"].push_back(r.correct_id_visits);
    pr["ambiguous"].push_back(r.ambiguous);
  }
  j["per_round"] = pr;
  j["accuracy_matrix"] = accuracy_matrix;
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  MetricsReport rep;
  try {
    const auto j = nlohmann::json::parse(text);
    rep.f1_mean = j.at("f1_mean").get<double>();
    rep.ta_mean = j.at("ta_mean").get<double>();
    rep.acc = j.at("acc").get<double>();
    rep.ft = j.at("ft").get<double>();
    rep.ambiguous_count = j.at("ambiguous_count").get<std::uint64_t>();
    rep.mean_layer_visits = j.at("mean_layer_visits").get<double>();
    rep.mean_layer_visits_correct_id = j.value("mean_layer_visits_correct_id", 0.0);
    rep.phase_f1 = j.at("per_phase").at("f1").get<std::vector<double>>();
    rep.phase_ta = j.at("per_phase").at("ta").get<std::vector<double>>();
    rep.accuracy_matrix = j.at("accuracy_matrix").get<std::vector<std::vector<double>>>();
    const auto& pr = j.at("per_round");
    const std::size_t n = pr.at("round").size();
    for (std::size_t i = 0; i < n; ++i) {
      RoundMetrics r;
      r.run = pr.at("run")[i].get<std::uint64_t>();
      r.round = pr.at("round")[i].get<std::size_t>();
      r.role = pr.at("role")[i].get<std::string>();
      r.phase = pr.at("phase")[i].get<int>();
      r.counts = {pr.at("tp")[i].get<std::uint64_t>(), pr.at("fp")[i].get<std::uint64_t>(),
                  pr.at("tn")[i].get<std::uint64_t>(), pr.at("fn")[i].get<std::uint64_t>()};
      r.samples = pr.at("samples")[i].get<std::size_t>();
      r.task_correct = pr.at("task_correct")[i].get<std::size_t>();
      r.layer_visits = pr.at("layer_visits")[i].get<std::size_t>();
      r.correct_id = pr.at("correct_id")[i].get<std::size_t>();
      r.correct_id_visits = pr.at("correct_id_visits")[i].get<std::size_t>();
      r.ambiguous = pr.at("ambiguous")[i].get<std::size_t>();
      rep.rounds.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("metrics report: ") + e.what());
  }
  return rep;
}

}  // namespace h2st

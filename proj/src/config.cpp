#include "h2st/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "h2st/errors.hpp"

namespace h2st {

using json = nlohmann::ordered_json;

DetectorChoice DetectorChoice::parse(std::string_view token) {
  DetectorChoice c;
  if (token == "h2st") {
    c.kind = DetectorKind::h2st;
  } else if (token == "c2st") {
    c.kind = DetectorKind::c2st;
  } else if (token == "single_c2st") {
    c.kind = DetectorKind::single_c2st;
  } else if (token.starts_with("baseline:")) {
    const auto kind = parse_score_kind(token.substr(9));
    if (!kind) throw ConfigError("unknown baseline score '" + std::string(token.substr(9)) + "'");
    c.kind = DetectorKind::baseline;
    c.score = *kind;
  } else {
    throw ConfigError("unknown strategy '" + std::string(token) + "'");
  }
  return c;
}

std::string DetectorChoice::token() const {
  switch (kind) {
    case DetectorKind::h2st: return "h2st";
    case DetectorKind::c2st: return "c2st";
    case DetectorKind::single_c2st: return "single_c2st";
    case DetectorKind::baseline: return "baseline:" + std::string(to_string(score));
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  stream.validate();
  try {
    detector.validate();
    ClassifierConfig c = classifier;
    c.input_dim = 1;
    c.validate();
    TaskModelConfig t = task_model;
    t.input_dim = stream.input_dim;
    t.classes_per_task = stream.classes_per_task;
    t.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (memory_capacity == 0) throw ConfigError("memory.capacity must be at least 1");
  if (!(synthetic.sigma > 0.0)) throw ConfigError("synthetic.sigma must be positive");
}

namespace {

json to_document(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["strategy"] = c.strategy.token();
  j["output_dir"] = c.output_dir;
  j["stream"] = {{"num_tasks", c.stream.num_tasks},
                 {"classes_per_task", c.stream.classes_per_task},
                 {"input_dim", c.stream.input_dim},
                 {"ood_round_size", c.stream.ood_round_size},
                 {"id_round_size", c.stream.id_round_size},
                 {"id_rounds_per_task", c.stream.id_rounds_per_task},
                 {"batch_size", c.stream.batch_size},
                 {"segment_length", c.stream.segment_length},
                 {"ood_mix_fraction", c.stream.ood_mix_fraction},
                 {"test_size_per_task", c.stream.test_size_per_task},
                 {"feature_file", c.feature_file}};
  j["synthetic"] = {{"task_spread", c.synthetic.task_spread},
                    {"class_spread", c.synthetic.class_spread},
                    {"sigma", c.synthetic.sigma}};
  j["detector"] = {{"window_size", c.detector.window_size}, {"alpha", c.detector.alpha}};
  j["classifier"] = {{"hidden_units", c.classifier.hidden_units},
                     {"learning_rate", c.classifier.learning_rate}};
  j["memory"] = {{"capacity", c.memory_capacity}};
  j["task_model"] = {{"hidden_units", c.task_model.hidden_units},
                     {"learning_rate", c.task_model.learning_rate},
                     {"epochs", c.task_model.epochs},
                     {"batch_size", c.task_model.batch_size}};
  return j;
}

// Rejects keys of `given` that the canonical document does not have.
void check_keys(const json& given, const json& canonical, const std::string& prefix) {
  if (!given.is_object()) throw ConfigError("config: '" + prefix + "' must be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!canonical.contains(key)) throw ConfigError("config: unknown key '" + path + "'");
    if (canonical.at(key).is_object()) check_keys(value, canonical.at(key), path);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + section + key + "'");
  }
}

}  // namespace

std::string ExperimentConfig::to_json() const { return to_document(*this).dump(2) + "\n"; }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  ExperimentConfig c;
  check_keys(j, to_document(c), "");

  read(j, "seed", c.seed, "");
  read(j, "output_dir", c.output_dir, "");
  if (j.contains("strategy")) {
    std::string token;
    read(j, "strategy", token, "");
    c.strategy = DetectorChoice::parse(token);
  }
  if (j.contains("stream")) {
    const auto& s = j["stream"];
    read(s, "num_tasks", c.stream.num_tasks, "stream.");
    read(s, "classes_per_task", c.stream.classes_per_task, "stream.");
    read(s, "input_dim", c.stream.input_dim, "stream.");
    read(s, "ood_round_size", c.stream.ood_round_size, "stream.");
    read(s, "id_round_size", c.stream.id_round_size, "stream.");
    read(s, "id_rounds_per_task", c.stream.id_rounds_per_task, "stream.");
    read(s, "batch_size", c.stream.batch_size, "stream.");
    read(s, "segment_length", c.stream.segment_length, "stream.");
    read(s, "ood_mix_fraction", c.stream.ood_mix_fraction, "stream.");
    read(s, "test_size_per_task", c.stream.test_size_per_task, "stream.");
    read(s, "feature_file", c.feature_file, "stream.");
  }
  if (j.contains("synthetic")) {
    const auto& s = j["synthetic"];
    read(s, "task_spread", c.synthetic.task_spread, "synthetic.");
    read(s, "class_spread", c.synthetic.class_spread, "synthetic.");
    read(s, "sigma", c.synthetic.sigma, "synthetic.");
  }
  if (j.contains("detector")) {
    read(j["detector"], "window_size", c.detector.window_size, "detector.");
    read(j["detector"], "alpha", c.detector.alpha, "detector.");
  }
  if (j.contains("classifier")) {
    read(j["classifier"], "hidden_units", c.classifier.hidden_units, "classifier.");
    read(j["classifier"], "learning_rate", c.classifier.learning_rate, "classifier.");
  }
  if (j.contains("memory")) read(j["memory"], "capacity", c.memory_capacity, "memory.");
  if (j.contains("task_model")) {
    const auto& t = j["task_model"];
    read(t, "hidden_units", c.task_model.hidden_units, "task_model.");
    read(t, "learning_rate", c.task_model.learning_rate, "task_model.");
    read(t, "epochs", c.task_model.epochs, "task_model.");
    read(t, "batch_size", c.task_model.batch_size, "task_model.");
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void ExperimentConfig::set(std::string_view dotted_key, std::string_view value) {
  json doc = to_document(*this);
  json literal;
  try {
    literal = json::parse(value);
  } catch (const json::parse_error&) {
    literal = std::string(value);
  }
  json* node = &doc;
  std::string_view rest = dotted_key;
  while (true) {
    const auto dot = rest.find('.');
    const std::string key(rest.substr(0, dot));
    if (!node->is_object() || !node->contains(key)) {
      throw ConfigError("config: unknown key '" + std::string(dotted_key) + "'");
    }
    node = &(*node)[key];
    if (dot == std::string_view::npos) break;
    rest = rest.substr(dot + 1);
  }
  *node = literal;
  *this = from_json(doc.dump());
}

ExperimentResult execute_experiment(const ExperimentConfig& config, std::uint64_t run_id) {
  config.validate();
  const std::uint64_t root = config.seed;

  Stream stream;
  if (config.feature_file.empty()) {
    const auto specs = make_synthetic_specs(config.stream, config.synthetic, derive_seed(root, "specs"));
    stream = generate_stream(config.stream, specs, derive_seed(root, "stream"));
  } else {
    const auto pools = load_feature_csv_file(config.feature_file);
    stream = stream_from_pools(config.stream, pools, derive_seed(root, "stream"));
  }

  TaskModelConfig tm = config.task_model;
  tm.input_dim = config.stream.input_dim;
  tm.classes_per_task = config.stream.classes_per_task;
  tm.seed = derive_seed(root, "task_model");
  TaskModel model(tm);
  MemoryStore store(config.memory_capacity, derive_seed(root, "memory"));
  MetricsAccumulator metrics;

  if (config.strategy.kind == DetectorKind::baseline) {
    BaselineDetector detector(config.strategy.score);
    return run_experiment(stream, model, detector, store, metrics, run_id);
  }
  Strategy strategy = Strategy::hierarchical;
  if (config.strategy.kind == DetectorKind::c2st) strategy = Strategy::flat;
  if (config.strategy.kind == DetectorKind::single_c2st) strategy = Strategy::single;
  Cascade cascade(strategy, config.detector, config.classifier, derive_seed(root, "cascade"));
  CascadeDetector detector(cascade, config.stream.batch_size);
  return run_experiment(stream, model, detector, store, metrics, run_id);
}

}  // namespace h2st

#include "h2st/task_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "h2st/errors.hpp"
#include "h2st/kernels.hpp"

namespace h2st {

namespace {

constexpr char kMagic[9] = {'H', '2', 'S', 'T', '-', 'M', 'D', 'L', '\0'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ConfigError("checkpoint: truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("checkpoint: truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void put_layer(std::ostream& out, const DenseLayer& layer) {
  for (double w : layer.weights) put_f64(out, w);
  for (double b : layer.bias) put_f64(out, b);
}

void get_layer(std::istream& in, DenseLayer& layer) {
  for (double& w : layer.weights) w = get_f64(in);
  for (double& b : layer.bias) b = get_f64(in);
}

}  // namespace

void TaskModelConfig::validate() const {
  if (input_dim == 0) throw DomainError("TaskModelConfig: input_dim must be at least 1");
  if (hidden_units.empty()) throw DomainError("TaskModelConfig: extractor needs a hidden layer");
  for (std::size_t h : hidden_units) {
    if (h == 0) throw DomainError("TaskModelConfig: hidden layer width must be at least 1");
  }
  if (classes_per_task < 2) throw DomainError("TaskModelConfig: classes_per_task must be at least 2");
  if (!(learning_rate > 0.0)) throw DomainError("TaskModelConfig: learning_rate must be positive");
  if (batch_size == 0) throw DomainError("TaskModelConfig: batch_size must be at least 1");
}

TaskModel::TaskModel(TaskModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, "extractor"));
  extractor_ = Mlp(config_.input_dim, config_.hidden_units, /*activate_output=*/true, rng);
  head_seed_ = derive_seed(config_.seed, "heads");
  shuffle_state_ = derive_seed(config_.seed, "shuffle");
}

const DenseLayer& TaskModel::head(int task) const {
  auto it = heads_.find(task);
  if (it == heads_.end()) throw DomainError("TaskModel: unknown task " + std::to_string(task));
  return it->second;
}

std::vector<double> TaskModel::extract(std::span<const double> x) const {
  if (x.size() != config_.input_dim) throw DimensionError("TaskModel::extract: input length mismatch");
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.data.begin());
  return extract_batch(m).data;
}

Matrix TaskModel::extract_batch(const Matrix& inputs) const {
  if (inputs.cols != config_.input_dim) {
    throw DimensionError("TaskModel::extract_batch: input width mismatch");
  }
  auto trace = extractor_.forward(inputs);
  return std::move(trace.activations.back());
}

std::vector<double> TaskModel::logits(std::span<const double> x, int task) const {
  const DenseLayer& h = head(task);
  Matrix feat(1, feature_dim());
  const auto f = extract(x);
  std::copy(f.begin(), f.end(), feat.data.begin());
  return h.forward(feat).data;
}

int TaskModel::predict_label(std::span<const double> x, int task) const {
  const auto z = logits(x, task);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double TaskModel::accuracy(std::span<const Sample> samples) const {
  if (samples.empty()) throw EmptyInputError("TaskModel::accuracy: no samples");
  const Matrix feats = extract_batch(features_of(samples));
  std::size_t hits = 0;
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const DenseLayer& h = head(samples[r].task_id);
    Matrix one(1, feats.cols);
    std::copy(feats.row(r).begin(), feats.row(r).end(), one.data.begin());
    const auto z = h.forward(one).data;
    const int pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    hits += pred == samples[r].label ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<int> TaskModel::tasks() const {
  std::vector<int> out;
  for (const auto& [task, h] : heads_) out.push_back(task);
  return out;
}

double TaskModel::loss_and_grad(std::span<const Sample> samples, std::span<const double> weights,
                                std::vector<DenseLayer>* extractor_grads,
                                std::map<int, DenseLayer>* head_grads) const {
  if (samples.empty()) throw EmptyInputError("TaskModel: empty batch");
  if (weights.size() != samples.size()) throw DimensionError("TaskModel: weight count mismatch");
  const auto trace = extractor_.forward(features_of(samples));
  const Matrix& feats = trace.output();
  Matrix grad_feats(feats.rows, feats.cols);
  const bool want_grad = extractor_grads != nullptr;

  // Rows grouped by task so each head runs one batched forward/backward.
  std::map<int, std::vector<std::size_t>> rows_by_task;
  for (std::size_t r = 0; r < samples.size(); ++r) rows_by_task[samples[r].task_id].push_back(r);

  double total = 0.0;
  for (const auto& [task, rows] : rows_by_task) {
    const DenseLayer& h = head(task);
    Matrix sub(rows.size(), feats.cols);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::copy(feats.row(rows[k]).begin(), feats.row(rows[k]).end(), sub.row(k).begin());
    }
    const Matrix z = h.forward(sub);
    Matrix gz(z.rows, z.cols);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Sample& s = samples[rows[k]];
      if (s.label < 0 || static_cast<std::size_t>(s.label) >= h.out) {
        throw DomainError("TaskModel: label out of range for task head");
      }
      const auto zr = z.row(k);
      const double zmax = *std::max_element(zr.begin(), zr.end());
      double denom = 0.0;
      for (double v : zr) denom += std::exp(v - zmax);
      const double lse = zmax + std::log(denom);
      const double w = weights[rows[k]];
      total += w * (lse - zr[static_cast<std::size_t>(s.label)]);
      if (want_grad) {
        for (std::size_t c = 0; c < zr.size(); ++c) {
          const double prob = std::exp(zr[c] - lse);
          gz(k, c) = w * (prob - (static_cast<int>(c) == s.label ? 1.0 : 0.0));
        }
      }
    }
    if (!want_grad) continue;
    DenseLayer hg(h.in, h.out);
    const kernels::AffineDims dims{sub.rows, h.in, h.out};
    kernels::affine_grad_params(sub.data, gz.data, hg.weights, hg.bias, dims);
    Matrix gsub(sub.rows, sub.cols);
    kernels::affine_grad_input(h.weights, gz.data, gsub.data, dims);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::copy(gsub.row(k).begin(), gsub.row(k).end(), grad_feats.row(rows[k]).begin());
    }
    (*head_grads)[task] = std::move(hg);
  }
  if (want_grad) *extractor_grads = extractor_.backward(trace, grad_feats);
  return total;
}

double TaskModel::loss(std::span<const Sample> samples, std::span<const double> weights) const {
  return loss_and_grad(samples, weights, nullptr, nullptr);
}

std::vector<double> TaskModel::gradient(std::span<const Sample> samples,
                                        std::span<const double> weights) const {
  std::vector<DenseLayer> eg;
  std::map<int, DenseLayer> hg;
  loss_and_grad(samples, weights, &eg, &hg);
  std::vector<double> flat;
  flatten_into(eg, flat);
  for (const auto& [task, h] : heads_) {
    auto it = hg.find(task);
    const DenseLayer zero(h.in, h.out);
    flatten_into({it == hg.end() ? zero : it->second}, flat);
  }
  return flat;
}

std::vector<double> TaskModel::parameters() const {
  std::vector<double> flat;
  flatten_into(extractor_.layers(), flat);
  for (const auto& [task, h] : heads_) flatten_into({h}, flat);
  return flat;
}

void TaskModel::set_parameters(std::span<const double> values) {
  std::size_t k = unflatten_from(values, extractor_.layers());
  for (auto& [task, h] : heads_) {
    std::vector<DenseLayer> one{h};
    k += unflatten_from(values.subspan(k), one);
    h = std::move(one.front());
  }
  if (k != values.size()) throw DimensionError("TaskModel::set_parameters: wrong parameter count");
}

void TaskModel::step(std::span<const Sample> samples, std::span<const double> weights) {
  std::vector<DenseLayer> eg;
  std::map<int, DenseLayer> hg;
  loss_and_grad(samples, weights, &eg, &hg);
  extractor_.descend(eg, config_.learning_rate);
  for (auto& [task, g] : hg) {
    DenseLayer& h = heads_.at(task);
    kernels::axpy_descent(h.weights, g.weights, config_.learning_rate);
    kernels::axpy_descent(h.bias, g.bias, config_.learning_rate);
  }
}

TrainingSummary TaskModel::train_increment(int task, std::span<const Sample> data, MemoryStore& store) {
  if (data.empty()) throw EmptyInputError("TaskModel::train_increment: no training data");
  for (const auto& s : data) {
    if (s.task_id != task) throw DomainError("TaskModel::train_increment: task id mismatch");
    if (s.features.size() != config_.input_dim) {
      throw DimensionError("TaskModel::train_increment: input length mismatch");
    }
  }
  if (!heads_.contains(task)) {
    Rng rng(derive_seed(head_seed_, "head", static_cast<std::uint64_t>(task)));
    heads_.emplace(task, DenseLayer::xavier(feature_dim(), config_.classes_per_task, rng));
  }

  // Replay comes only from buffers of other tasks present before this call.
  bool can_replay = false;
  for (int t : store.tasks()) can_replay = can_replay || (t != task && store.has_task(t));

  TrainingSummary summary;
  summary.task = task;
  Rng rng(shuffle_state_);
  shuffle_state_ = rng.next_u64();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
      const std::size_t end = std::min(order.size(), start + config_.batch_size);
      std::vector<Sample> batch;
      batch.reserve(2 * (end - start));
      for (std::size_t k = start; k < end; ++k) batch.push_back(data[order[k]]);
      const std::size_t current = batch.size();
      std::size_t replayed = 0;
      if (can_replay) {
        auto replay = store.draw_even(current);
        replayed = replay.size();
        ++summary.replay_draws;
        batch.insert(batch.end(), std::make_move_iterator(replay.begin()),
                     std::make_move_iterator(replay.end()));
      }
      // Mean loss over the current batch plus mean loss over the replay batch.
      std::vector<double> weights(batch.size(), 1.0 / static_cast<double>(current));
      for (std::size_t k = current; k < batch.size(); ++k) {
        weights[k] = 1.0 / static_cast<double>(replayed);
      }
      epoch_loss += loss(batch, weights);
      step(batch, weights);
      ++batches;
    }
    summary.epoch_loss.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(batches, 1)));
  }

  store.store(task, data);
  return summary;
}

void TaskModel::save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  out.put(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(config_.input_dim));
  put_u32(out, static_cast<std::uint32_t>(config_.hidden_units.size()));
  for (std::size_t h : config_.hidden_units) put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(config_.classes_per_task));
  put_u32(out, static_cast<std::uint32_t>(heads_.size()));
  for (const auto& [task, h] : heads_) put_u32(out, static_cast<std::uint32_t>(task));
  for (const auto& layer : extractor_.layers()) put_layer(out, layer);
  for (const auto& [task, h] : heads_) put_layer(out, h);
  if (!out) throw ConfigError("checkpoint: write failed");
}

TaskModel TaskModel::load(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("checkpoint: bad magic");
  }
  const int version = in.get();
  if (version != kVersion) throw ConfigError("checkpoint: unsupported version");

  TaskModel model;
  model.config_.input_dim = get_u32(in);
  const std::uint32_t depth = get_u32(in);
  model.config_.hidden_units.assign(depth, 0);
  for (auto& h : model.config_.hidden_units) h = get_u32(in);
  model.config_.classes_per_task = get_u32(in);
  model.config_.validate();

  Rng unused(0);
  model.extractor_ = Mlp(model.config_.input_dim, model.config_.hidden_units, true, unused);
  const std::uint32_t n_heads = get_u32(in);
  std::vector<int> ids(n_heads);
  for (auto& id : ids) id = static_cast<int>(get_u32(in));
  for (auto& layer : model.extractor_.layers()) get_layer(in, layer);
  for (int id : ids) {
    DenseLayer h(model.feature_dim(), model.config_.classes_per_task);
    get_layer(in, h);
    model.heads_.emplace(id, std::move(h));
  }
  return model;
}

}  // namespace h2st

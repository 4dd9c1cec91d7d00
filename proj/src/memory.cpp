#include "h2st/memory.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "h2st/errors.hpp"

namespace h2st {

Matrix features_of(std::span<const Sample> samples) {
  Matrix m;
  if (samples.empty()) return m;
  m.rows = samples.size();
  m.cols = samples.front().features.size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& s : samples) {
    if (s.features.size() != m.cols) throw DimensionError("features_of: ragged sample features");
    m.data.insert(m.data.end(), s.features.begin(), s.features.end());
  }
  return m;
}

MemoryStore::MemoryStore(std::size_t capacity_per_task, std::uint64_t seed)
    : capacity_(capacity_per_task), rng_(seed) {
  if (capacity_ == 0) throw DomainError("MemoryStore: capacity must be at least 1");
}

void MemoryStore::store(int task, std::span<const Sample> samples) {
  for (const auto& s : samples) {
    if (s.task_id != task) {
      throw DomainError("MemoryStore::store: sample task " + std::to_string(s.task_id) +
                        " does not match " + std::to_string(task));
    }
  }

  std::map<int, std::vector<Sample>> by_class;
  if (auto it = buffers_.find(task); it != buffers_.end()) {
    for (auto& s : it->second) by_class[s.label].push_back(std::move(s));
  }
  for (const auto& s : samples) by_class[s.label].push_back(s);
  if (by_class.empty()) return;

  // Balanced quotas: every class gets `base`, then one extra per class
  // (lowest label first) while capacity and the class's supply allow.
  std::size_t smallest = SIZE_MAX;
  for (const auto& [label, pool] : by_class) smallest = std::min(smallest, pool.size());
  const std::size_t classes = by_class.size();
  const std::size_t base = std::min(capacity_ / classes, smallest);
  std::size_t spare = capacity_ - base * classes;

  std::vector<Sample> kept;
  for (auto& [label, pool] : by_class) {
    std::size_t quota = base;
    if (spare > 0 && pool.size() > base) {
      ++quota;
      --spare;
    }
    rng_.shuffle(pool);
    kept.insert(kept.end(), std::make_move_iterator(pool.begin()),
                std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(quota)));
  }
  buffers_[task] = std::move(kept);
}

std::vector<Sample> MemoryStore::draw(int task, std::size_t n) {
  auto it = buffers_.find(task);
  if (it == buffers_.end() || it->second.empty()) {
    throw EmptyInputError("MemoryStore::draw: no samples stored for task " + std::to_string(task));
  }
  const auto& buf = it->second;
  std::vector<Sample> out;
  out.reserve(n);
  if (n <= buf.size()) {
    std::vector<std::size_t> idx(buf.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n positions become a uniform subset.
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(idx[k], idx[k + rng_.below(idx.size() - k)]);
      out.push_back(buf[idx[k]]);
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) out.push_back(buf[rng_.below(buf.size())]);
  }
  return out;
}

std::vector<Sample> MemoryStore::draw_even(std::size_t n) {
  std::vector<int> live;
  for (const auto& [task, buf] : buffers_) {
    if (!buf.empty()) live.push_back(task);
  }
  if (live.empty()) throw EmptyInputError("MemoryStore::draw_even: all buffers are empty");

  const std::size_t base = n / live.size();
  const std::size_t extra = n % live.size();
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < live.size(); ++k) {
    const std::size_t count = base + (k < extra ? 1 : 0);
    if (count == 0) continue;
    auto part = draw(live[k], count);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

const std::vector<Sample>& MemoryStore::buffer(int task) const {
  static const std::vector<Sample> kEmpty;
  auto it = buffers_.find(task);
  return it == buffers_.end() ? kEmpty : it->second;
}

bool MemoryStore::has_task(int task) const {
  auto it = buffers_.find(task);
  return it != buffers_.end() && !it->second.empty();
}

std::vector<int> MemoryStore::tasks() const {
  std::vector<int> out;
  for (const auto& [task, buf] : buffers_) out.push_back(task);
  return out;
}

}  // namespace h2st

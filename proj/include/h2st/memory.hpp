#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "h2st/matrix.hpp"
#include "h2st/rng.hpp"

namespace h2st {

struct Sample {
  std::vector<double> features;
  int task_id = 0;
  int label = 0;

  bool operator==(const Sample&) const = default;
};

/// Stacks sample features as matrix rows.
Matrix features_of(std::span<const Sample> samples);

// Per-task replay buffers with class-balanced retention and seeded draws.
class MemoryStore {
 public:
  MemoryStore(std::size_t capacity_per_task, std::uint64_t seed);

  /// Merges `samples` into the buffer of `task` and re-selects a
  /// class-balanced subset of at most capacity() samples: per-class counts
  /// differ by at most one, and selection within a class is seeded-uniform.
  /// Throws DomainError if any sample carries another task id.
  void store(int task, std::span<const Sample> samples);

  /// n samples from one buffer; without replacement when n fits in the
  /// buffer, uniformly with replacement otherwise.
  std::vector<Sample> draw(int task, std::size_t n);

  /// n samples split as evenly as possible over all non-empty buffers in
  /// task order; the remainder goes to the lowest task ids.
  std::vector<Sample> draw_even(std::size_t n);

  const std::vector<Sample>& buffer(int task) const;
  bool has_task(int task) const;
  std::vector<int> tasks() const;
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return buffers_.empty(); }

 private:
  std::size_t capacity_;
  Rng rng_;
  std::map<int, std::vector<Sample>> buffers_;
};

}  // namespace h2st

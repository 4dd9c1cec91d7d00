#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace h2st::stats {

/// Regularized incomplete Beta function I_x(a, b).
/// Throws DomainError unless 0 <= x <= 1, a > 0 and b > 0.
double reg_inc_beta(double x, double a, double b);

/// Inverse of reg_inc_beta in x: the p-quantile of Beta(a, b).
///
/// Bracketed root search on [0, 1]; never leaves the bracket, so it cannot
/// diverge. Q(0) = 0 and Q(1) = 1 exactly.
double beta_quantile(double p, double a, double b);

struct CpInterval {
  double lower = 0.0;
  double upper = 1.0;

  bool contains(double value) const { return lower <= value && value <= upper; }
  double width() const { return upper - lower; }
};

/// Two-sided exact binomial (Clopper-Pearson) interval for `successes` out
/// of `trials` at significance `alpha`. lower is 0 when successes == 0 and
/// upper is 1 when successes == trials.
CpInterval clopper_pearson(std::uint64_t successes, std::uint64_t trials, double alpha);

struct MuHat {
  double mu = 0.0;
  std::size_t pairs = 0;
};

// Fixed-capacity ring of (source_correct, target_correct) pairs. Backs the
// windowed accuracy estimate of a source/target classifier.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity);

  void push(bool source_correct, bool target_correct);

  /// Fraction of correct indicators over the retained pairs.
  /// Throws EmptyInputError when no pair has been pushed.
  MuHat mu_hat() const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return slots_.size(); }
  bool empty() const { return size_ == 0; }

  /// Number of correct indicators currently in the window (0..2*size()).
  std::size_t correct() const { return correct_; }

 private:
  // Per slot: number of correct indicators in the pair (0, 1 or 2).
  std::vector<std::uint8_t> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::size_t correct_ = 0;
};

}  // namespace h2st::stats

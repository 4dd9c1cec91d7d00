#include "h2st/stats.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <string>

#include "h2st/errors.hpp"

namespace h2st::stats {

namespace {

constexpr int kMaxFractionTerms = 1000;
constexpr double kFractionEps = 1e-16;
constexpr double kTiny = 1e-300;

constexpr double kQuantileTol = 1e-12;
constexpr int kQuantileMaxIter = 200;

void check_shape(double a, double b, const char* who) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError(std::string(who) + ": shape parameters must be positive and finite");
  }
}

// Continued fraction for I_x(a,b) by the modified Lentz method.
double beta_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxFractionTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kFractionEps) break;
  }
  return h;
}

// x^a (1-x)^b / B(a,b), evaluated in log space.
double beta_prefactor(double x, double a, double b) {
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  return std::exp(log_front);
}

}  // namespace

double reg_inc_beta(double x, double a, double b) {
  check_shape(a, b, "reg_inc_beta");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double front = beta_prefactor(x, a, b);
  double value;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    value = front * beta_fraction(x, a, b) / a;
  } else {
    value = 1.0 - front * beta_fraction(1.0 - x, b, a) / b;
  }
  return std::clamp(value, 0.0, 1.0);
}

double beta_quantile(double p, double a, double b) {
  check_shape(a, b, "beta_quantile");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("beta_quantile: p must lie in [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  // Brent's method on f(x) = I_x(a,b) - p over the bracket [0, 1]. The
  // stopping width shrinks with the distance to the nearer boundary, where
  // the CDF of a skewed Beta is steepest.
  auto f = [&](double x) { return reg_inc_beta(x, a, b) - p; };
  double lo = 0.0, hi = 1.0;
  double f_lo = -p, f_hi = 1.0 - p;

  double c = lo, f_c = f_lo;
  double d = hi - lo, e = d;
  for (int iter = 0; iter < kQuantileMaxIter; ++iter) {
    if ((f_hi > 0.0) == (f_c > 0.0)) {
      c = lo;
      f_c = f_lo;
      d = e = hi - lo;
    }
    if (std::fabs(f_c) < std::fabs(f_hi)) {
      lo = hi;
      hi = c;
      c = lo;
      f_lo = f_hi;
      f_hi = f_c;
      f_c = f_lo;
    }
    const double near_edge = std::min(hi, 1.0 - hi);
    const double tol = 2.0 * DBL_EPSILON * std::fabs(hi) + 0.5 * kQuantileTol * near_edge + DBL_MIN;
    const double half = 0.5 * (c - hi);
    if (std::fabs(half) <= tol || f_hi == 0.0) return hi;

    if (std::fabs(e) >= tol && std::fabs(f_lo) > std::fabs(f_hi)) {
      // Inverse quadratic interpolation or secant step.
      double s = f_hi / f_lo;
      double pp, qq;
      if (lo == c) {
        pp = 2.0 * half * s;
        qq = 1.0 - s;
      } else {
        const double q0 = f_lo / f_c;
        const double r = f_hi / f_c;
        pp = s * (2.0 * half * q0 * (q0 - r) - (hi - lo) * (r - 1.0));
        qq = (q0 - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (pp > 0.0) qq = -qq;
      pp = std::fabs(pp);
      if (2.0 * pp < std::min(3.0 * half * qq - std::fabs(tol * qq), std::fabs(e * qq))) {
        e = d;
        d = pp / qq;
      } else {
        d = half;
        e = d;
      }
    } else {
      d = half;
      e = d;
    }
    lo = hi;
    f_lo = f_hi;
    hi += (std::fabs(d) > tol) ? d : std::copysign(tol, half);
    hi = std::clamp(hi, 0.0, 1.0);
    f_hi = f(hi);
  }
  return hi;
}

CpInterval clopper_pearson(std::uint64_t successes, std::uint64_t trials, double alpha) {
  if (trials == 0) throw DomainError("clopper_pearson: trials must be at least 1");
  if (successes > trials) throw DomainError("clopper_pearson: successes exceed trials");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("clopper_pearson: alpha must lie in (0, 1)");

  const double s = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  CpInterval out;
  out.lower = successes == 0 ? 0.0 : beta_quantile(alpha / 2.0, s, n - s + 1.0);
  out.upper = successes == trials ? 1.0 : beta_quantile(1.0 - alpha / 2.0, s + 1.0, n - s);
  return out;
}

SlidingWindow::SlidingWindow(std::size_t capacity) : slots_(capacity, 0) {
  if (capacity == 0) throw DomainError("SlidingWindow: capacity must be at least 1");
}

void SlidingWindow::push(bool source_correct, bool target_correct) {
  const auto hits = static_cast<std::uint8_t>(int(source_correct) + int(target_correct));
  const std::size_t cap = slots_.size();
  if (size_ == cap) {
    correct_ -= slots_[head_];
  } else {
    ++size_;
  }
  slots_[head_] = hits;
  correct_ += hits;
  head_ = (head_ + 1) % cap;
}

MuHat SlidingWindow::mu_hat() const {
  if (size_ == 0) throw EmptyInputError("SlidingWindow::mu_hat: window is empty");
  return {static_cast<double>(correct_) / (2.0 * static_cast<double>(size_)), size_};
}

}  // namespace h2st::stats

#pragma once

#include <cmath>
#include <limits>

namespace lil {

/// L(x) = ln max(e, x). Throws std::domain_error for negative or non-finite x.
double L(double x);
/// L(L(x)).
double LL(double x);
/// L(L(L(x))).
double LLL(double x);

/// exp((L t)^tau) for tau in [0, 1]. Returns +infinity when the exponent exceeds
/// kMaxExponent instead of overflowing.
double f_tau(double t, double tau);
/// (L t)^tau, the exponent of f_tau; never overflows.
double log_f_tau(double t, double tau);

inline constexpr double kMaxExponent = 700.0;

/// Position of a nonnegative real x that may lie far outside the double range.
///
/// The point is carried by log_x = ln x (may be -inf for x = 0 or +inf once
/// x exceeds exp(DBL_MAX)) and log_lx = ln L(x), which stays finite up to
/// x = exp(exp(DBL_MAX)). Every slowly varying function in this library is
/// evaluated from these two numbers, so L, LL and LLL are exact at any depth.
struct LogTower {
  double log_x = -std::numeric_limits<double>::infinity();
  double log_lx = 0.0;

  static LogTower of(double x);
  static LogTower from_log(double log_x);
  /// x with ln L(x) = w; requires w >= 0 (x >= e).
  static LogTower from_loglog(double w);

  /// The point exp(a * ln x + b), a > 0. Stays accurate when ln x overflows.
  LogTower affine(double a, double b) const;

  double Lx() const { return log_x > 1.0 ? log_x : 1.0; }
  double LLx() const { return log_lx > 1.0 ? log_lx : 1.0; }
  double LLLx() const {
    const double ll = LLx();
    return ll > M_E ? std::log(ll) : 1.0;
  }
  bool finite() const { return std::isfinite(log_x); }
};

}  // namespace lil

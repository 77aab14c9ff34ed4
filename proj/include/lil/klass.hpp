#pragma once

#include <stdexcept>
#include <vector>

#include "lil/distmodel.hpp"
#include "lil/logscale.hpp"

namespace lil {

/// G cannot be inverted at the requested argument.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// G(t) = t^2 / (H(t) + t M(t)), its inverse K and gamma_n = sqrt(2) K(n/LLn) LLn.
///
/// G is tabulated eagerly on t0 * 1.05^k; K brackets from the table and then
/// bisects in t until the bracket cannot shrink, so K is monotone bit for bit.
class KlassEval {
 public:
  explicit KlassEval(DistributionSpec dist, double rel_tol = 1e-10);

  const DistributionSpec& dist() const { return dist_; }
  double rel_tol() const { return tol_; }

  double G(double t) const;
  double K(double x) const;
  double gamma_n(double n) const;

  /// sqrt(D(K(x))), equal to K(x)/sqrt(x); nondecreasing toward sqrt(EX^2).
  double K_over_sqrt(double x) const;
  /// D(K(x))/K(x), equal to K(x)/x; nonincreasing toward 0.
  double K_over_x(double x) const;

  /// K at a point that may lie beyond the double range.
  LogTower K_tower(const LogTower& x) const;
  /// ln(gamma_n^2 / n) = ln 2 + ln LLn + ln D(K(n/LLn)).
  double log_h_gamma(const LogTower& n) const;

  const std::vector<double>& grid_t() const { return grid_t_; }
  const std::vector<double>& grid_G() const { return grid_g_; }

 private:
  DistributionSpec dist_;
  double tol_;
  std::vector<double> grid_t_;
  std::vector<double> grid_g_;
};

}  // namespace lil

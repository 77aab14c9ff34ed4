#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lil/logscale.hpp"
#include "lil/rng.hpp"

namespace lil {

/// Raised for E|X| = infinity where a first moment is required.
class InfiniteMeanError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file; message carries "source:line: reason".
class InputFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P(|X| > t) together with whether t lay beyond the tabulated range.
struct TailValue {
  double p = 0.0;
  bool extrapolated = false;
};

/// P(|X| > s) = exp(log_c) * s^-beta for ln s >= log_threshold.
struct PowerTail {
  double log_c = 0.0;
  double beta = 0.0;
  double log_threshold = 0.0;
};

/// A moment that may be infinite; infinity is a flag, never arithmetic.
struct MomentValue {
  double value = 0.0;
  bool divergent = false;
};

/// Tabulated tail t -> P(|X| > t) with log-log linear interpolation.
///
/// Below the first abscissa the tail is held at its first value (an atom of
/// mass 1 - p0 at zero). Beyond the last abscissa a power law through the last
/// two points is used and flagged; a final probability of zero means bounded
/// support instead.
class TailTable {
 public:
  TailTable(std::vector<double> t, std::vector<double> p);

  /// Reads the `# lil-tail-table v1` two-column format.
  static TailTable parse(std::istream& in, const std::string& source = "<tail-table>");
  static TailTable load(const std::filesystem::path& path);

  TailValue eval(double t) const;
  /// Smallest t with tail(t) <= u, for u in (0, 1].
  double quantile(double u) const;
  std::optional<PowerTail> power_tail() const;

  const std::vector<double>& t() const { return t_; }
  const std::vector<double>& p() const { return p_; }
  /// Fitted exponent of the extrapolated tail (0 when support is bounded).
  double tail_exponent() const { return beta_; }

 private:
  std::vector<double> t_;
  std::vector<double> p_;
  double beta_ = 0.0;
};

enum class DistKind { rademacher, gaussian, sym_pareto, tail_table };

/// A symmetric, mean-zero law: source of tail, H, M and samples.
class DistributionSpec {
 public:
  static DistributionSpec rademacher();
  static DistributionSpec gaussian(double sigma);
  /// Density (beta xmin^beta / 2) |x|^-(beta+1) on |x| >= xmin.
  static DistributionSpec sym_pareto(double beta, double xmin);
  /// sym_pareto(2, 1): density |x|^-3 on |x| >= 1.
  static DistributionSpec feller_pruitt();
  static DistributionSpec tail_table(TailTable table);

  DistKind kind() const { return kind_; }
  std::string name() const;
  double sigma() const { return a_; }
  double beta() const { return a_; }
  double xmin() const { return b_; }
  const TailTable& table() const;

  TailValue tail_eval(double t) const;
  double tail(double t) const { return tail_eval(t).p; }
  /// ln P(|X| > s) given ln s.
  double log_tail(double log_s) const;
  std::optional<PowerTail> power_tail() const;

  /// E X^2 I{|X| <= t}; closed form for built-ins, quadrature for tables.
  double H(double t) const;
  /// E |X| I{|X| > t}. Throws InfiniteMeanError when E|X| = infinity.
  double M(double t) const;
  /// H(t) + t M(t).
  double D(double t) const;

  /// Quadrature route for H and M from the tail alone, independent of the closed forms.
  double H_quadrature(double t, double rel_tol = 1e-10) const;
  double M_quadrature(double t, double rel_tol = 1e-10) const;

  /// ln H and ln D at a point that may lie beyond the double range.
  double log_H(const LogTower& t) const;
  double log_D(const LogTower& t) const;

  MomentValue second_moment() const;
  bool finite_mean() const;
  double mean_abs() const;
  /// True unless X = 0 almost surely.
  bool nondegenerate() const;

  double draw(RandomStream& rng) const;
  void sample(RandomStream& rng, std::span<double> out) const;
  std::vector<double> sample(RandomStream& rng, std::size_t count) const;

 private:
  DistributionSpec(DistKind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  std::vector<double> breakpoints(double upto) const;
  double tail_integral_2s(double t, double rel_tol) const;

  DistKind kind_;
  double a_ = 0.0;  // sigma or beta
  double b_ = 0.0;  // xmin
  std::optional<TailTable> table_;
};

/// H and M tabulated on geometric abscissae t0 * ratio^k.
class MomentCache {
 public:
  MomentCache(const DistributionSpec& dist, double t_lo, double t_hi, double ratio = 1.05);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& H() const { return h_; }
  const std::vector<double>& M() const { return m_; }
  double ratio() const { return ratio_; }

 private:
  double ratio_;
  std::vector<double> grid_;
  std::vector<double> h_;
  std::vector<double> m_;
};

}  // namespace lil

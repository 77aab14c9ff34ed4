#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lil/distmodel.hpp"
#include "lil/logscale.hpp"
#include "lil/series.hpp"

namespace lil {

/// Fixed-point construction did not settle; carries the last iterate of ln h.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double x_log, double last_log_h)
      : std::runtime_error(what), log_x(x_log), log_h(last_log_h) {}
  double log_x;
  double log_h;
};

enum class SlowFamily { loglog_power, log_power, stretched, phi2, constant, table, constructed, custom };

/// A positive nondecreasing slowly varying h, evaluated through ln h on a LogTower.
class SlowFunction {
 public:
  /// 2 (LLx)^p, p >= 0.
  static SlowFunction loglog_power(double p);
  /// 2 (Lx)^r, r > 0.
  static SlowFunction log_power(double r);
  /// exp((Lx)^q), 0 < q <= 1.
  static SlowFunction stretched(double q);
  /// 2 Lx (1 + LLx sin^2(LLLx)).
  static SlowFunction phi2();
  static SlowFunction constant(double c);
  /// Shape-preserving cubic in ln x through (x_i, h_i); flat outside the range.
  static SlowFunction table(std::vector<double> x, std::vector<double> h);
  /// Reads the `# lil-slowfn v1` two-column format.
  static SlowFunction parse_table(std::istream& in, const std::string& source = "<slowfn>");
  static SlowFunction load_table(const std::filesystem::path& path);
  static SlowFunction custom(std::string name, series::LogFn log_h, series::FeatureFn features = {},
                             bool oscillatory = false, SlowFamily family = SlowFamily::custom);

  double operator()(double x) const;
  double log_value(const LogTower& x) const { return log_h_(x); }
  /// w = ln Lx positions of narrow dips of h inside [w_lo, w_hi].
  std::vector<double> features(double w_lo, double w_hi) const;
  const series::FeatureFn& feature_fn() const { return features_; }
  bool oscillatory() const { return oscillatory_; }

  SlowFamily family() const { return family_; }
  double param() const { return param_; }
  const std::string& name() const { return name_; }

 private:
  SlowFunction() = default;

  SlowFamily family_ = SlowFamily::custom;
  double param_ = 0.0;
  std::string name_;
  series::LogFn log_h_;
  series::FeatureFn features_;
  bool oscillatory_ = false;
};

/// Psi(x) = sqrt(x h(x)) and its inverse; a_n = Psi(n).
class Normalizer {
 public:
  explicit Normalizer(SlowFunction h) : h_(std::move(h)) {}

  const SlowFunction& h() const { return h_; }

  double psi(double x) const;
  double a(double n) const { return psi(n); }
  double log_psi(const LogTower& x) const;
  /// x with Psi(x) = y; +infinity when that x exceeds the double range.
  double psi_inverse(double y) const;
  /// ln Psi^-1(e^log_y).
  double log_psi_inverse(double log_y) const;
  /// Psi^-1 at a point that may lie beyond the double range.
  LogTower psi_inverse_tower(const LogTower& y) const;

 private:
  SlowFunction h_;
};

enum class Trend { decreasing, flat, increasing, vanishing };
std::string to_string(Trend t);

struct HqRow {
  double tau = 0.0;
  double max_deviation = 0.0;  // over the last decade of the t grid
  double slope = 0.0;          // d ln(deviation) / d ln Lt over the trailing quarter
  Trend trend = Trend::flat;
  int excluded = 0;            // non-finite evaluations skipped
};

struct HqReport {
  double q = 0.0;
  std::vector<HqRow> rows;
  bool consistent = false;
  std::vector<std::string> warnings;
};

/// Finite-range evidence for h(t f_tau(t)) / h(t) -> 1 on each tau.
/// `log_t_grid` holds ln t; an empty grid means ln t = 0.1 k ln 10, k = 10..3000.
HqReport hq_membership(const SlowFunction& h, double q, const std::vector<double>& taus,
                       std::vector<double> log_t_grid = {});

/// Verdict on E g(|X|) < infinity for g(x) = x^2 / ell(x), with ln ell given on the tower.
struct MomentVerdict {
  series::Verdict verdict = series::Verdict::inconclusive;
  std::string basis;  // "light tail", "power tail series", ...
  series::Classification evidence;
};
MomentVerdict second_moment_over(const DistributionSpec& dist, const series::LogFn& log_ell,
                                 const series::FeatureFn& features = {}, bool oscillatory = false,
                                 const series::Options& opt = {});

/// Grid for trailing-window suprema. Plain functions use x = 10^k, k = 1..decades,
/// window = last quarter of decades. Oscillatory ones continue past 10^300 in
/// y = LLLx up to 7 pi (plus every feature point), window = last 3 pi of y.
struct ScanGrid {
  std::vector<LogTower> points;
  std::vector<double> coord;  // decade k, or LLLx when oscillatory
  std::size_t window_begin = 0;
  bool tower = false;
};
ScanGrid limsup_grid(const series::FeatureFn& features, bool oscillatory, int decades = 300);

struct ConstructionRow {
  double x = 0.0;
  double psi = 0.0;
  double h = 0.0;
  int iterations = 0;
};

struct ConstructionReport {
  std::vector<ConstructionRow> table;
  int max_iterations = 0;
  /// sup of H(x)/phi(x) over the trailing window (should be near 1).
  double limsup_H_over_phi = 0.0;
  bool limsup_warning = false;
  MomentVerdict moment;  // E X^2 / (phi(|X|/LL|X|) LL|X|)
  bool monotone = true;  // h nondecreasing and Psi(x)/sqrt(x) nondecreasing on the table grid
  std::vector<std::string> warnings;
};

struct Construction {
  Normalizer normalizer;
  ConstructionReport report;
};

struct FixedPointResult {
  double log_h = 0.0;
  int iterations = 0;
};

/// ln h(x) for h(x) = phi(Psi(x)/LLx) LLx with Psi = sqrt(x h), by iteration from Psi_0 = sqrt(x LLx).
FixedPointResult psi_fixed_point(const SlowFunction& phi, const LogTower& x, double tol = 1e-10,
                                 int max_iter = 200);

/// Builds Psi from an envelope phi; throws NonConvergenceError if any table point fails.
/// `log_x_grid` holds ln x for the report table (default x = 10^k, k = 1..30).
Construction construct_psi_from_phi(const DistributionSpec& dist, const SlowFunction& phi,
                                    std::vector<double> log_x_grid = {});

}  // namespace lil

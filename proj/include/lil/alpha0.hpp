#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lil/distmodel.hpp"
#include "lil/conditions.hpp"
#include "lil/klass.hpp"
#include "lil/normalizer.hpp"
#include "lil/series.hpp"

namespace lil {

/// A normalizing sequence c_n, stored as h_c(n) = c_n^2 / n so it can be read on the tower.
class NormSeqSpec {
 public:
  enum class Source { gamma, psi, scaled, table, custom };

  static NormSeqSpec gamma(std::shared_ptr<const KlassEval> klass);
  static NormSeqSpec psi(const Normalizer& nm);
  static NormSeqSpec scaled(const NormSeqSpec& base, double factor);
  /// Explicit (n, c_n) pairs; c_n / sqrt(n) is interpolated in ln n and held flat outside.
  static NormSeqSpec table(std::vector<double> n, std::vector<double> c);
  /// c_n = sqrt(n exp(log_h(n))).
  static NormSeqSpec custom(std::string name, series::LogFn log_h, series::FeatureFn features = {},
                            bool oscillatory = false);

  double c(double n) const;
  double log_c(const LogTower& n) const { return 0.5 * (n.log_x + log_h(n)); }
  /// ln(c_n^2 / n).
  double log_h(const LogTower& n) const { return log_h_(n); }
  LogTower c_tower(const LogTower& n) const { return n.affine(0.5, 0.5 * log_h(n)); }

  Source source() const { return source_; }
  const std::string& name() const { return name_; }
  const series::FeatureFn& features() const { return features_; }
  bool oscillatory() const { return oscillatory_; }
  /// Largest tabulated n for table sources, +inf otherwise.
  double range_end() const { return range_end_; }

 private:
  NormSeqSpec() = default;

  Source source_ = Source::custom;
  std::string name_;
  series::LogFn log_h_;
  series::FeatureFn features_;
  bool oscillatory_ = false;
  double range_end_ = 0.0;
};

struct PairWitness {
  double m = 0.0;
  double n = 0.0;
  double lhs = 0.0;  // c_n / c_m
  double rhs = 0.0;  // (1 + eps) n / m
};

struct EpsCheck {
  double eps = 0.0;
  bool pass = false;
  double m_eps = 0.0;  // first sampled m beyond every violation
  std::vector<PairWitness> failures;
};

struct RegularityReport {
  bool monotone = false;   // c_n / sqrt(n) nondecreasing on dyadic n
  bool unbounded = false;  // c_n / sqrt(n) grows across the range
  bool growth_ok = false;
  std::vector<double> monotone_failures;  // dyadic n where c_n / sqrt(n) dropped
  std::vector<EpsCheck> ratio_checks;
  bool pass = false;
};

/// Growth of c_n / sqrt(n) on dyadic n in [1, nmax], and c_n / c_m <= (1 + eps) n / m for eps in {0.1, 0.01} on pairs of a geometric n grid.
RegularityReport check_c_regularity(const NormSeqSpec& c, double nmax = 1e16);

/// Raised when a truncation sequence violates log(c_n / d_n) / LLn -> 0 or d_n <= c_n.
class PolicyError : public std::domain_error {
 public:
  PolicyError(const std::string& what, double n) : std::domain_error(what), offending_n(n) {}
  double offending_n;
};

struct SigmaPolicy {
  enum class Kind { delta, dseq, constant };
  Kind kind = Kind::delta;
  double delta = 1.0;
  std::optional<NormSeqSpec> d;
  double sigma2 = 1.0;  // constant policy (test hook)

  static SigmaPolicy with_delta(double delta);
  static SigmaPolicy with_dseq(NormSeqSpec d);
  static SigmaPolicy constant_sigma2(double s2);
  std::string describe() const;
};

/// Checks the truncation sequence on dyadic n up to nmax; throws PolicyError on violation.
void check_dseq(const NormSeqSpec& c, const NormSeqSpec& d, double nmax = 1e16);

/// sigma_n^2 = H(delta c_n), H(d_n) or the constant.
double sigma_sq(const DistributionSpec& dist, const NormSeqSpec& c, const SigmaPolicy& policy, double n);
double log_sigma_sq(const DistributionSpec& dist, const NormSeqSpec& c, const SigmaPolicy& policy, const LogTower& n);

enum class RatioTrend { converging, to_zero, to_infinity, oscillating };
std::string to_string(RatioTrend t);

struct RatioBounds {
  double a = 0.0;  // min of c_n / gamma_n over the trailing dyadic window
  double b = 0.0;  // max of c_n / gamma_n
  double lower = 0.0;  // 1/b
  double upper = 0.0;  // 1/a, 0 when c / gamma -> infinity
  RatioTrend trend = RatioTrend::converging;
  std::vector<std::pair<double, double>> table;  // (n, c_n / gamma_n)
};

/// Finite-range proxies for liminf and limsup of c_n / gamma_n, n = 2^j <= nmax.
RatioBounds ratio_bounds(const KlassEval& klass, const NormSeqSpec& c, double nmax = 1e16);

struct Alpha0Options {
  double nmax = 1e16;
  double width = 0.01;
  double alpha_cap = 1024.0;
  series::Options series;
};

struct Alpha0Probe {
  double alpha = 0.0;
  series::Classification evidence;
};

struct Alpha0Report {
  bool bracket_found = false;
  double lo = 0.0;
  double hi = 0.0;
  bool infinite = false;  // divergent at every probed alpha up to the cap
  std::string policy;
  std::optional<RatioBounds> bounds;
  MomentVerdict tail_sum;  // sum P(|X| > c_n)
  RegularityReport regularity;
  std::vector<Alpha0Probe> probes;
  int inconclusive_probes = 0;
  std::vector<std::string> notes;
};

/// The block integrand of sum n^-1 exp(-alpha^2 c_n^2 / (2 n sigma_n^2)), as a density in u = ln n.
series::Integrand alpha_series(const DistributionSpec& dist, const NormSeqSpec& c, const SigmaPolicy& policy,
                               double alpha);

/// Bisects alpha over the divergent / convergent boundary of the series above.
Alpha0Report alpha0_estimate(const DistributionSpec& dist, const NormSeqSpec& c, const SigmaPolicy& policy,
                             const Alpha0Options& opt = {});

}  // namespace lil

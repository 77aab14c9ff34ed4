#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lil/distmodel.hpp"
#include "lil/normalizer.hpp"
#include "lil/series.hpp"

namespace lil {

/// Finite-range behaviour of a functional over the trailing window.
/// `vanishing` refines converging: the functional decays at least like (Lx)^-1/2.
enum class LimsupTrend { converging, vanishing, oscillating, diverging };
std::string to_string(LimsupTrend t);

struct LimsupPoint {
  double coord = 0.0;  // decade k, or LLLx on the oscillatory extension
  double log_value = 0.0;
};

struct LimsupEstimate {
  double window_sup = 0.0;  // sup of the functional over the trailing window
  LimsupTrend trend = LimsupTrend::converging;
  /// The reading of the limsup: window_sup, 0 when vanishing, +inf when diverging.
  double value = 0.0;
  bool divergent = false;
  double slope_log = 0.0;     // d ln F / d ln Lx over the window
  double slope_loglog = 0.0;  // d ln F / d ln LLx over the window
  int skipped = 0;
  double window_start = 0.0;
  bool tower = false;
  std::vector<LimsupPoint> table;
};

/// Trailing-window sup and trend of exp(log_f) on limsup_grid(features, oscillatory, decades).
LimsupEstimate window_limsup(const series::LogFn& log_f, const series::FeatureFn& features, bool oscillatory,
                             int decades = 300);

/// F(x) = Psi^-1(x LLx) H(x) / (x^2 LLx).
LimsupEstimate limsup_H_condition(const DistributionSpec& dist, const Normalizer& nm, int decades = 300);

/// Sum of P(|X| > a_n) with a_n = Psi(n), classified on dyadic blocks.
MomentVerdict moment_condition(const DistributionSpec& dist, const Normalizer& nm, const series::Options& opt = {});

/// Label q of the class H_q used for the bounds; built-in families carry their own.
double default_q(const SlowFunction& h);

enum class Outcome { lil, stability, infinite, mean_fails, inconclusive };
std::string to_string(Outcome o);

struct ConditionReport {
  bool mean_zero = false;
  MomentVerdict moment;
  LimsupEstimate limsup;
  double lambda_hat = 0.0;  // sqrt(2 limsup), +inf when divergent
  double q = 0.0;
  double bound_lo = 0.0;  // (1 - q)^(1/2) lambda_hat
  double bound_hi = 0.0;  // lambda_hat
  Outcome outcome = Outcome::inconclusive;
  std::vector<std::string> notes;
};

ConditionReport analyze(const DistributionSpec& dist, const Normalizer& nm, std::optional<double> q = {},
                        int decades = 300);

/// Stability S_n / a_n -> 0: limsup functional zero, moment sum finite, mean zero.
struct StabilityVerdict {
  bool stable = false;
  ConditionReport report;
};
StabilityVerdict stability_check(const DistributionSpec& dist, const Normalizer& nm, int decades = 300);

enum class CorollaryFamily { loglog_power, log_power, stretched };
std::string to_string(CorollaryFamily f);

struct CorollaryReport {
  CorollaryFamily family = CorollaryFamily::loglog_power;
  double param = 0.0;
  bool mean_zero = false;
  MomentVerdict moment;       // E X^2 / (LL|X|)^p, E X^2 / (L|X|)^r, or E X^2 / exp(2^q (L|X|)^q)
  LimsupEstimate limsup;      // the closed-form functional, constants folded in so lambda^2 = limsup
  double lambda_hat = 0.0;
  double bound_lo = 0.0;
  double bound_hi = 0.0;
  Outcome outcome = Outcome::inconclusive;
};

/// Corollaries with h = 2(LLx)^p (p >= 1), h = 2(Lx)^r (r > 0) or h = exp((Lx)^q) (0 < q <= 1/2).
CorollaryReport corollary_check(const DistributionSpec& dist, CorollaryFamily family, double param, int decades = 300);

/// The normalizer a corollary speaks about: sqrt(2 n (LLn)^p), sqrt(2 n (Ln)^r), sqrt(n exp((Ln)^q)).
SlowFunction corollary_h(CorollaryFamily family, double param);

/// Integral of 1 / (1 + e^y sin^2 y) over [1, y_max], resolving every dip at y = m pi.
double phi2_substitution_integral(double y_max);

}  // namespace lil

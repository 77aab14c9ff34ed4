#include "lil/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lil/quadrature.hpp"

namespace lil {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.69314718055994530942;

// least-squares slope of y on x
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

}  // namespace

std::string to_string(LimsupTrend t) {
  switch (t) {
    case LimsupTrend::converging: return "converging";
    case LimsupTrend::vanishing: return "vanishing";
    case LimsupTrend::oscillating: return "oscillating";
    case LimsupTrend::diverging: return "diverging";
  }
  return "converging";
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::lil: return "two-sided LIL";
    case Outcome::stability: return "stability";
    case Outcome::infinite: return "limsup infinite";
    case Outcome::mean_fails: return "mean-zero fails";
    case Outcome::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(CorollaryFamily f) {
  switch (f) {
    case CorollaryFamily::loglog_power: return "loglog-power";
    case CorollaryFamily::log_power: return "log-power";
    case CorollaryFamily::stretched: return "stretched";
  }
  return "loglog-power";
}

LimsupEstimate window_limsup(const series::LogFn& log_f, const series::FeatureFn& features, bool oscillatory,
                             int decades) {
  if (decades < 20) throw std::domain_error("limsup grid must span at least 20 decades");
  const ScanGrid grid = limsup_grid(features, oscillatory, decades);
  LimsupEstimate est;
  est.tower = grid.tower;
  est.window_start = grid.coord[grid.window_begin];
  double sup = -kInf;
  std::vector<double> lx, llx, lf;
  bool any_finite = false;
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    const double v = log_f(grid.points[i]);
    if (std::isnan(v) || v == kInf) {
      ++est.skipped;
      continue;
    }
    est.table.push_back({grid.coord[i], v});
    if (i < grid.window_begin) continue;
    sup = std::max(sup, v);
    if (v == -kInf) continue;
    any_finite = true;
    lx.push_back(grid.points[i].log_lx);
    llx.push_back(std::log(grid.points[i].LLx()));
    lf.push_back(v);
  }
  est.window_sup = std::exp(sup);
  if (!any_finite) {
    est.trend = LimsupTrend::vanishing;
    est.value = 0.0;
    return est;
  }
  est.slope_log = slope(lx, lf);
  est.slope_loglog = slope(llx, lf);
  if (oscillatory) {
    est.trend = LimsupTrend::oscillating;
  } else if (est.slope_loglog >= 0.5) {
    est.trend = LimsupTrend::diverging;
  } else if (est.slope_log <= -0.5 || est.slope_loglog <= -0.5) {
    est.trend = LimsupTrend::vanishing;
  } else {
    est.trend = LimsupTrend::converging;
  }
  est.divergent = est.trend == LimsupTrend::diverging;
  est.value = est.divergent ? kInf : est.trend == LimsupTrend::vanishing ? 0.0 : est.window_sup;
  return est;
}

LimsupEstimate limsup_H_condition(const DistributionSpec& dist, const Normalizer& nm, int decades) {
  // Psi^-1(z) = x' with x' h(x') = z^2, so with z = x LLx:
  // F = z^2 / h(x') H / (x^2 LLx) = LLx H(x) / h(x')
  auto inverse = [&nm](const LogTower& x) { return nm.psi_inverse_tower(x.affine(1.0, std::log(x.LLx()))); };
  series::LogFn log_f = [&](const LogTower& x) {
    const LogTower xp = inverse(x);
    return std::log(x.LLx()) - nm.h().log_value(xp) + dist.log_H(x);
  };
  series::FeatureFn feats;
  if (nm.h().feature_fn()) {
    feats = [&](double w_lo, double w_hi) {
      auto m = [&](double w) { return inverse(LogTower::from_loglog(w)).log_lx; };
      return series::pull_back_features(nm.h().feature_fn(), m, std::max(w_lo, 0.0), w_hi);
    };
  }
  return window_limsup(log_f, feats, nm.h().oscillatory(), decades);
}

MomentVerdict moment_condition(const DistributionSpec& dist, const Normalizer& nm, const series::Options& opt) {
  MomentVerdict mv;
  const auto pt = dist.power_tail();
  series::Integrand f;
  // density in u = ln n of the terms P(|X| > Psi(n))
  f.log_density = [&dist, &nm, pt](const LogTower& n) {
    const double log_h = nm.h().log_value(n);
    const double log_psi = 0.5 * (n.log_x + log_h);
    if (pt && log_psi >= pt->log_threshold) {
      const double b = pt->beta;
      if (b == 2.0) return pt->log_c - log_h;
      return pt->log_c + (1.0 - 0.5 * b) * n.log_x - 0.5 * b * log_h;
    }
    const double lt = dist.log_tail(log_psi);
    return lt == -kInf ? -kInf : n.log_x + lt;
  };
  f.features = nm.h().feature_fn();
  f.oscillatory = nm.h().oscillatory();
  mv.evidence = series::classify(f, opt);
  mv.verdict = mv.evidence.verdict;
  mv.basis = "sum of P(|X| > a_n) on dyadic blocks";
  return mv;
}

double default_q(const SlowFunction& h) { return h.family() == SlowFamily::stretched ? h.param() : 0.0; }

ConditionReport analyze(const DistributionSpec& dist, const Normalizer& nm, std::optional<double> q, int decades) {
  ConditionReport rep;
  rep.q = q.value_or(default_q(nm.h()));
  if (!(rep.q >= 0.0 && rep.q < 1.0)) throw std::domain_error("q must lie in [0, 1)");
  if (!q && (nm.h().family() == SlowFamily::custom || nm.h().family() == SlowFamily::table))
    rep.notes.push_back("q = 0 assumed for a user-supplied h");
  rep.mean_zero = dist.finite_mean();
  rep.limsup = limsup_H_condition(dist, nm, decades);
  rep.lambda_hat = rep.limsup.divergent ? kInf : std::sqrt(2.0 * rep.limsup.value);
  rep.bound_hi = rep.lambda_hat;
  rep.bound_lo = std::sqrt(1.0 - rep.q) * rep.lambda_hat;
  if (!rep.mean_zero) {
    rep.outcome = Outcome::mean_fails;
    rep.notes.push_back("E|X| is infinite");
    return rep;
  }
  rep.moment = moment_condition(dist, nm);
  if (rep.moment.verdict == series::Verdict::inconclusive)
    rep.outcome = Outcome::inconclusive;
  else if (rep.moment.verdict == series::Verdict::divergent || rep.limsup.divergent)
    rep.outcome = Outcome::infinite;
  else if (rep.limsup.value == 0.0)
    rep.outcome = Outcome::stability;
  else
    rep.outcome = Outcome::lil;
  return rep;
}

StabilityVerdict stability_check(const DistributionSpec& dist, const Normalizer& nm, int decades) {
  StabilityVerdict sv;
  sv.report = analyze(dist, nm, {}, decades);
  sv.stable = sv.report.outcome == Outcome::stability;
  return sv;
}

SlowFunction corollary_h(CorollaryFamily family, double param) {
  switch (family) {
    case CorollaryFamily::loglog_power: return SlowFunction::loglog_power(param);
    case CorollaryFamily::log_power: return SlowFunction::log_power(param);
    case CorollaryFamily::stretched: return SlowFunction::stretched(param);
  }
  throw std::domain_error("unknown corollary family");
}

CorollaryReport corollary_check(const DistributionSpec& dist, CorollaryFamily family, double param, int decades) {
  CorollaryReport rep;
  rep.family = family;
  rep.param = param;
  series::LogFn log_f, log_ell;
  double q = 0.0;
  switch (family) {
    case CorollaryFamily::loglog_power:
      if (!(param >= 1.0) || !std::isfinite(param)) throw std::domain_error("corollary: p must be >= 1");
      // (LLx)^(1-p) H(x) = lambda^2
      log_f = [&dist, param](const LogTower& x) { return (1.0 - param) * std::log(x.LLx()) + dist.log_H(x); };
      log_ell = [param](const LogTower& x) { return param * std::log(x.LLx()); };
      break;
    case CorollaryFamily::log_power:
      if (!(param > 0.0) || !std::isfinite(param)) throw std::domain_error("corollary: r must be > 0");
      // LLx / (Lx)^r H(x) = 2^r lambda^2
      log_f = [&dist, param](const LogTower& x) {
        return std::log(x.LLx()) - param * x.log_lx + dist.log_H(x) - param * kLn2;
      };
      log_ell = [param](const LogTower& x) { return param * x.log_lx; };
      break;
    case CorollaryFamily::stretched:
      if (!(param > 0.0 && param <= 0.5)) throw std::domain_error("corollary: q must lie in (0, 1/2]");
      q = param;
      // LLx / exp(2^q (Lx)^q) H(x) = lambda^2 / 2, with an extra e^(1/2) at q = 1/2
      log_f = [&dist, param](const LogTower& x) {
        const double extra = param == 0.5 ? 0.5 : 0.0;
        return kLn2 + extra + std::log(x.LLx()) - std::exp(param * (kLn2 + x.log_lx)) + dist.log_H(x);
      };
      log_ell = [param](const LogTower& x) { return std::exp(param * (kLn2 + x.log_lx)); };
      break;
  }
  rep.limsup = window_limsup(log_f, {}, false, decades);
  rep.lambda_hat = rep.limsup.divergent ? kInf : std::sqrt(rep.limsup.value);
  rep.bound_hi = rep.lambda_hat;
  rep.bound_lo = std::sqrt(1.0 - q) * rep.lambda_hat;
  rep.mean_zero = dist.finite_mean();
  if (!rep.mean_zero) {
    rep.outcome = Outcome::mean_fails;
    return rep;
  }
  rep.moment = second_moment_over(dist, log_ell);
  if (rep.moment.verdict == series::Verdict::inconclusive)
    rep.outcome = Outcome::inconclusive;
  else if (rep.moment.verdict == series::Verdict::divergent || rep.limsup.divergent)
    rep.outcome = Outcome::infinite;
  else if (rep.limsup.value == 0.0)
    rep.outcome = Outcome::stability;
  else
    rep.outcome = Outcome::lil;
  return rep;
}

double phi2_substitution_integral(double y_max) {
  if (!(y_max > 1.0) || y_max > 700.0) throw std::domain_error("phi2 integral: y_max must lie in (1, 700]");
  std::vector<double> dips;
  for (int m = 1; m * M_PI < y_max; ++m) dips.push_back(m * M_PI);
  const quad::Integrand g = [](double y) {
    const double s = std::sin(y);
    return -std::log1p(std::exp(y) * s * s);
  };
  // one call per period keeps each dip's boundary layer resolved on its own
  double total = -kInf;
  double a = 1.0;
  for (std::size_t i = 0; i <= dips.size(); ++i) {
    const double b = i < dips.size() ? std::min(y_max, dips[i] + 0.5 * M_PI) : y_max;
    if (b <= a) continue;
    std::vector<double> f;
    if (i < dips.size()) f.push_back(dips[i]);
    total = quad::log_add(total, quad::log_integral_exp(g, a, b, f, 1e-12));
    a = b;
  }
  return std::exp(total);
}

}  // namespace lil

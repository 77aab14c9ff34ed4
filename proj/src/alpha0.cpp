#include "lil/alpha0.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

namespace lil {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.69314718055994530942;

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

int dyadic_top(double nmax) { return static_cast<int>(std::floor(std::log2(nmax))); }

}  // namespace

// ---------------------------------------------------------------- NormSeqSpec

NormSeqSpec NormSeqSpec::custom(std::string name, series::LogFn log_h, series::FeatureFn features, bool oscillatory) {
  NormSeqSpec s;
  s.name_ = std::move(name);
  s.log_h_ = std::move(log_h);
  s.features_ = std::move(features);
  s.oscillatory_ = oscillatory;
  s.range_end_ = kInf;
  return s;
}

NormSeqSpec NormSeqSpec::gamma(std::shared_ptr<const KlassEval> klass) {
  if (!klass) throw std::invalid_argument("gamma sequence needs a KlassEval");
  // gamma_n^2 / n = 2 LLn D(K(n / LLn))
  auto s = custom("gamma(" + klass->dist().name() + ")",
                  [klass](const LogTower& n) { return klass->log_h_gamma(n); });
  s.source_ = Source::gamma;
  return s;
}

NormSeqSpec NormSeqSpec::psi(const Normalizer& nm) {
  const SlowFunction h = nm.h();
  auto s = custom("psi(" + h.name() + ")", [h](const LogTower& n) { return h.log_value(n); }, h.feature_fn(),
                  h.oscillatory());
  s.source_ = Source::psi;
  return s;
}

NormSeqSpec NormSeqSpec::scaled(const NormSeqSpec& base, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw std::invalid_argument("scaled: factor must be > 0");
  const double shift = 2.0 * std::log(factor);
  auto inner = base.log_h_;
  auto s = custom(std::to_string(factor) + "*" + base.name(),
                  [inner, shift](const LogTower& n) { return inner(n) + shift; }, base.features_, base.oscillatory_);
  s.source_ = Source::scaled;
  s.range_end_ = base.range_end_;
  return s;
}

NormSeqSpec NormSeqSpec::table(std::vector<double> n, std::vector<double> c) {
  if (n.size() != c.size() || n.size() < 2) throw std::invalid_argument("c table: need >= 2 points");
  std::vector<double> ln(n.size()), lh(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] >= 1.0) || !std::isfinite(n[i])) throw std::invalid_argument("c table: n must be >= 1");
    if (i > 0 && !(n[i] > n[i - 1])) throw std::invalid_argument("c table: n must be strictly increasing");
    if (!(c[i] > 0.0) || !std::isfinite(c[i])) throw std::invalid_argument("c table: c must be > 0");
    ln[i] = std::log(n[i]);
    lh[i] = 2.0 * std::log(c[i]) - ln[i];
  }
  const double lo = ln.front(), hi = ln.back(), h_lo = lh.front(), h_hi = lh.back();
  std::function<double(double)> interp;
  if (ln.size() >= 4) {
    auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
        std::vector<double>(ln), std::vector<double>(lh));
    interp = [spline](double u) { return (*spline)(u); };
  } else {
    interp = [ln, lh](double u) {
      const auto it = std::upper_bound(ln.begin(), ln.end(), u);
      const std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - ln.begin(), 1), ln.size() - 1);
      const double t = (u - ln[i - 1]) / (ln[i] - ln[i - 1]);
      return lh[i - 1] + t * (lh[i] - lh[i - 1]);
    };
  }
  auto s = custom("table(" + std::to_string(n.size()) + " points)", [=](const LogTower& x) {
    if (x.log_x <= lo) return h_lo;
    if (x.log_x >= hi) return h_hi;
    return interp(x.log_x);
  });
  s.source_ = Source::table;
  s.range_end_ = n.back();
  return s;
}

double NormSeqSpec::c(double n) const {
  if (!(n >= 1.0) || !std::isfinite(n)) throw std::domain_error("c: n must be finite and >= 1");
  return std::exp(log_c(LogTower::of(n)));
}

// ----------------------------------------------------------------- regularity

RegularityReport check_c_regularity(const NormSeqSpec& c, double nmax) {
  if (!(nmax >= 1e3)) throw std::domain_error("check_c_regularity: nmax must be >= 1e3");
  RegularityReport rep;
  const int top = dyadic_top(nmax);
  rep.monotone = true;
  double prev = -kInf, first = 0.0, last = 0.0;
  for (int j = 0; j <= top; ++j) {
    const double n = std::ldexp(1.0, j);
    const double v = c.log_h(LogTower::of(n));  // 2 ln(c_n / sqrt n)
    if (j == 0) first = v;
    last = v;
    if (v < prev - 1e-12) {
      rep.monotone = false;
      rep.monotone_failures.push_back(n);
    }
    prev = std::max(prev, v);
  }
  rep.unbounded = last > first + 1e-9;
  rep.growth_ok = rep.monotone && rep.unbounded;

  std::vector<double> grid;
  for (double n = 1e3; n <= nmax * (1 + 1e-12); n *= std::pow(2.0, 0.25)) grid.push_back(n);
  std::vector<double> lc(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) lc[i] = c.log_c(LogTower::of(grid[i]));
  for (double eps : {0.1, 0.01}) {
    EpsCheck ec;
    ec.eps = eps;
    double worst_m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t k = i + 1; k < grid.size(); ++k) {
        const double lhs = lc[k] - lc[i];
        const double rhs = std::log1p(eps) + std::log(grid[k] / grid[i]);
        if (lhs > rhs + 1e-12) {
          worst_m = std::max(worst_m, grid[i]);
          if (ec.failures.size() < 20) ec.failures.push_back({grid[i], grid[k], std::exp(lhs), std::exp(rhs)});
        }
      }
    ec.m_eps = grid.front();
    if (worst_m > 0.0) {
      const auto it = std::upper_bound(grid.begin(), grid.end(), worst_m);
      ec.m_eps = it == grid.end() ? kInf : *it;
    }
    ec.pass = ec.m_eps <= std::sqrt(nmax);
    rep.ratio_checks.push_back(ec);
  }
  rep.pass = rep.growth_ok && std::all_of(rep.ratio_checks.begin(), rep.ratio_checks.end(),
                                          [](const EpsCheck& e) { return e.pass; });
  return rep;
}

// --------------------------------------------------------------------- sigma

SigmaPolicy SigmaPolicy::with_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("sigma policy: delta must be > 0");
  SigmaPolicy p;
  p.kind = Kind::delta;
  p.delta = delta;
  return p;
}

SigmaPolicy SigmaPolicy::with_dseq(NormSeqSpec d) {
  SigmaPolicy p;
  p.kind = Kind::dseq;
  p.d = std::move(d);
  return p;
}

SigmaPolicy SigmaPolicy::constant_sigma2(double s2) {
  if (!(s2 > 0.0) || !std::isfinite(s2)) throw std::invalid_argument("sigma policy: sigma^2 must be > 0");
  SigmaPolicy p;
  p.kind = Kind::constant;
  p.sigma2 = s2;
  return p;
}

std::string SigmaPolicy::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::delta: os << "H(delta c_n), delta = " << delta; break;
    case Kind::dseq: os << "H(d_n), d = " << (d ? d->name() : "?"); break;
    case Kind::constant: os << "constant sigma^2 = " << sigma2; break;
  }
  return os.str();
}

void check_dseq(const NormSeqSpec& c, const NormSeqSpec& d, double nmax) {
  // r_n = log(c_n / d_n) / LLn, required >= 0 and decreasing toward 0
  const int top = dyadic_top(nmax);
  const int from = std::max(4, top / 2);
  double prev = kInf;
  for (int j = 0; j <= top; ++j) {
    const double n = std::ldexp(1.0, j);
    const LogTower t = LogTower::of(n);
    const double r = (c.log_c(t) - d.log_c(t)) / t.LLx();
    if (r < -1e-12) throw PolicyError("truncation level d_n exceeds c_n at n = " + std::to_string(n), n);
    if (j >= from) {
      // strictly decreasing unless already negligible; a flat ratio does not tend to 0
      if (r > 1e-12 && prev < kInf && !(r < prev))
        throw PolicyError("log(c_n/d_n)/LLn does not decrease at n = " + std::to_string(n), n);
      prev = r;
    }
  }
}

double log_sigma_sq(const DistributionSpec& dist, const NormSeqSpec& c, const SigmaPolicy& policy, const LogTower& n) {
  switch (policy.kind) {
    case SigmaPolicy::Kind::constant: return std::log(policy.sigma2);
    case SigmaPolicy::Kind::delta: return dist.log_H(n.affine(0.5, 0.5 * c.log_h(n) + std::log(policy.delta)));
    case SigmaPolicy::Kind::dseq:
      if (!policy.d) throw std::invalid_argument("sigma policy: missing d sequence");
      return dist.log_H(policy.d->c_tower(n));
  }
  return 0.0;
}

double sigma_sq(const DistributionSpec& dist, const NormSeqSpec& c, const SigmaPolicy& policy, double n) {
  if (!(n >= 1.0) || !std::isfinite(n)) throw std::domain_error("sigma_sq: n must be finite and >= 1");
  if (policy.kind == SigmaPolicy::Kind::dseq && policy.d) check_dseq(c, *policy.d, std::max(n, 1e3));
  return std::exp(log_sigma_sq(dist, c, policy, LogTower::of(n)));
}

// -------------------------------------------------------------- ratio bounds

std::string to_string(RatioTrend t) {
  switch (t) {
    case RatioTrend::converging: return "converging";
    case RatioTrend::to_zero: return "to zero";
    case RatioTrend::to_infinity: return "to infinity";
    case RatioTrend::oscillating: return "oscillating";
  }
  return "converging";
}

RatioBounds ratio_bounds(const KlassEval& klass, const NormSeqSpec& c, double nmax) {
  RatioBounds rb;
  const int top = dyadic_top(nmax);
  const int from = (3 * top) / 4;
  std::vector<double> s, v;
  double lo = kInf, hi = -kInf;
  for (int j = 0; j <= top; ++j) {
    const double n = std::ldexp(1.0, j);
    const LogTower t = LogTower::of(n);
    const double lr = 0.5 * (c.log_h(t) - klass.log_h_gamma(t));
    rb.table.emplace_back(n, std::exp(lr));
    if (j < from) continue;
    lo = std::min(lo, lr);
    hi = std::max(hi, lr);
    s.push_back(std::log(t.LLx()));
    v.push_back(lr);
  }
  rb.a = std::exp(lo);
  rb.b = std::exp(hi);
  const double k = slope(s, v);
  if (c.oscillatory())
    rb.trend = RatioTrend::oscillating;
  else if (k >= 0.5)
    rb.trend = RatioTrend::to_infinity;
  else if (k <= -0.5)
    rb.trend = RatioTrend::to_zero;
  rb.lower = rb.trend == RatioTrend::to_zero ? kInf : 1.0 / rb.b;
  rb.upper = rb.trend == RatioTrend::to_infinity ? 0.0 : 1.0 / rb.a;
  if (rb.trend == RatioTrend::to_infinity) rb.lower = 0.0;
  return rb;
}

// -------------------------------------------------------------------- alpha0

series::Integrand alpha_series(const DistributionSpec& dist, const NormSeqSpec& c, const SigmaPolicy& policy,
                               double alpha) {
  series::Integrand f;
  const double a2 = alpha * alpha;
  // n * n^-1 exp(-alpha^2 h_c / (2 sigma^2)) per unit of u = ln n
  f.log_density = [&dist, c, policy, a2](const LogTower& n) {
    if (a2 == 0.0) return 0.0;
    const double ls = log_sigma_sq(dist, c, policy, n);
    if (ls == -kInf) return -kInf;
    return -a2 * std::exp(c.log_h(n) - kLn2 - ls);
  };
  f.features = c.features();
  f.oscillatory = c.oscillatory();
  return f;
}

Alpha0Report alpha0_estimate(const DistributionSpec& dist, const NormSeqSpec& c, const SigmaPolicy& policy,
                             const Alpha0Options& opt) {
  Alpha0Report rep;
  rep.policy = policy.describe();
  if (policy.kind == SigmaPolicy::Kind::dseq) {
    if (!policy.d) throw std::invalid_argument("sigma policy: missing d sequence");
    check_dseq(c, *policy.d, opt.nmax);
  }
  series::Options sopt = opt.series;
  sopt.depth0_blocks = std::max(1, dyadic_top(opt.nmax));

  rep.regularity = check_c_regularity(c, opt.nmax);
  if (!rep.regularity.pass) rep.notes.push_back("c fails the growth or ratio regularity checks on the checked range");
  rep.tail_sum = moment_condition(dist, Normalizer(SlowFunction::custom(
                                               c.name(), [c](const LogTower& n) { return c.log_h(n); },
                                               c.features(), c.oscillatory())),
                                     sopt);
  if (rep.tail_sum.verdict != series::Verdict::convergent)
    rep.notes.push_back("sum P(|X| > c_n) is not classified convergent");
  if (c.range_end() < kInf) rep.notes.push_back("c table held flat beyond n = " + std::to_string(c.range_end()));

  if (dist.nondegenerate() && dist.finite_mean()) {
    const KlassEval klass(dist);
    rep.bounds = ratio_bounds(klass, c, opt.nmax);
  }

  auto probe = [&](double alpha) {
    Alpha0Probe p{alpha, series::classify(alpha_series(dist, c, policy, alpha), sopt)};
    if (p.evidence.verdict == series::Verdict::inconclusive) ++rep.inconclusive_probes;
    rep.probes.push_back(p);
    // ties go to the divergent side: alpha0 is a supremum over it
    return p.evidence.verdict != series::Verdict::convergent;
  };

  double hi = 1.0;
  if (rep.bounds && std::isfinite(rep.bounds->upper) && rep.bounds->upper > 0.0) hi = 1.5 * rep.bounds->upper;
  double lo = 0.0;
  while (probe(hi)) {
    lo = hi;
    if (hi >= opt.alpha_cap) {
      rep.infinite = true;
      rep.bracket_found = true;
      rep.lo = hi;
      rep.hi = kInf;
      return rep;
    }
    hi = std::min(2.0 * hi, opt.alpha_cap);
  }
  while (hi - lo > opt.width) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) ? lo : hi) = mid;
  }
  if (rep.inconclusive_probes == static_cast<int>(rep.probes.size())) {
    rep.notes.push_back("every probe was inconclusive");
    return rep;
  }
  rep.bracket_found = true;
  rep.lo = lo;
  rep.hi = hi;
  return rep;
}

}  // namespace lil

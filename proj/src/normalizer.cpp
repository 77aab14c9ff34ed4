#include "lil/normalizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

// Boost 1.74 pchip calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

namespace lil {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.69314718055994530942;

std::vector<double> phi2_dips(double w_lo, double w_hi) {
  // sin^2(LLLx) = 0 at LLLx = m pi, i.e. w = ln Lx = e^(m pi)
  std::vector<double> out;
  for (int m = 1; m < 226; ++m) {
    const double w = std::exp(m * M_PI);
    if (w > w_hi) break;
    if (w >= w_lo) out.push_back(w);
  }
  return out;
}

// Increasing bisection root of f on [lo, hi] down to adjacent doubles.
template <class F>
double bisect(F&& f, double lo, double hi) {
  for (int i = 0; i < 2200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

// ------------------------------------------------------------- SlowFunction

SlowFunction SlowFunction::custom(std::string name, series::LogFn log_h, series::FeatureFn features,
                                  bool oscillatory, SlowFamily family) {
  SlowFunction f;
  f.family_ = family;
  f.name_ = std::move(name);
  f.log_h_ = std::move(log_h);
  f.features_ = std::move(features);
  f.oscillatory_ = oscillatory;
  return f;
}

SlowFunction SlowFunction::loglog_power(double p) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("loglog-power: p must be >= 0");
  auto f = custom("loglog-power(p=" + std::to_string(p) + ")",
                  [p](const LogTower& x) { return kLn2 + p * std::log(x.LLx()); }, {}, false,
                  SlowFamily::loglog_power);
  f.param_ = p;
  return f;
}

SlowFunction SlowFunction::log_power(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("log-power: r must be > 0");
  auto f = custom("log-power(r=" + std::to_string(r) + ")",
                  [r](const LogTower& x) { return kLn2 + r * x.log_lx; }, {}, false, SlowFamily::log_power);
  f.param_ = r;
  return f;
}

SlowFunction SlowFunction::stretched(double q) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("stretched: q must lie in (0, 1]");
  auto f = custom("stretched(q=" + std::to_string(q) + ")",
                  [q](const LogTower& x) { return std::exp(q * x.log_lx); }, {}, false, SlowFamily::stretched);
  f.param_ = q;
  return f;
}

SlowFunction SlowFunction::phi2() {
  return custom(
      "feller-pruitt-phi2",
      [](const LogTower& x) {
        const double s = std::sin(x.LLLx());
        return kLn2 + x.log_lx + std::log1p(x.LLx() * s * s);
      },
      phi2_dips, true, SlowFamily::phi2);
}

SlowFunction SlowFunction::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("constant: c must be > 0");
  const double lc = std::log(c);
  auto f = custom("constant(" + std::to_string(c) + ")", [lc](const LogTower&) { return lc; }, {}, false,
                  SlowFamily::constant);
  f.param_ = c;
  return f;
}

SlowFunction SlowFunction::table(std::vector<double> x, std::vector<double> h) {
  if (x.size() != h.size() || x.size() < 2) throw std::invalid_argument("slowfn table: need >= 2 points");
  std::vector<double> lx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !std::isfinite(x[i])) throw std::invalid_argument("slowfn table: x must be > 0");
    if (i > 0 && !(x[i] > x[i - 1])) throw std::invalid_argument("slowfn table: x must be strictly increasing");
    if (!(h[i] > 0.0) || !std::isfinite(h[i])) throw std::invalid_argument("slowfn table: h must be > 0");
    if (i > 0 && h[i] < h[i - 1]) throw std::invalid_argument("slowfn table: h must be nondecreasing");
    lx[i] = std::log(x[i]);
  }
  const double lo = lx.front(), hi = lx.back(), h_lo = h.front(), h_hi = h.back();
  std::function<double(double)> interp;
  if (lx.size() >= 4) {
    auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
        std::vector<double>(lx), std::vector<double>(h));
    interp = [spline](double u) { return (*spline)(u); };
  } else {
    interp = [lx, h](double u) {
      const auto it = std::upper_bound(lx.begin(), lx.end(), u);
      const std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - lx.begin(), 1), lx.size() - 1);
      const double t = (u - lx[i - 1]) / (lx[i] - lx[i - 1]);
      return h[i - 1] + t * (h[i] - h[i - 1]);
    };
  }
  return custom(
      "table(" + std::to_string(x.size()) + " points)",
      [=](const LogTower& t) {
        if (t.log_x <= lo) return std::log(h_lo);
        if (t.log_x >= hi) return std::log(h_hi);
        return std::log(interp(t.log_x));
      },
      {}, false, SlowFamily::table);
}

SlowFunction SlowFunction::parse_table(std::istream& in, const std::string& source) {
  std::vector<double> x, h;
  std::string line;
  int lineno = 0;
  bool header = false;
  auto fail = [&](const std::string& why) {
    throw InputFormatError(source + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (!header) {
      const auto end = line.find_last_not_of(" \t\r");
      if (line.substr(first, end - first + 1) != "# lil-slowfn v1") fail("expected header '# lil-slowfn v1'");
      header = true;
      continue;
    }
    if (line[first] == '#') continue;
    std::istringstream fields(line);
    double a = 0.0, b = 0.0;
    std::string extra;
    if (!(fields >> a >> b)) fail("expected two numeric columns");
    if (fields >> extra) fail("unexpected third column");
    if (!(a > 0.0) || !(b > 0.0)) fail("need x > 0 and h > 0");
    if (!x.empty() && !(a > x.back())) fail("x must be strictly increasing");
    if (!h.empty() && b < h.back()) fail("h must be nondecreasing");
    x.push_back(a);
    h.push_back(b);
  }
  if (!header) {
    lineno = std::max(lineno, 1);
    fail("missing header '# lil-slowfn v1'");
  }
  if (x.size() < 2) fail("need at least two points");
  return table(std::move(x), std::move(h));
}

SlowFunction SlowFunction::load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputFormatError(path.string() + ":0: cannot open file");
  return parse_table(in, path.string());
}

double SlowFunction::operator()(double x) const {
  if (!(x >= 0.0) || !std::isfinite(x)) throw std::domain_error("h: x must be finite and >= 0");
  return std::exp(log_h_(LogTower::of(x)));
}

std::vector<double> SlowFunction::features(double w_lo, double w_hi) const {
  return features_ ? features_(w_lo, w_hi) : std::vector<double>{};
}

// --------------------------------------------------------------- Normalizer

double Normalizer::psi(double x) const {
  if (!(x >= 0.0) || !std::isfinite(x)) throw std::domain_error("psi: x must be finite and >= 0");
  if (x == 0.0) return 0.0;
  return std::exp(log_psi(LogTower::of(x)));
}

double Normalizer::log_psi(const LogTower& x) const { return 0.5 * (x.log_x + h_.log_value(x)); }

double Normalizer::log_psi_inverse(double log_y) const {
  if (std::isnan(log_y)) throw std::domain_error("psi_inverse: NaN");
  if (log_y == -kInf) return -kInf;
  // u + ln h(e^u) = 2 ln y, increasing in u
  const double target = 2.0 * log_y;
  auto f = [&](double u) { return u + h_.log_value(LogTower::from_log(u)) - target; };
  double lo = target - 1.0, hi = target + 1.0;
  for (int i = 0; i < 200 && f(lo) >= 0.0; ++i) lo -= std::max(1.0, std::abs(lo));
  for (int i = 0; i < 200 && f(hi) < 0.0; ++i) hi += std::max(1.0, std::abs(hi));
  if (!(f(lo) < 0.0 && f(hi) >= 0.0)) throw std::domain_error("psi_inverse: no bracket");
  return bisect(f, lo, hi);
}

double Normalizer::psi_inverse(double y) const {
  if (!(y >= 0.0) || !std::isfinite(y)) throw std::domain_error("psi_inverse: y must be finite and >= Psi(0) = 0");
  if (y == 0.0) return 0.0;
  return std::exp(log_psi_inverse(std::log(y)));
}

LogTower Normalizer::psi_inverse_tower(const LogTower& y) const {
  if (y.log_x < 1e300) return LogTower::from_log(log_psi_inverse(y.log_x));
  // e^(w - wy) + ln h e^-wy - 2 = 0 with w = ln ln x, wy = ln ln y
  const double wy = y.log_lx;
  auto f = [&](double w) {
    return std::exp(w - wy) + h_.log_value(LogTower::from_loglog(w)) * std::exp(-wy) - 2.0;
  };
  double lo = std::max(0.0, wy - 1.0), hi = wy + 1.0;
  for (int i = 0; i < 200 && f(lo) >= 0.0 && lo > 0.0; ++i) lo = std::max(0.0, lo - 1.0);
  for (int i = 0; i < 200 && f(hi) < 0.0; ++i) hi += 1.0;
  return LogTower::from_loglog(bisect(f, lo, hi));
}

// ------------------------------------------------------------- diagnostics

std::string to_string(Trend t) {
  switch (t) {
    case Trend::decreasing: return "decreasing";
    case Trend::flat: return "flat";
    case Trend::increasing: return "increasing";
    case Trend::vanishing: return "vanishing";
  }
  return "flat";
}

HqReport hq_membership(const SlowFunction& h, double q, const std::vector<double>& taus,
                       std::vector<double> log_t_grid) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("hq_membership: q must lie in [0, 1]");
  if (taus.empty()) throw std::domain_error("hq_membership: empty tau grid");
  if (log_t_grid.empty())
    for (int k = 10; k <= 3000; ++k) log_t_grid.push_back(0.1 * k * std::log(10.0));
  std::sort(log_t_grid.begin(), log_t_grid.end());
  HqReport rep;
  rep.q = q;
  rep.consistent = true;
  const double last_decade = log_t_grid.back() - std::log(10.0);
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0 - q))
      rep.warnings.push_back("tau = " + std::to_string(tau) + " lies outside (0, 1 - q)");
    HqRow row;
    row.tau = tau;
    std::vector<double> lx, ld;
    for (double lt : log_t_grid) {
      const LogTower t = LogTower::from_log(lt);
      // t f_tau(t) = exp(ln t + (Lt)^tau)
      const LogTower tf = LogTower::from_log(lt + std::pow(t.Lx(), tau));
      const double d = h.log_value(tf) - h.log_value(t);
      if (!std::isfinite(d)) {
        ++row.excluded;
        continue;
      }
      const double dev = std::abs(std::expm1(d));
      if (lt >= last_decade) row.max_deviation = std::max(row.max_deviation, dev);
      lx.push_back(t.log_lx);
      ld.push_back(dev);
    }
    if (row.excluded > 0)
      rep.warnings.push_back(std::to_string(row.excluded) + " overflowed evaluations excluded at tau = " +
                             std::to_string(tau));
    const std::size_t n = ld.size();
    const std::size_t start = n - std::max<std::size_t>(n / 4, std::min<std::size_t>(n, 2));
    bool all_tiny = true;
    for (std::size_t i = start; i < n; ++i) all_tiny = all_tiny && ld[i] <= 1e-12;
    if (n == 0) {
      row.trend = Trend::flat;
    } else if (all_tiny) {
      row.trend = Trend::vanishing;
    } else {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double m = double(n - start);
      for (std::size_t i = start; i < n; ++i) {
        const double y = std::log(std::max(ld[i], 1e-300));
        sx += lx[i];
        sy += y;
        sxx += lx[i] * lx[i];
        sxy += lx[i] * y;
      }
      const double den = m * sxx - sx * sx;
      row.slope = den > 0 ? (m * sxy - sx * sy) / den : 0.0;
      row.trend = row.slope < -0.01 ? Trend::decreasing : row.slope > 0.01 ? Trend::increasing : Trend::flat;
    }
    rep.consistent = rep.consistent && (row.trend == Trend::decreasing || row.trend == Trend::vanishing);
    rep.rows.push_back(row);
  }
  return rep;
}

ScanGrid limsup_grid(const series::FeatureFn& features, bool oscillatory, int decades) {
  ScanGrid g;
  const double ln10 = std::log(10.0);
  for (int k = 1; k <= decades; ++k) {
    g.points.push_back(LogTower::from_log(k * ln10));
    g.coord.push_back(k);
  }
  if (!oscillatory) {
    g.window_begin = g.points.size() - std::max<std::size_t>(1, g.points.size() / 4);
    return g;
  }
  g.tower = true;
  for (auto& c : g.coord) c = LogTower::from_log(c * ln10).LLLx();
  const double y0 = g.coord.back(), y_max = 7.0 * M_PI;
  std::vector<double> ys;
  for (double y = y0 + 0.01; y <= y_max; y += 0.01) ys.push_back(y);
  if (features)
    for (double w : features(std::exp(y0), std::exp(y_max))) ys.push_back(std::log(w));
  std::sort(ys.begin(), ys.end());
  for (double y : ys) {
    g.points.push_back(LogTower::from_loglog(std::exp(y)));
    g.coord.push_back(y);
  }
  const double start = y_max - 3.0 * M_PI;
  g.window_begin = static_cast<std::size_t>(std::lower_bound(g.coord.begin(), g.coord.end(), start) - g.coord.begin());
  return g;
}

MomentVerdict second_moment_over(const DistributionSpec& dist, const series::LogFn& log_ell,
                                 const series::FeatureFn& features, bool oscillatory,
                                 const series::Options& opt) {
  MomentVerdict mv;
  const auto pt = dist.power_tail();
  if (!pt) {
    // bounded or Gaussian tails: every moment is finite, ell >= ell(0) > 0
    mv.verdict = series::Verdict::convergent;
    mv.basis = "light tail";
    return mv;
  }
  // density of |X| on ln s >= threshold: beta C s^-beta per d ln s
  const double log_bc = std::log(pt->beta) + pt->log_c;
  const double beta = pt->beta, thr = pt->log_threshold;
  series::Integrand f;
  f.log_density = [=](const LogTower& x) {
    if (x.log_x < thr) return -kInf;
    const double lead = beta == 2.0 ? 0.0 : (2.0 - beta) * x.log_x;
    return log_bc + lead - log_ell(x);
  };
  f.features = features;
  f.oscillatory = oscillatory;
  mv.evidence = series::classify(f, opt);
  mv.verdict = mv.evidence.verdict;
  mv.basis = "power tail beta=" + std::to_string(beta);
  return mv;
}

// ------------------------------------------------------------ construction

FixedPointResult psi_fixed_point(const SlowFunction& phi, const LogTower& x, double tol, int max_iter) {
  const double log_ll = std::log(x.LLx());
  double g = log_ll;
  double prev_d = 0.0;
  for (int k = 1; k <= max_iter; ++k) {
    const double g_new = phi.log_value(x.affine(0.5, 0.5 * g - log_ll)) + log_ll;
    const double d = g_new - g;
    // relative change of Psi = sqrt(x h) is half the change of ln h
    if (0.5 * std::abs(d) <= tol) return {g_new, k - 1};
    if (k > 1 && d * prev_d < 0.0)
      g = 0.5 * (g + g_new);
    else
      g = g_new;
    prev_d = d;
  }
  throw NonConvergenceError("fixed point did not converge in " + std::to_string(max_iter) + " iterations at ln x = " +
                                std::to_string(x.log_x),
                            x.log_x, g);
}

Construction construct_psi_from_phi(const DistributionSpec& dist, const SlowFunction& phi,
                                    std::vector<double> log_x_grid) {
  if (log_x_grid.empty())
    for (int k = 1; k <= 30; ++k) log_x_grid.push_back(k * std::log(10.0));

  const SlowFunction phi_copy = phi;
  series::LogFn log_h = [phi_copy](const LogTower& x) { return psi_fixed_point(phi_copy, x).log_h; };
  series::FeatureFn feats;
  if (phi.feature_fn()) {
    // phi's dips sit at w_z = ln L(Psi(x)/LLx); pull them back to w = ln Lx
    feats = [phi_copy](double w_lo, double w_hi) {
      auto m = [&](double w) {
        const LogTower x = LogTower::from_loglog(std::max(w, 0.0));
        const double g = psi_fixed_point(phi_copy, x).log_h;
        return x.affine(0.5, 0.5 * g - std::log(x.LLx())).log_lx;
      };
      return series::pull_back_features(phi_copy.feature_fn(), m, std::max(w_lo, 0.0), w_hi);
    };
  }
  Construction out{Normalizer(SlowFunction::custom("constructed from " + phi.name(), log_h, feats,
                                                   phi.oscillatory(), SlowFamily::constructed)),
                   {}};
  auto& rep = out.report;

  double prev_h = 0.0, prev_ratio = 0.0;
  for (double lx : log_x_grid) {
    const LogTower x = LogTower::from_log(lx);
    const auto fp = psi_fixed_point(phi, x);
    ConstructionRow row;
    row.x = std::exp(lx);
    row.h = std::exp(fp.log_h);
    row.psi = std::exp(0.5 * (lx + fp.log_h));
    row.iterations = fp.iterations;
    rep.max_iterations = std::max(rep.max_iterations, fp.iterations);
    if (row.h < prev_h || std::sqrt(row.h) < prev_ratio) rep.monotone = false;
    prev_h = row.h;
    prev_ratio = std::sqrt(row.h);
    rep.table.push_back(row);
  }
  if (!rep.monotone) rep.warnings.push_back("constructed h or Psi(x)/sqrt(x) decreases on the table grid");

  // limsup H/phi over the trailing window
  const auto grid = limsup_grid(phi.feature_fn(), phi.oscillatory());
  double sup = -kInf;
  for (std::size_t i = grid.window_begin; i < grid.points.size(); ++i)
    sup = std::max(sup, dist.log_H(grid.points[i]) - phi.log_value(grid.points[i]));
  rep.limsup_H_over_phi = std::exp(sup);
  rep.limsup_warning = std::abs(rep.limsup_H_over_phi - 1.0) > 0.05;
  if (rep.limsup_warning)
    rep.warnings.push_back("limsup H/phi = " + std::to_string(rep.limsup_H_over_phi) + ", expected 1");

  // E X^2 / (phi(|X|/LL|X|) LL|X|)
  series::LogFn log_ell = [phi_copy](const LogTower& x) {
    const double log_ll = std::log(x.LLx());
    return phi_copy.log_value(x.affine(1.0, -log_ll)) + log_ll;
  };
  series::FeatureFn ell_feats;
  if (phi.feature_fn()) {
    ell_feats = [phi_copy](double w_lo, double w_hi) {
      auto m = [](double w) {
        const LogTower x = LogTower::from_loglog(std::max(w, 0.0));
        return x.affine(1.0, -std::log(x.LLx())).log_lx;
      };
      return series::pull_back_features(phi_copy.feature_fn(), m, std::max(w_lo, 0.0), w_hi);
    };
  }
  rep.moment = second_moment_over(dist, log_ell, ell_feats, phi.oscillatory());
  return out;
}

}  // namespace lil

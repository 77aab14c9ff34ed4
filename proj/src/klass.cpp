#include "lil/klass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lil {

namespace {

constexpr double kGridLo = 1e-6;
constexpr double kGridHi = 1e160;
constexpr double kGridRatio = 1.05;

// Bisection on an increasing f until the bracket stops shrinking.
template <class F>
double bisect_root(F&& f, double lo, double hi) {
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace

KlassEval::KlassEval(DistributionSpec dist, double rel_tol) : dist_(std::move(dist)), tol_(rel_tol) {
  if (!dist_.nondegenerate()) throw std::domain_error("Klass G: degenerate law (H + tM = 0)");
  if (!dist_.finite_mean()) throw InfiniteMeanError("Klass G needs E|X| < infinity");
  for (double t = kGridLo; t <= kGridHi; t *= kGridRatio) {
    const double g = G(t);
    if (!std::isfinite(g)) break;
    grid_t_.push_back(t);
    grid_g_.push_back(g);
  }
}

double KlassEval::G(double t) const {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error("G: t must be finite and > 0");
  const double d = dist_.D(t);
  if (!(d > 0.0)) throw std::domain_error("G: degenerate law (H + tM = 0)");
  return t * (t / d);
}

double KlassEval::K(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("K: x must be finite and > 0");
  double lo, hi;
  const auto it = std::lower_bound(grid_g_.begin(), grid_g_.end(), x);
  if (it == grid_g_.begin()) {
    hi = grid_t_.front();
    lo = hi;
    for (int i = 0; i < 2000 && G(lo) >= x; ++i) lo *= 0.5;
    if (!(G(lo) < x)) throw BracketError("K: no lower bracket for x = " + std::to_string(x));
  } else if (it == grid_g_.end()) {
    lo = grid_t_.back();
    hi = lo;
    for (int i = 0; i < 2000 && G(hi) < x && std::isfinite(hi); ++i) hi *= 2.0;
    if (!(G(hi) >= x)) throw BracketError("K: no upper bracket for x = " + std::to_string(x));
  } else {
    const auto k = static_cast<std::size_t>(it - grid_g_.begin());
    lo = grid_t_[k - 1];
    hi = grid_t_[k];
    if (*it == x) return hi;
  }
  const double t = bisect_root([&](double s) { return G(s) - x; }, lo, hi);
  if (std::abs(G(t) / x - 1.0) > tol_)
    throw BracketError("K: inversion missed tolerance at x = " + std::to_string(x));
  return t;
}

double KlassEval::gamma_n(double n) const {
  if (!(n >= 1.0)) throw std::domain_error("gamma_n: n must be >= 1");
  const double ll = LL(n);
  return M_SQRT2 * K(n / ll) * ll;
}

double KlassEval::K_over_sqrt(double x) const { return std::sqrt(dist_.D(K(x))); }

double KlassEval::K_over_x(double x) const {
  const double t = K(x);
  if (dist_.kind() == DistKind::gaussian) return dist_.D(t) / t;
  // exactly E|X| wherever H vanishes
  return dist_.H(t) / t + dist_.M(t);
}

LogTower KlassEval::K_tower(const LogTower& x) const {
  if (x.log_x < 300.0) return LogTower::of(K(std::exp(x.log_x)));
  // G(t)/t is nondecreasing and D nondecreasing, so d ln D / d ln t lies in [0, 1]
  // and u <- (ln x + ln D(e^u)) / 2 contracts by at least 1/2
  auto settle = [](auto&& step, double v) {
    for (int i = 0; i < 200; ++i) {
      const double next = step(v);
      if (!std::isfinite(next)) return std::numeric_limits<double>::quiet_NaN();
      if (std::abs(next - v) <= 4e-16 * std::max(1.0, std::abs(v))) return next;
      v = next;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  if (std::isfinite(x.log_x)) {
    const double u = settle([&](double v) { return 0.5 * (x.log_x + dist_.log_D(LogTower::from_log(v))); },
                            0.5 * x.log_x);
    if (std::isfinite(u)) return LogTower::from_log(u);
    auto f = [&](double v) { return 2.0 * v - dist_.log_D(LogTower::from_log(v)) - x.log_x; };
    double lo = 0.5 * x.log_x, hi = x.log_x;
    for (int i = 0; i < 200 && f(lo) >= 0.0; ++i) lo -= std::max(1.0, std::abs(lo));
    for (int i = 0; i < 200 && f(hi) < 0.0; ++i) hi *= 2.0;
    if (!(f(lo) < 0.0 && f(hi) >= 0.0)) throw BracketError("K: no bracket on the log scale");
    return LogTower::from_log(bisect_root(f, lo, hi));
  }
  // ln x itself overflows: solve in w = ln ln t
  const double wy = x.log_lx;
  const auto pt = dist_.power_tail();
  if (pt && pt->beta < 2.0) return LogTower::from_loglog(wy - std::log(pt->beta));
  const double w = settle(
      [&](double v) {
        return wy + std::log(0.5 * (1.0 + dist_.log_D(LogTower::from_loglog(v)) * std::exp(-wy)));
      },
      wy - std::log(2.0));
  if (std::isfinite(w)) return LogTower::from_loglog(w);
  auto f = [&](double v) {
    const double ld = dist_.log_D(LogTower::from_loglog(v));
    return 2.0 * std::exp(v - wy) - ld * std::exp(-wy) - 1.0;
  };
  double lo = wy - std::log(2.0) - 1.0, hi = wy;
  for (int i = 0; i < 200 && f(lo) >= 0.0; ++i) lo -= 1.0;
  for (int i = 0; i < 200 && f(hi) < 0.0; ++i) hi += 1.0;
  if (!(f(lo) < 0.0 && f(hi) >= 0.0)) throw BracketError("K: no bracket on the log-log scale");
  return LogTower::from_loglog(bisect_root(f, lo, hi));
}

double KlassEval::log_h_gamma(const LogTower& n) const {
  const double ll = n.LLx();
  const LogTower y = n.affine(1.0, -std::log(ll));
  const LogTower k = K_tower(y);
  return std::log(2.0) + std::log(ll) + dist_.log_D(k);
}

}  // namespace lil

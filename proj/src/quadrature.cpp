#include "lil/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace lil::quad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxDepth = 30;
// panels per integration; a noisy integrand cannot meet the tolerance and would split forever
constexpr int kPanelBudget = 4000;

// One G7/K15 panel. Boost reports the error of the rule mapped to [-1, 1], so
// it is rescaled here; its own adaptive driver skips that step.
double panel(const Integrand& f, double a, double b, double* err) {
  double e = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &e);
  *err = e * 0.5 * (b - a);
  return v;
}

double adapt(const Integrand& f, double a, double b, double v, double err, double abs_tol, double rel_tol,
             int depth, int& budget) {
  if (err <= std::max(abs_tol, rel_tol * std::abs(v)) || depth == 0 || budget <= 0 || !std::isfinite(v)) return v;
  const double mid = 0.5 * (a + b);
  if (!(mid > a && mid < b)) return v;
  double el, er;
  budget -= 2;
  const double vl = panel(f, a, mid, &el);
  const double vr = panel(f, mid, b, &er);
  return adapt(f, a, mid, vl, el, 0.5 * abs_tol, rel_tol, depth - 1, budget) +
         adapt(f, mid, b, vr, er, 0.5 * abs_tol, rel_tol, depth - 1, budget);
}

double integrate_abs(const Integrand& f, double a, double b, double rel_tol, double abs_tol, int& budget) {
  if (!(b > a)) return 0.0;
  double err;
  const double v = panel(f, a, b, &err);
  return adapt(f, a, b, v, err, abs_tol, rel_tol, kMaxDepth, budget);
}

}  // namespace

double integrate(const Integrand& f, double a, double b, double rel_tol) {
  int budget = kPanelBudget;
  return integrate_abs(f, a, b, rel_tol, 0.0, budget);
}

double integrate_pieces(const Integrand& f, std::span<const double> breaks, double rel_tol) {
  // coarse pass fixes an absolute floor so negligible pieces are not refined to their own precision
  double rough = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double err;
    if (breaks[i + 1] > breaks[i]) rough += std::abs(panel(f, breaks[i], breaks[i + 1], &err));
  }
  const double floor = rel_tol * rough * 1e-3;
  double sum = 0.0;
  int budget = kPanelBudget;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    sum += integrate_abs(f, breaks[i], breaks[i + 1], rel_tol, floor, budget);
  }
  return sum;
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_integral_exp(const Integrand& g, double a, double b, std::span<const double> features,
                        double rel_tol) {
  if (!(b > a)) return kNegInf;

  // reference level and its location from a coarse scan plus every feature
  double ref = kNegInf, arg = a;
  auto probe = [&](double x) {
    const double v = g(x);
    if (v > ref) {
      ref = v;
      arg = x;
    }
  };
  constexpr int kScan = 64;
  for (int i = 0; i <= kScan; ++i) probe(a + (b - a) * i / kScan);
  for (double p : features)
    if (p > a && p < b) probe(p);
  if (ref == kNegInf) return kNegInf;
  if (ref == std::numeric_limits<double>::infinity()) return ref;

  // the maximum may sit in a layer narrower than the scan, so it is refined like a
  // feature; the refined points are probed in turn and the search re-centres on
  // whichever is highest, since a peak can sit off a feature on a sloping shoulder
  std::vector<double> breaks = {a, b};
  auto refine = [&](double p) {
    if (p > a && p < b) breaks.push_back(p);
    double step = std::max(std::abs(p) * 4e-16, 1e-300);
    while (step < (b - a)) {
      if (p - step > a && p - step < b) breaks.push_back(p - step);
      if (p + step < b && p + step > a) breaks.push_back(p + step);
      step *= 4.0;
    }
  };
  for (double p : features)
    if (p > a && p < b) refine(p);
  refine(arg);
  for (int round = 0; round < 6; ++round) {
    const double before = arg;
    for (double x : breaks) probe(x);
    if (arg == before) break;
    refine(arg);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  for (int attempt = 0; attempt < 4; ++attempt) {
    double seen = ref, seen_at = arg;
    const Integrand shifted = [&](double z) {
      const double v = g(z);
      if (v > seen) {
        seen = v;
        seen_at = z;
      }
      return v == kNegInf ? 0.0 : std::exp(v - ref);
    };
    const double total = integrate_pieces(shifted, breaks, rel_tol);
    if (std::isfinite(total) && seen <= ref + 600.0) {
      return total > 0.0 ? ref + std::log(total) : kNegInf;
    }
    ref = seen;
    refine(seen_at);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  }
  return ref;
}

}  // namespace lil::quad

#include "lil/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lil/quadrature.hpp"

namespace lil::series {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Density with respect to the depth's own variable at coordinate v.
double depth_log_density(const Integrand& f, int depth, double v) {
  switch (depth) {
    case 1: return f.log_density(LogTower::from_log(v));
    case 2: return f.log_density(LogTower::from_loglog(v)) + v;
    case 3: {
      const double w = std::exp(v);
      return f.log_density(LogTower::from_loglog(w)) + w + v;
    }
    default: break;
  }
  // depth 0: v = x, du = dx / x
  return f.log_density(LogTower::of(v)) - std::log(v);
}

// Feature w-points mapped into the depth's variable.
std::vector<double> depth_features(const Integrand& f, int depth, double lo, double hi) {
  if (!f.features) return {};
  double w_lo, w_hi;
  switch (depth) {
    case 0: w_lo = std::log(L(lo)); w_hi = std::log(L(hi)); break;
    case 1: w_lo = std::log(std::max(lo, 1.0)); w_hi = std::log(std::max(hi, 1.0)); break;
    case 2: w_lo = lo; w_hi = hi; break;
    default: w_lo = std::exp(lo); w_hi = std::exp(hi); break;
  }
  std::vector<double> out;
  for (double w : f.features(w_lo, w_hi)) {
    double v;
    switch (depth) {
      case 0: v = std::exp(std::exp(w)); break;
      case 1: v = std::exp(w); break;
      case 2: v = w; break;
      default: v = std::log(w); break;
    }
    if (v > lo && v < hi && std::isfinite(v)) out.push_back(v);
  }
  return out;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::convergent: return "convergent";
    case Verdict::divergent: return "divergent";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

BlockFit fit_blocks(const std::vector<double>& log_B, const Options& opt) {
  BlockFit fit;
  const int n = static_cast<int>(log_B.size());
  if (n == 0) return fit;
  const int win = std::clamp(static_cast<int>(std::ceil(n * opt.window_fraction)), std::min(n, 4), n);
  fit.window = win;
  const int start = n - win;
  for (int i = start; i < n; ++i) {
    if (std::isnan(log_B[i])) return fit;
    if (log_B[i] == kInf) {
      fit.verdict = Verdict::divergent;
      fit.ratio = kInf;
      return fit;
    }
  }
  if (log_B[n - 1] == -kInf) {
    // the tail vanishes identically
    fit.verdict = Verdict::convergent;
    return fit;
  }
  std::vector<double> env(win);
  double run = -kInf;
  for (int i = n - 1; i >= start; --i) {
    run = std::max(run, log_B[i]);
    env[i - start] = run;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < win; ++i) {
    sx += i;
    sy += env[i];
    sxx += double(i) * i;
    sxy += i * env[i];
  }
  const double denom = win * sxx - sx * sx;
  const double slope = denom > 0 ? (win * sxy - sx * sy) / denom : 0.0;
  fit.ratio = std::exp(slope);
  fit.decay = -std::expm1(env.back() - env.front());
  if (fit.ratio >= 1.0 || fit.decay < opt.flat_decay)
    fit.verdict = Verdict::divergent;
  else if (fit.ratio < opt.convergent_ratio)
    fit.verdict = Verdict::convergent;
  return fit;
}

double block_log_integral(const Integrand& f, int depth, double lo, double hi, double rel_tol) {
  auto g = [&](double v) { return depth_log_density(f, depth, v); };
  const auto feats = depth_features(f, depth, lo, hi);
  return quad::log_integral_exp(g, lo, hi, feats, rel_tol);
}

Classification classify(const Integrand& f, const Options& opt) {
  Classification out;
  auto run_depth = [&](int depth, int count) {
    std::vector<double> logs;
    for (int j = 0; j < count; ++j) {
      const double lo = std::ldexp(1.0, j), hi = std::ldexp(1.0, j + 1);
      double v;
      if (depth == 0 && j < opt.depth0_exact) {
        v = -kInf;
        for (double n = lo; n < hi; n += 1.0) v = quad::log_add(v, depth_log_density(f, 0, n));
      } else {
        v = block_log_integral(f, depth, lo, hi, opt.rel_tol);
      }
      logs.push_back(v);
      out.blocks.push_back({depth, j, lo, hi, v});
    }
    return logs;
  };
  if (opt.shallow_evidence) {
    run_depth(0, opt.depth0_blocks);
    run_depth(1, opt.depth1_blocks);
  }
  out.depth = 2;
  out.fit = fit_blocks(run_depth(2, opt.depth2_blocks), opt);
  if (out.fit.verdict == Verdict::inconclusive && !f.oscillatory) {
    out.depth = 3;
    out.fit = fit_blocks(run_depth(3, opt.depth3_blocks), opt);
  }
  out.verdict = out.fit.verdict;
  return out;
}

std::vector<double> pull_back_features(const FeatureFn& outer, const std::function<double(double)>& m,
                                       double w_lo, double w_hi) {
  if (!outer) return {};
  const double m_lo = m(w_lo), m_hi = m(w_hi);
  std::vector<double> out;
  for (double target : outer(m_lo, m_hi)) {
    double a = w_lo, b = w_hi;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (m(mid) < target)
        a = mid;
      else
        b = mid;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

}  // namespace lil::series

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lil/logscale.hpp"

namespace lil::series {

enum class Verdict { convergent, divergent, inconclusive };
std::string to_string(Verdict v);

/// ln of a function of x, evaluated at a point that may lie beyond the double range.
using LogFn = std::function<double(const LogTower&)>;
/// Points in w = ln ln x (within [w_lo, w_hi]) where a function has narrow features.
using FeatureFn = std::function<std::vector<double>(double w_lo, double w_hi)>;

/// A nonnegative integrand f on x >= e, given as ln of its density with respect
/// to u = ln x. A series sum_n a_n is the integrand with log density ln(n a_n).
struct Integrand {
  LogFn log_density;
  FeatureFn features;
  /// Features recur forever (e.g. sin^2 of LLLx), so the y = ln w scale cannot resolve them.
  bool oscillatory = false;
};

/// One dyadic block [lo, hi) of the depth's variable: n, u = ln n, w = ln u or y = ln w.
struct Block {
  int depth = 0;
  int j = 0;
  double lo = 0.0;
  double hi = 0.0;
  double log_B = 0.0;
};

struct Options {
  int depth0_blocks = 53;
  int depth0_exact = 10;  // blocks summed term by term
  int depth1_blocks = 64;
  int depth2_blocks = 46;
  int depth3_blocks = 9;
  double window_fraction = 1.0 / 3.0;
  double convergent_ratio = 0.95;
  double flat_decay = 0.05;
  double rel_tol = 1e-4;
  /// Evaluate the shallow depths 0 and 1 for evidence only.
  bool shallow_evidence = true;
};

/// Fit over the trailing window of a block sequence.
struct BlockFit {
  Verdict verdict = Verdict::inconclusive;
  double ratio = 0.0;   // fitted geometric ratio of the suffix-max envelope
  double decay = 0.0;   // fraction by which the envelope falls across the window
  int window = 0;
};

struct Classification {
  Verdict verdict = Verdict::inconclusive;
  int depth = 2;  // depth the verdict was read from
  BlockFit fit;
  std::vector<Block> blocks;  // every evaluated block, all depths
};

/// Classifies log block sums: envelope = suffix max of ln B over the trailing
/// window, slope by least squares. Convergent when the fitted ratio is below
/// `convergent_ratio` or the tail is identically zero; divergent when the ratio
/// is >= 1 or the envelope falls by less than `flat_decay` across the window.
BlockFit fit_blocks(const std::vector<double>& log_B, const Options& opt = {});

/// ln of the integral of f over one block of the given depth.
double block_log_integral(const Integrand& f, int depth, double lo, double hi, double rel_tol);

/// Convergence of the integral of f out to infinity (equivalently of the series).
Classification classify(const Integrand& f, const Options& opt = {});

/// Points in [w_lo, w_hi] whose image under an increasing map m hits one of the
/// features of the outer function, found by bisection. Used to carry features of
/// h through arguments such as Psi(x)/LLx.
std::vector<double> pull_back_features(const FeatureFn& outer, const std::function<double(double)>& m,
                                       double w_lo, double w_hi);

}  // namespace lil::series

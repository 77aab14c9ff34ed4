#include <gtest/gtest.h>

#include <cmath>

#include "lil/klass.hpp"

using namespace lil;

namespace {
const KlassEval& rad() {
  static const KlassEval k(DistributionSpec::rademacher());
  return k;
}
const KlassEval& fp() {
  static const KlassEval k(DistributionSpec::feller_pruitt());
  return k;
}
const KlassEval& gauss() {
  static const KlassEval k(DistributionSpec::gaussian(1.0));
  return k;
}
}  // namespace

TEST(Klass, GExamples) {
  EXPECT_EQ(rad().G(2.0), 4.0);
  EXPECT_EQ(rad().G(1.0), 1.0);
  EXPECT_NEAR(fp().G(M_E), M_E * M_E / 4.0, 1e-14);
  EXPECT_THROW(KlassEval(DistributionSpec::tail_table(TailTable({1.0}, {0.0}))), std::domain_error);
  EXPECT_THROW(rad().G(0.0), std::domain_error);
}

TEST(Klass, KExamples) {
  EXPECT_NEAR(rad().K(9.0), 3.0, 1e-15);
  for (double x = 1.0; x < 1e200; x *= 13.7) EXPECT_NEAR(rad().K(x), std::sqrt(x), 1e-15 * std::sqrt(x));
  EXPECT_THROW(rad().K(0.0), std::domain_error);
}

TEST(Klass, RoundTripOnGrid) {
  for (const KlassEval* k : {&rad(), &fp(), &gauss()}) {
    const auto& ts = k->grid_t();
    for (std::size_t i = 0; i < ts.size(); i += 37) {
      const double t = ts[i];
      EXPECT_NEAR(k->K(k->G(t)), t, 1e-8 * t) << k->dist().name() << " t=" << t;
    }
    for (double x = 1e-3; x < 1e250; x *= 7.1) EXPECT_NEAR(k->G(k->K(x)) / x, 1.0, 1e-10);
  }
}

TEST(Klass, GammaExamples) {
  for (double n : {1.0, 10.0, 1e3, 1e9, 1e15}) {
    EXPECT_NEAR(rad().gamma_n(n), std::sqrt(2.0 * n * LL(n)), 1e-14 * std::sqrt(n * LL(n))) << n;
  }
  EXPECT_NEAR(fp().gamma_n(1.0), M_SQRT2 * fp().K(1.0), 1e-15);
  const double sigma = 2.5;
  const KlassEval g(DistributionSpec::gaussian(sigma));
  for (double n = 1e3; n <= 1e12; n *= 10.0) {
    EXPECT_NEAR(g.gamma_n(n) / (sigma * std::sqrt(2.0 * n * LL(n))), 1.0, 1e-9) << n;
  }
}

TEST(KlassProperty, MonotoneRatios) {
  for (const KlassEval* k : {&rad(), &fp(), &gauss()}) {
    double prev_s = 0.0, prev_x = INFINITY, prev_k = 0.0;
    for (double x = 10.0; x <= 1e10; x *= 1.07) {
      const double s = k->K_over_sqrt(x), r = k->K_over_x(x), kx = k->K(x);
      EXPECT_GE(s, prev_s) << k->dist().name() << " " << x;
      EXPECT_LE(r, prev_x) << k->dist().name() << " " << x;
      EXPECT_GT(kx, prev_k);
      EXPECT_NEAR(s, kx / std::sqrt(x), 1e-9 * s);
      prev_s = s;
      prev_x = r;
      prev_k = kx;
    }
    const auto m2 = k->dist().second_moment();
    if (!m2.divergent) EXPECT_NEAR(prev_s, std::sqrt(m2.value), 1e-6);
    EXPECT_LT(prev_x, 1e-3);
  }
}

TEST(KlassProperty, ParetoMonotoneIncludingFlatRegion) {
  // below xmin K/x is exactly E|X|; near the top K/sqrt(x) creeps toward sqrt(EX^2)
  for (const auto& d : {DistributionSpec::sym_pareto(3.0, 1.0), DistributionSpec::sym_pareto(1.5, 2.0)}) {
    const KlassEval k(d);
    double prev_s = 0.0, prev_x = INFINITY;
    for (double lx = std::log(1e-3); lx <= std::log(1e250); lx += 0.01) {
      const double x = std::exp(lx);
      const double s = k.K_over_sqrt(x), r = k.K_over_x(x);
      EXPECT_GE(s, prev_s) << d.name() << " " << x;
      EXPECT_LE(r, prev_x) << d.name() << " " << x;
      prev_s = s;
      prev_x = r;
    }
    EXPECT_EQ(k.K_over_x(1e-3), d.mean_abs());
  }
}

TEST(KlassTower, MatchesDirectAndExtends) {
  for (const KlassEval* k : {&rad(), &fp(), &gauss()}) {
    for (double n : {3.0, 1e5, 1e100, 1e250}) {
      const double g = k->gamma_n(n);
      EXPECT_NEAR(k->log_h_gamma(LogTower::of(n)), 2.0 * std::log(g) - std::log(n), 1e-9) << n;
    }
    double prev = -INFINITY;
    for (double lx = 100.0; lx < 1e300; lx *= 30.0) {
      const double v = k->log_h_gamma(LogTower::from_log(lx));
      EXPECT_GE(v, prev - 1e-9);
      prev = v;
    }
  }
  // FP, deep: D(K(y)) ~ 2 ln K ~ ln y, so h_gamma ~ 2 LLn * ln n
  const auto n = LogTower::from_loglog(2000.0);
  EXPECT_NEAR(fp().log_h_gamma(n), std::log(2.0) + std::log(2000.0) + 2000.0, 1e-6);
  EXPECT_NEAR(rad().log_h_gamma(n), std::log(2.0) + std::log(2000.0), 1e-12);
}

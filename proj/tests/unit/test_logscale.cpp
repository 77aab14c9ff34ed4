#include <gtest/gtest.h>

#include <cmath>

#include "lil/logscale.hpp"

using namespace lil;

TEST(Logscale, ClampAndExactPoints) {
  EXPECT_EQ(L(1.0), 1.0);
  EXPECT_EQ(L(0.0), 1.0);
  EXPECT_NEAR(L(std::exp(2.0)), 2.0, 1e-15);
  EXPECT_EQ(LL(std::exp(M_E)), 1.0);
  EXPECT_EQ(LL(5.0), 1.0);
  EXPECT_NEAR(LLL(std::exp(std::exp(M_E))), 1.0, 1e-15);
  for (int k = 1; k <= 700; k += 7) EXPECT_NEAR(L(std::exp(double(k))), k, 1e-12 * k);
}

TEST(Logscale, DomainErrors) {
  EXPECT_THROW(L(-1.0), std::domain_error);
  EXPECT_THROW(L(INFINITY), std::domain_error);
  EXPECT_THROW(L(NAN), std::domain_error);
  EXPECT_THROW(f_tau(3.0, 1.5), std::domain_error);
  EXPECT_THROW(f_tau(3.0, -0.1), std::domain_error);
}

TEST(Logscale, FTau) {
  EXPECT_EQ(f_tau(123.0, 0.0), M_E);
  EXPECT_EQ(f_tau(0.0, 0.0), M_E);
  EXPECT_NEAR(f_tau(std::exp(4.0), 0.5), std::exp(2.0), 1e-12);
  EXPECT_NEAR(f_tau(std::exp(9.0), 1.0), std::exp(9.0), 1e-9);
  EXPECT_NEAR(f_tau(1e300, 1.0), 1e300, 1e288);
  EXPECT_TRUE(std::isfinite(f_tau(1e300, 0.999)));
  EXPECT_NEAR(log_f_tau(1e300, 1.0), 300 * std::log(10.0), 1e-10);
}

TEST(LogscaleProperty, CompositionAndMonotonicity) {
  double prev_l = 0, prev_ll = 0, prev_lll = 0;
  for (double x = 0.0; x <= 1e300; x = x == 0.0 ? 1e-3 : x * 1.37) {
    EXPECT_EQ(L(L(x)), LL(x));
    EXPECT_EQ(L(LL(x)), LLL(x));
    EXPECT_GE(L(x), 1.0);
    EXPECT_GE(L(x), prev_l);
    EXPECT_GE(LL(x), prev_ll);
    EXPECT_GE(LLL(x), prev_lll);
    prev_l = L(x);
    prev_ll = LL(x);
    prev_lll = LLL(x);
  }
}

TEST(LogscaleProperty, FTauMonotoneInTandTau) {
  for (double tau : {0.0, 0.1, 0.5, 0.9, 1.0}) {
    double prev = 0.0;
    for (double t = 0.0; t <= 1e300; t = t == 0.0 ? 1e-2 : t * 2.1) {
      const double v = log_f_tau(t, tau);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
  for (double t = M_E; t <= 1e300; t *= 9.0)
    for (int k = 0; k < 20; ++k) EXPECT_LE(log_f_tau(t, k / 20.0), log_f_tau(t, (k + 1) / 20.0));
}

TEST(LogTower, MatchesDirectEvaluation) {
  for (double x : {0.5, 3.0, 20.0, 1e10, 1e300}) {
    const auto t = LogTower::of(x);
    EXPECT_NEAR(t.Lx(), L(x), 1e-14 * L(x));
    EXPECT_NEAR(t.LLx(), LL(x), 1e-14 * LL(x));
    EXPECT_NEAR(t.LLLx(), LLL(x), 1e-14 * LLL(x));
  }
}

TEST(LogTower, BeyondDoubleRange) {
  const auto t = LogTower::from_loglog(1000.0);
  EXPECT_TRUE(std::isinf(t.log_x));
  EXPECT_NEAR(t.LLx(), 1000.0, 1e-12);
  EXPECT_NEAR(t.LLLx(), std::log(1000.0), 1e-12);
  // sqrt(x) * e: ln ln = w - ln 2 + log1p(2 e^-w)
  const auto s = t.affine(0.5, 1.0);
  EXPECT_NEAR(s.log_lx, 1000.0 - std::log(2.0), 1e-12);
  const auto u = LogTower::of(1e100).affine(2.0, 3.0);
  EXPECT_NEAR(u.log_x, 200 * std::log(10.0) + 3.0, 1e-9);
}

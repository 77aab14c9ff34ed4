#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lil/normalizer.hpp"

using namespace lil;

namespace {
const std::vector<double> kTaus = {0.25, 0.5, 0.75, 0.9};

std::vector<SlowFunction> builtins() {
  return {SlowFunction::loglog_power(0.0), SlowFunction::loglog_power(1.0), SlowFunction::loglog_power(2.0),
          SlowFunction::log_power(0.5),    SlowFunction::log_power(1.0),    SlowFunction::log_power(2.0),
          SlowFunction::stretched(0.3),    SlowFunction::stretched(0.5),    SlowFunction::stretched(1.0),
          SlowFunction::phi2(),            SlowFunction::constant(3.0)};
}
}  // namespace

TEST(Normalizer, PsiExamples) {
  EXPECT_NEAR(Normalizer(SlowFunction::loglog_power(1.0)).psi(M_E), std::sqrt(2.0 * M_E), 1e-14);
  const double sigma = 1.7;
  const Normalizer c(SlowFunction::constant(2.0 * sigma * sigma));
  for (double x : {0.5, 3.0, 1e8, 1e250}) EXPECT_NEAR(c.psi(x) / (sigma * std::sqrt(2.0 * x)), 1.0, 1e-13);
  const double e3 = std::exp(3.0);
  EXPECT_NEAR(Normalizer(SlowFunction::log_power(1.0)).psi(e3), std::sqrt(6.0 * e3), 1e-12);
  EXPECT_EQ(c.psi(0.0), 0.0);
  EXPECT_THROW(c.psi(-1.0), std::domain_error);
}

TEST(Normalizer, InverseRoundTrip) {
  for (const auto& h : builtins()) {
    const Normalizer n(h);
    EXPECT_NEAR(n.psi_inverse(n.psi(1e6)), 1e6, 1e-2) << h.name();
    for (double x = 1.0; x < 1e290; x *= 1e7) {
      EXPECT_NEAR(n.psi_inverse(n.psi(x)) / x, 1.0, 1e-8) << h.name() << " x=" << x;
    }
  }
  EXPECT_THROW(Normalizer(SlowFunction::constant(1.0)).psi_inverse(-1.0), std::domain_error);
}

TEST(Normalizer, PsiMonotoneAndSqrtRatio) {
  for (const auto& h : builtins()) {
    const Normalizer n(h);
    double prev = 0.0, prev_ratio = 0.0;
    for (double lx = -3.0; lx < 690.0; lx += 0.37) {
      const LogTower x = LogTower::from_log(lx);
      const double lp = n.log_psi(x);
      const double ratio = lp - 0.5 * lx;
      if (lx > -3.0) {
        EXPECT_GT(lp, prev) << h.name() << " ln x=" << lx;
        EXPECT_GE(ratio, prev_ratio - 1e-12) << h.name() << " ln x=" << lx;
      }
      prev = lp;
      prev_ratio = ratio;
    }
  }
}

TEST(Normalizer, Case1InverseTrend) {
  // Psi^-1(y) / (y^2 / (2 (LLy)^p)) = (LLy / LL Psi^-1(y))^p, rising toward 1
  for (double p : {1.0, 2.0}) {
    const Normalizer n(SlowFunction::loglog_power(p));
    double prev = 0.0;
    for (double ly = 6.0 * std::log(10.0); ly <= 300.0 * std::log(10.0); ly += 10.0) {
      const LogTower y = LogTower::from_log(ly);
      const double lx = n.log_psi_inverse(ly);
      const double ratio = std::exp(lx - (2.0 * ly - std::log(2.0) - p * std::log(y.LLx())));
      EXPECT_NEAR(ratio, std::pow(y.LLx() / LogTower::from_log(lx).LLx(), p), 1e-9);
      EXPECT_GT(ratio, prev);
      EXPECT_LT(ratio, 1.0);
      prev = ratio;
    }
  }
}

TEST(Normalizer, Case2InverseLimit) {
  for (double r : {0.5, 1.0}) {
    const Normalizer n(SlowFunction::log_power(r));
    const double ly = 300.0 * std::log(10.0);
    const double ratio = std::exp(n.log_psi_inverse(ly) - (2.0 * ly - r * std::log(ly)));
    EXPECT_NEAR(ratio / std::pow(2.0, -(r + 1.0)), 1.0, 0.02) << r;
  }
}

TEST(Normalizer, TowerInverse) {
  const Normalizer n(SlowFunction::loglog_power(1.0));
  for (double w : {10.0, 50.0, 1e3}) {
    const LogTower y = LogTower::from_loglog(w);
    const LogTower x = n.psi_inverse_tower(y);
    // ln x + ln 2 + ln LLx = 2 ln y, divided through by ln y
    EXPECT_NEAR(std::exp(x.log_lx - w) + (std::log(2.0) + std::log(x.LLx())) * std::exp(-w), 2.0, 1e-12);
    EXPECT_GT(x.log_lx, w);
  }
}

TEST(Normalizer, SlowVariationAndPositivity) {
  for (const auto& h : builtins()) {
    double prev = -INFINITY;
    for (double lx = 0.0; lx < 690.0; lx += 0.05) {
      const double v = h.log_value(LogTower::from_log(lx));
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, prev - 1e-12) << h.name() << " ln x=" << lx;
      prev = v;
    }
    if (h.family() == SlowFamily::stretched && h.param() == 1.0) continue;  // h = x is not slowly varying
    double last = 0.0;
    for (double lx = 10.0; lx < 690.0; lx *= 1.5) {
      const double d = std::abs(h.log_value(LogTower::from_log(lx + 1.0)) - h.log_value(LogTower::from_log(lx)));
      last = d;
    }
    EXPECT_LT(last, 0.1) << h.name();
  }
}

TEST(Normalizer, Phi2MonotoneDenseGrid) {
  const auto phi = SlowFunction::phi2();
  double prev = -INFINITY;
  for (double lx = 0.0; lx < 1e6; lx *= 1.0005, lx += 1e-3) {
    const double v = phi.log_value(LogTower::from_log(lx));
    EXPECT_GE(v, prev - 1e-12) << lx;
    prev = v;
  }
  EXPECT_EQ(phi.features(1.0, 1e20).size(), 14u);
  EXPECT_TRUE(phi.oscillatory());
}

TEST(Normalizer, HqExamples) {
  for (const auto& h : {SlowFunction::loglog_power(1.0), SlowFunction::loglog_power(2.0),
                        SlowFunction::log_power(0.5), SlowFunction::log_power(1.0), SlowFunction::log_power(2.0)}) {
    const auto rep = hq_membership(h, 0.0, kTaus);
    EXPECT_TRUE(rep.consistent) << h.name();
    for (const auto& row : rep.rows) EXPECT_EQ(row.trend, Trend::decreasing) << h.name() << " " << row.tau;
  }
  const auto c = hq_membership(SlowFunction::constant(4.0), 0.0, kTaus);
  EXPECT_TRUE(c.consistent);
  for (const auto& row : c.rows) {
    EXPECT_EQ(row.max_deviation, 0.0);
    EXPECT_EQ(row.trend, Trend::vanishing);
  }
}

TEST(Normalizer, HqStretchedThreshold) {
  for (double q : {0.2, 0.3, 0.5}) {
    const auto h = SlowFunction::stretched(q);
    const auto below = hq_membership(h, q, {0.5 * (1.0 - q)});
    EXPECT_TRUE(below.consistent) << q;
    const auto above = hq_membership(h, 0.0, {1.0 - q + 0.1});
    EXPECT_EQ(above.rows[0].trend, Trend::increasing) << q;
    EXPECT_FALSE(above.consistent);
    EXPECT_FALSE(above.warnings.empty() && 1.0 - q + 0.1 >= 1.0);
  }
}

TEST(Normalizer, StretchedFamilyConstants) {
  // Psi_q(x) = sqrt(x exp((Lx)^q)), H_q(x) = x^2 / exp(2^q (Lx)^q)
  auto ratios = [](double q, double u) {
    const Normalizer n(SlowFunction::stretched(q));
    const double log_hq = 2.0 * u - std::exp(q * (std::log(2.0) + std::log(u)));
    return std::pair{std::exp(n.log_psi(LogTower::from_log(log_hq)) - u),
                     std::exp(n.log_psi_inverse(u) - log_hq)};
  };
  const auto [a, b] = ratios(0.3, 690.0);
  EXPECT_NEAR(a, 1.0, 0.02);
  EXPECT_NEAR(b, 1.0, 0.02);
  const auto [c, d] = ratios(0.5, 690.0);
  EXPECT_NEAR(c / std::exp(-0.25), 1.0, 0.02);
  EXPECT_NEAR(d / std::exp(0.5), 1.0, 0.02);
  // the q < 1/2 ratio approaches 1 from below
  EXPECT_LT(ratios(0.3, 100.0).first, a);
}

TEST(Normalizer, TableSlowFunction) {
  std::istringstream in("# lil-slowfn v1\n# comment\n1 1\n10 2\n100 3\n1000 3.5\n");
  const auto h = SlowFunction::parse_table(in);
  EXPECT_NEAR(h(10.0), 2.0, 1e-12);
  EXPECT_NEAR(h(0.5), 1.0, 1e-12);
  EXPECT_NEAR(h(1e6), 3.5, 1e-12);
  double prev = 0.0;
  for (double x = 1.0; x < 2000.0; x *= 1.01) {
    EXPECT_GE(h(x), prev - 1e-12);
    prev = h(x);
  }
  std::istringstream bad_header("1 1\n");
  EXPECT_THROW(SlowFunction::parse_table(bad_header, "f"), InputFormatError);
  std::istringstream decreasing("# lil-slowfn v1\n1 2\n2 1\n");
  try {
    SlowFunction::parse_table(decreasing, "f");
    FAIL();
  } catch (const InputFormatError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("f:3:", 0), 0u) << e.what();
  }
}

TEST(Construction, ConstantPhiOneStep) {
  const double sigma2 = 2.25;
  const auto phi = SlowFunction::constant(sigma2);
  for (double lx : {5.0, 50.0, 500.0}) {
    const LogTower x = LogTower::from_log(lx);
    const auto fp = psi_fixed_point(phi, x);
    EXPECT_EQ(fp.iterations, 1);
    EXPECT_NEAR(0.5 * (lx + fp.log_h), 0.5 * (lx + std::log(sigma2 * x.LLx())), 1e-13);
  }
}

TEST(Construction, FellerPruittPhi1) {
  const auto c = construct_psi_from_phi(DistributionSpec::feller_pruitt(), SlowFunction::log_power(1.0));
  EXPECT_EQ(c.report.moment.verdict, series::Verdict::divergent);
  EXPECT_NEAR(c.report.limsup_H_over_phi, 1.0, 1e-9);
  EXPECT_TRUE(c.report.monotone);
  // Psi_1 ~ (x Lx LLx)^(1/2): the ratio falls toward 1
  double prev = INFINITY;
  for (double lx = 6.0 * std::log(10.0); lx <= 300.0 * std::log(10.0); lx += 20.0) {
    const LogTower x = LogTower::from_log(lx);
    const double r = std::exp(c.normalizer.log_psi(x) - 0.5 * (lx + std::log(lx) + std::log(x.LLx())));
    EXPECT_LT(r, prev);
    EXPECT_GT(r, 1.0);
    prev = r;
  }
  EXPECT_LT(prev, 1.01);
}

TEST(Construction, FellerPruittPhi2) {
  const auto phi = SlowFunction::phi2();
  const auto c = construct_psi_from_phi(DistributionSpec::feller_pruitt(), phi);
  EXPECT_EQ(c.report.moment.verdict, series::Verdict::convergent);
  EXPECT_EQ(c.report.moment.evidence.depth, 2);
  EXPECT_NEAR(c.report.limsup_H_over_phi, 1.0, 1e-9);
  EXPECT_TRUE(c.normalizer.h().oscillatory());
  // the fixed point satisfies its own defining relation
  for (const auto& row : c.report.table) {
    const LogTower x = LogTower::of(row.x);
    const double lhs = std::log(row.h);
    const double rhs = phi.log_value(LogTower::from_log(std::log(row.psi) - std::log(x.LLx()))) + std::log(x.LLx());
    EXPECT_NEAR(lhs, rhs, 1e-9) << row.x;
  }
}

TEST(Construction, NonConvergenceCarriesIterate) {
  // ln h = 4 ln z doubles g each step
  const auto wild = SlowFunction::custom("wild", [](const LogTower& z) { return 4.0 * z.log_x; });
  try {
    psi_fixed_point(wild, LogTower::from_log(1e3), 1e-10, 20);
    FAIL();
  } catch (const NonConvergenceError& e) {
    EXPECT_TRUE(std::isfinite(e.log_h));
    EXPECT_EQ(e.log_x, 1e3);
  }
}

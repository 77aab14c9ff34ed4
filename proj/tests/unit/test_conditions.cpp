#include <gtest/gtest.h>

#include <cmath>

#include "lil/conditions.hpp"

using namespace lil;
using series::Verdict;

namespace {
const DistributionSpec kFP = DistributionSpec::feller_pruitt();
const DistributionSpec kGauss = DistributionSpec::gaussian(1.0);
const DistributionSpec kRad = DistributionSpec::rademacher();

Normalizer scaled(const SlowFunction& h, double c) {
  // a_n -> c a_n is h -> c^2 h
  const double shift = 2.0 * std::log(c);
  return Normalizer(SlowFunction::custom(
      "scaled", [h, shift](const LogTower& x) { return h.log_value(x) + shift; }, h.feature_fn(), h.oscillatory()));
}
}  // namespace

TEST(Conditions, LimsupExamples) {
  const auto g = limsup_H_condition(kGauss, Normalizer(SlowFunction::loglog_power(1.0)));
  EXPECT_EQ(g.trend, LimsupTrend::converging);
  // F = H LLx / (2 LL x') with LL x' = LLx + ln 2 to leading order
  EXPECT_NEAR(std::sqrt(2.0 * g.value), 1.0, 0.05);
  EXPECT_EQ(g.skipped, 0);

  const auto d = limsup_H_condition(kFP, Normalizer(SlowFunction::log_power(1.0)));
  EXPECT_EQ(d.trend, LimsupTrend::diverging);
  EXPECT_TRUE(d.divergent);
  EXPECT_NEAR(d.slope_loglog, 1.0, 0.1);  // F grows like 2 LLx

  const auto z = limsup_H_condition(kFP, Normalizer(SlowFunction::log_power(2.0)));
  EXPECT_EQ(z.trend, LimsupTrend::vanishing);
  EXPECT_EQ(z.value, 0.0);
  EXPECT_THROW(limsup_H_condition(kFP, Normalizer(SlowFunction::log_power(2.0)), 10), std::domain_error);
}

TEST(Conditions, LimsupFunctionalOracle) {
  // rademacher, h = 2 Lx: F = LLx / (2 Lx') with x' solving 2 x' Lx' = (x LLx)^2
  const Normalizer nm(SlowFunction::log_power(1.0));
  const auto est = limsup_H_condition(kRad, nm, 40);
  for (const auto& pt : est.table) {
    const double lx = pt.coord * std::log(10.0);
    const double lz = lx + std::log(LogTower::from_log(lx).LLx());
    double lxp = 2.0 * lz;  // solve ln x' + ln 2 + ln ln x' = 2 ln z
    for (int i = 0; i < 100; ++i) lxp = 2.0 * lz - std::log(2.0) - std::log(std::max(lxp, 1.0));
    const double expect = std::log(LogTower::from_log(lx).LLx()) - std::log(2.0) - std::log(lxp);
    EXPECT_NEAR(pt.log_value, expect, 1e-8) << pt.coord;
  }
}

TEST(Conditions, MomentExamples) {
  EXPECT_EQ(moment_condition(kFP, Normalizer(SlowFunction::loglog_power(1.0))).verdict, Verdict::divergent);
  // sum 1 / (n (LLn)^p) diverges for every p
  EXPECT_EQ(moment_condition(kFP, Normalizer(SlowFunction::loglog_power(2.0))).verdict, Verdict::divergent);
  EXPECT_EQ(moment_condition(kFP, Normalizer(SlowFunction::log_power(1.0))).verdict, Verdict::divergent);
  EXPECT_EQ(moment_condition(kFP, Normalizer(SlowFunction::log_power(2.0))).verdict, Verdict::convergent);
  EXPECT_EQ(moment_condition(kRad, Normalizer(SlowFunction::log_power(1.0))).verdict, Verdict::convergent);
  EXPECT_EQ(moment_condition(kGauss, Normalizer(SlowFunction::loglog_power(1.0))).verdict, Verdict::convergent);
  const auto c2 = construct_psi_from_phi(kFP, SlowFunction::phi2());
  EXPECT_EQ(moment_condition(kFP, c2.normalizer).verdict, Verdict::convergent);
}

TEST(Conditions, MomentScaleInvariance) {
  for (const auto& h : {SlowFunction::loglog_power(1.0), SlowFunction::loglog_power(2.0), SlowFunction::log_power(1.0),
                        SlowFunction::log_power(2.0)}) {
    const auto base = moment_condition(kFP, Normalizer(h)).verdict;
    for (double c : {0.5, 2.0}) EXPECT_EQ(moment_condition(kFP, scaled(h, c)).verdict, base) << h.name() << " " << c;
  }
}

TEST(Conditions, CorollaryExamples) {
  for (double sigma : {1.0, 2.0, 0.3}) {
    const auto r = corollary_check(DistributionSpec::gaussian(sigma), CorollaryFamily::loglog_power, 1.0);
    EXPECT_NEAR(r.lambda_hat, sigma, 1e-9 * sigma);
    EXPECT_EQ(r.outcome, Outcome::lil);
  }
  const auto fp2 = corollary_check(kFP, CorollaryFamily::loglog_power, 2.0);
  EXPECT_TRUE(std::isinf(fp2.lambda_hat));
  EXPECT_EQ(fp2.moment.verdict, Verdict::divergent);
  const auto rad = corollary_check(kRad, CorollaryFamily::log_power, 1.0);
  EXPECT_EQ(rad.lambda_hat, 0.0);
  EXPECT_EQ(rad.outcome, Outcome::stability);
  EXPECT_THROW(corollary_check(kRad, CorollaryFamily::loglog_power, 0.5), std::domain_error);
  EXPECT_THROW(corollary_check(kRad, CorollaryFamily::stretched, 0.6), std::domain_error);
  const auto q = corollary_check(kGauss, CorollaryFamily::stretched, 0.3);
  EXPECT_LE(q.bound_lo, q.bound_hi);
}

TEST(Conditions, CorollaryAgreesWithGeneralFunctional) {
  for (double sigma : {1.0, 3.0}) {
    const auto d = DistributionSpec::gaussian(sigma);
    const double cor = corollary_check(d, CorollaryFamily::loglog_power, 1.0).lambda_hat;
    const double gen = analyze(d, Normalizer(SlowFunction::loglog_power(1.0))).lambda_hat;
    EXPECT_NEAR(gen / cor, 1.0, 0.05) << sigma;
  }
}

TEST(Conditions, ScaleEquivariance) {
  // xmin 1 -> 2 is X -> 2X
  const double a = corollary_check(DistributionSpec::sym_pareto(3.0, 1.0), CorollaryFamily::loglog_power, 1.0).lambda_hat;
  const double b = corollary_check(DistributionSpec::sym_pareto(3.0, 2.0), CorollaryFamily::loglog_power, 1.0).lambda_hat;
  EXPECT_NEAR(b / a, 2.0, 1e-9);
}

TEST(Conditions, StabilityExamples) {
  EXPECT_TRUE(stability_check(kRad, Normalizer(SlowFunction::log_power(1.0))).stable);
  const auto g = stability_check(kGauss, Normalizer(SlowFunction::loglog_power(1.0)));
  EXPECT_FALSE(g.stable);
  EXPECT_NEAR(g.report.lambda_hat, 1.0, 0.05);
  const auto fp = stability_check(kFP, Normalizer(SlowFunction::log_power(2.0)));
  EXPECT_TRUE(fp.stable);
  EXPECT_EQ(fp.report.moment.verdict, Verdict::convergent);
}

TEST(Conditions, ReportInvariants) {
  for (const auto& h : {SlowFunction::loglog_power(1.0), SlowFunction::stretched(0.3), SlowFunction::log_power(1.0)}) {
    const auto r = analyze(kGauss, Normalizer(h));
    EXPECT_GE(r.lambda_hat, 0.0);
    EXPECT_LE(r.bound_lo, r.bound_hi);
    EXPECT_EQ(std::isfinite(r.lambda_hat), !r.limsup.divergent);
    EXPECT_DOUBLE_EQ(r.bound_lo, std::sqrt(1.0 - r.q) * r.lambda_hat);
  }
  const auto infinite_mean = analyze(DistributionSpec::sym_pareto(1.0, 1.0), Normalizer(SlowFunction::log_power(1.0)));
  EXPECT_EQ(infinite_mean.outcome, Outcome::mean_fails);
}

TEST(Conditions, FellerPruittPipeline) {
  const auto c1 = construct_psi_from_phi(kFP, SlowFunction::log_power(1.0));
  EXPECT_EQ(analyze(kFP, c1.normalizer).outcome, Outcome::infinite);
  const auto c2 = construct_psi_from_phi(kFP, SlowFunction::phi2());
  const auto r = analyze(kFP, c2.normalizer);
  EXPECT_EQ(r.limsup.trend, LimsupTrend::oscillating);
  EXPECT_TRUE(r.limsup.tower);
  EXPECT_GE(r.limsup.window_start, 7.0 * M_PI - 3.0 * M_PI - 1e-9);
  // by construction F = H / phi2 on the peaks, so the window sup is 1
  EXPECT_NEAR(r.limsup.window_sup, 1.0, 1e-6);
  EXPECT_EQ(r.outcome, Outcome::lil);
}

TEST(Conditions, Phi2SubstitutionIntegral) {
  const double a = phi2_substitution_integral(30.0);
  const double b = phi2_substitution_integral(60.0);
  EXPECT_NEAR(a, b, 1e-4);
  EXPECT_GT(a, 1.0);
  EXPECT_LT(a, 1.1);
}

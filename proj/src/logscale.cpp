#include "lil/logscale.hpp"

#include <stdexcept>
#include <string>

namespace lil {

namespace {

void require_nonneg(double x, const char* what) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::domain_error(std::string(what) + ": argument must be finite and >= 0, got " +
                            std::to_string(x));
  }
}

}  // namespace

double L(double x) {
  require_nonneg(x, "L");
  // exact clamp branch, no log of small numbers
  if (x <= M_E) return 1.0;
  return std::log(x);
}

double LL(double x) { return L(L(x)); }

double LLL(double x) { return L(LL(x)); }

double log_f_tau(double t, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::domain_error("f_tau: tau must lie in [0, 1], got " + std::to_string(tau));
  }
  if (tau == 0.0) return 1.0;
  return std::pow(L(t), tau);
}

double f_tau(double t, double tau) {
  const double e = log_f_tau(t, tau);
  if (e > kMaxExponent) return std::numeric_limits<double>::infinity();
  return std::exp(e);
}

LogTower LogTower::of(double x) {
  require_nonneg(x, "LogTower::of");
  return from_log(x == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(x));
}

LogTower LogTower::from_log(double log_x) {
  LogTower t;
  t.log_x = log_x;
  t.log_lx = log_x > 1.0 ? std::log(log_x) : 0.0;
  return t;
}

LogTower LogTower::from_loglog(double w) {
  if (!(w >= 0.0) || std::isnan(w)) {
    throw std::domain_error("LogTower::from_loglog: w must be >= 0");
  }
  LogTower t;
  t.log_lx = w;
  t.log_x = w < 709.0 ? std::exp(w) : std::numeric_limits<double>::infinity();
  if (t.log_x < 1.0) t.log_x = 1.0;
  return t;
}

LogTower LogTower::affine(double a, double b) const {
  if (std::isfinite(log_x)) {
    const double y = a * log_x + b;
    if (std::isfinite(y)) return from_log(y);
  }
  if (log_x == -std::numeric_limits<double>::infinity()) return *this;
  // ln(a e^w + b) = w + ln a + log1p(b / (a e^w)) with e^w beyond range
  const double scale = std::exp(-log_lx);
  LogTower t;
  t.log_lx = log_lx + std::log(a) + std::log1p(b * scale / a);
  t.log_x = t.log_lx < 709.0 ? std::exp(t.log_lx) : std::numeric_limits<double>::infinity();
  return t;
}

}  // namespace lil

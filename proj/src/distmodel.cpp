#include "lil/distmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lil/quadrature.hpp"

namespace lil {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_t(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::domain_error("argument must be finite and >= 0");
}

// ln(exp(b) + a) for a of either sign, assuming the sum is positive.
double log_plus_const(double b, double a) {
  if (a == 0.0) return b;
  if (a > 0.0) return quad::log_add(b, std::log(a));
  return b + std::log1p(a * std::exp(-b));
}

// ln erfc(z) for z >= 0 without underflow.
double log_erfc(double z) {
  if (z < 25.0) return std::log(std::erfc(z));
  const double z2 = z * z;
  return -z2 - std::log(z * std::sqrt(M_PI)) + std::log1p(-0.5 / z2 + 0.75 / (z2 * z2));
}

// E X^2 I{|X| <= t} / sigma^2 for a standard normal at s = t / sigma.
double gaussian_h(double s) {
  if (s < 1.0) {
    // 2 phi(0) * sum (-1)^k s^(2k+3) / (2^k k! (2k+3))
    double term = s * s * s;
    double sum = 0.0;
    for (int k = 0; k < 40; ++k) {
      const double add = term / (2.0 * k + 3.0);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
      term *= -s * s / (2.0 * (k + 1));
    }
    return 2.0 * sum / std::sqrt(2.0 * M_PI);
  }
  const double phi = std::exp(-0.5 * s * s) / std::sqrt(2.0 * M_PI);
  return std::erf(s / M_SQRT2) - 2.0 * s * phi;
}

// Moments beyond the start of an exact power tail c s^-beta, s >= T0.
struct PowerMoments {
  PowerTail pt;
  double h0;  // H(T0)

  double log_H(const LogTower& t) const {
    const double b = pt.beta;
    const double c = std::exp(pt.log_c);
    const double log_t0 = pt.log_threshold;
    if (b == 2.0) {
      // H0 + 2c (ln t - ln T0)
      const double shift = h0 / (2.0 * c) - log_t0;
      if (t.log_x < 1e8) return std::log(2.0 * c) + std::log(t.log_x + shift);
      return std::log(2.0 * c) + t.log_lx + std::log1p(shift * std::exp(-t.log_lx));
    }
    // H0 + k (e^(eps l) - 1) / eps with k = c b T0^eps, l = ln(t / T0)
    const double eps = 2.0 - b;
    const double log_k = pt.log_c + std::log(b) + eps * log_t0;
    const double l = t.log_x - log_t0;
    if (std::abs(eps) * l < 50.0) return std::log(h0 + std::exp(log_k) * std::expm1(eps * l) / eps);
    const double lb = log_k - std::log(std::abs(eps)) + eps * l;
    if (eps > 0.0) return log_plus_const(lb, h0 - std::exp(log_k) / eps);
    const double log_a = std::log(h0 + std::exp(log_k) / -eps);
    return log_a + std::log1p(-std::exp(lb - log_a));
  }

  double log_tM(const LogTower& t) const {
    const double b = pt.beta;
    if (b <= 1.0) throw InfiniteMeanError("E|X| is infinite (tail exponent <= 1)");
    const double base = pt.log_c + std::log(b / (b - 1.0));
    return b == 2.0 ? base : base + (2.0 - b) * t.log_x;
  }
};

}  // namespace

// ---------------------------------------------------------------- TailTable

TailTable::TailTable(std::vector<double> t, std::vector<double> p) : t_(std::move(t)), p_(std::move(p)) {
  if (t_.size() != p_.size()) throw std::invalid_argument("tail table: column lengths differ");
  if (t_.empty()) throw std::invalid_argument("tail table: no points");
  for (std::size_t i = 0; i < t_.size(); ++i) {
    if (!(t_[i] > 0.0) || !std::isfinite(t_[i]))
      throw std::invalid_argument("tail table: t must be finite and > 0");
    if (!(p_[i] >= 0.0) || p_[i] > 1.0) throw std::invalid_argument("tail table: P must lie in [0, 1]");
    if (i > 0 && !(t_[i] > t_[i - 1])) throw std::invalid_argument("tail table: t must be strictly increasing");
    if (i > 0 && !(p_[i] < p_[i - 1])) throw std::invalid_argument("tail table: P must be strictly decreasing");
  }
  if (p_.back() > 0.0) {
    if (t_.size() < 2) throw std::invalid_argument("tail table: a positive tail needs two points to extrapolate");
    const std::size_t n = t_.size();
    beta_ = -std::log(p_[n - 1] / p_[n - 2]) / std::log(t_[n - 1] / t_[n - 2]);
    if (std::abs(beta_ - std::round(beta_)) < 1e-9) beta_ = std::round(beta_);
  }
}

TailTable TailTable::parse(std::istream& in, const std::string& source) {
  std::vector<double> t, p;
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
      auto end = line.find_last_not_of(" \t\r");
      if (line.substr(first, end - first + 1) != "# lil-tail-table v1")
        fail("expected header '# lil-tail-table v1'");
      header = true;
      continue;
    }
    if (line[first] == '#') continue;
    std::istringstream fields(line);
    double a = 0.0, b = 0.0;
    std::string extra;
    if (!(fields >> a >> b)) fail("expected two numeric columns");
    if (fields >> extra) fail("unexpected third column");
    if (!t.empty() && !(a > t.back())) fail("t must be strictly increasing");
    if (!p.empty() && !(b < p.back())) fail("tail probability must be strictly decreasing");
    if (!(a > 0.0) || !(b >= 0.0) || b > 1.0) fail("need t > 0 and 0 <= P <= 1");
    t.push_back(a);
    p.push_back(b);
  }
  if (!header) {
    lineno = std::max(lineno, 1);
    fail("missing header '# lil-tail-table v1'");
  }
  try {
    return TailTable(std::move(t), std::move(p));
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  throw InputFormatError(source);  // unreachable
}

TailTable TailTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputFormatError(path.string() + ":0: cannot open file");
  return parse(in, path.string());
}

TailValue TailTable::eval(double t) const {
  require_t(t);
  if (t < t_.front()) return {p_.front(), false};
  const std::size_t n = t_.size();
  if (t >= t_.back()) {
    if (p_.back() == 0.0) return {0.0, false};
    return {p_.back() * std::pow(t / t_.back(), -beta_), t > t_.back()};
  }
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
  if (i + 1 >= n) return {p_.back(), false};
  if (p_[i + 1] == 0.0) return {p_[i] * (t_[i + 1] - t) / (t_[i + 1] - t_[i]), false};
  const double w = std::log(t / t_[i]) / std::log(t_[i + 1] / t_[i]);
  return {p_[i] * std::pow(p_[i + 1] / p_[i], w), false};
}

double TailTable::quantile(double u) const {
  if (!(u > 0.0) || u > 1.0) throw std::domain_error("quantile level must lie in (0, 1]");
  if (u >= p_.front()) return 0.0;
  if (u < p_.back()) return t_.back() * std::pow(u / p_.back(), -1.0 / beta_);
  // first i with p_[i] <= u
  std::size_t i = 1;
  while (p_[i] > u) ++i;
  if (p_[i] == 0.0) return t_[i] - u / p_[i - 1] * (t_[i] - t_[i - 1]);
  const double w = std::log(u / p_[i - 1]) / std::log(p_[i] / p_[i - 1]);
  return t_[i - 1] * std::pow(t_[i] / t_[i - 1], w);
}

std::optional<PowerTail> TailTable::power_tail() const {
  if (p_.back() == 0.0) return std::nullopt;
  return PowerTail{std::log(p_.back()) + beta_ * std::log(t_.back()), beta_, std::log(t_.back())};
}

// -------------------------------------------------------- DistributionSpec

DistributionSpec DistributionSpec::rademacher() { return {DistKind::rademacher, 1.0, 1.0}; }

DistributionSpec DistributionSpec::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian: sigma must be > 0");
  return {DistKind::gaussian, sigma, 0.0};
}

DistributionSpec DistributionSpec::sym_pareto(double beta, double xmin) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("sym-pareto: beta must be > 0");
  if (!(xmin > 0.0) || !std::isfinite(xmin)) throw std::invalid_argument("sym-pareto: xmin must be > 0");
  return {DistKind::sym_pareto, beta, xmin};
}

DistributionSpec DistributionSpec::feller_pruitt() { return sym_pareto(2.0, 1.0); }

DistributionSpec DistributionSpec::tail_table(TailTable table) {
  DistributionSpec d(DistKind::tail_table, table.tail_exponent(), table.t().front());
  d.table_ = std::move(table);
  return d;
}

const TailTable& DistributionSpec::table() const {
  if (!table_) throw std::logic_error("distribution has no tail table");
  return *table_;
}

std::string DistributionSpec::name() const {
  std::ostringstream os;
  switch (kind_) {
    case DistKind::rademacher: return "rademacher";
    case DistKind::gaussian: os << "gaussian(sigma=" << a_ << ")"; break;
    case DistKind::sym_pareto:
      if (a_ == 2.0 && b_ == 1.0) return "feller-pruitt";
      os << "sym-pareto(beta=" << a_ << ", xmin=" << b_ << ")";
      break;
    case DistKind::tail_table: os << "tail-table(" << table_->t().size() << " points)"; break;
  }
  return os.str();
}

TailValue DistributionSpec::tail_eval(double t) const {
  require_t(t);
  switch (kind_) {
    case DistKind::rademacher: return {t < 1.0 ? 1.0 : 0.0, false};
    case DistKind::gaussian: return {std::erfc(t / (a_ * M_SQRT2)), false};
    case DistKind::sym_pareto: return {t < b_ ? 1.0 : std::pow(b_ / t, a_), false};
    case DistKind::tail_table: return table_->eval(t);
  }
  return {};
}

double DistributionSpec::log_tail(double log_s) const {
  switch (kind_) {
    case DistKind::rademacher: return log_s < 0.0 ? 0.0 : -kInf;
    case DistKind::gaussian: {
      if (log_s > 700.0) return -kInf;
      return log_erfc(std::exp(log_s) / (a_ * M_SQRT2));
    }
    case DistKind::sym_pareto: {
      const double lx = std::log(b_);
      return log_s < lx ? 0.0 : a_ * (lx - log_s);
    }
    case DistKind::tail_table: {
      const auto pt = table_->power_tail();
      if (pt && log_s >= pt->log_threshold) return pt->log_c - pt->beta * log_s;
      if (log_s > 700.0) return -kInf;
      const double p = table_->eval(std::exp(log_s)).p;
      return p > 0.0 ? std::log(p) : -kInf;
    }
  }
  return -kInf;
}

std::optional<PowerTail> DistributionSpec::power_tail() const {
  if (kind_ == DistKind::sym_pareto) return PowerTail{a_ * std::log(b_), a_, std::log(b_)};
  if (kind_ == DistKind::tail_table) return table_->power_tail();
  return std::nullopt;
}

bool DistributionSpec::finite_mean() const {
  if (kind_ == DistKind::sym_pareto) return a_ > 1.0;
  if (kind_ == DistKind::tail_table) {
    const auto pt = table_->power_tail();
    return !pt || pt->beta > 1.0;
  }
  return true;
}

bool DistributionSpec::nondegenerate() const {
  return kind_ != DistKind::tail_table || table_->p().front() > 0.0;
}

double DistributionSpec::H(double t) const {
  require_t(t);
  switch (kind_) {
    case DistKind::rademacher: return t < 1.0 ? 0.0 : 1.0;
    case DistKind::gaussian: return a_ * a_ * gaussian_h(t / a_);
    case DistKind::sym_pareto: {
      if (t < b_) return 0.0;
      const double l = std::log(t / b_);
      if (a_ == 2.0) return 2.0 * b_ * b_ * l;
      return a_ * b_ * b_ * std::expm1((2.0 - a_) * l) / (2.0 - a_);
    }
    case DistKind::tail_table: {
      const auto pt = table_->power_tail();
      const double last = table_->t().back();
      if (t <= last) return H_quadrature(t);
      if (!pt) return H_quadrature(last);
      return std::exp(PowerMoments{*pt, H_quadrature(last)}.log_H(LogTower::of(t)));
    }
  }
  return 0.0;
}

double DistributionSpec::M(double t) const {
  require_t(t);
  if (!finite_mean()) throw InfiniteMeanError("E|X| is infinite for " + name());
  switch (kind_) {
    case DistKind::rademacher: return t < 1.0 ? 1.0 : 0.0;
    case DistKind::gaussian: {
      const double s = t / a_;
      return a_ * std::sqrt(2.0 / M_PI) * std::exp(-0.5 * s * s);
    }
    case DistKind::sym_pareto:
      if (t < b_) return a_ * b_ / (a_ - 1.0);
      return a_ * b_ * std::pow(b_ / t, a_ - 1.0) / (a_ - 1.0);
    case DistKind::tail_table: return M_quadrature(t);
  }
  return 0.0;
}

double DistributionSpec::D(double t) const {
  if (kind_ == DistKind::gaussian) return a_ * a_ * std::erf(t / (a_ * M_SQRT2));
  if (kind_ == DistKind::sym_pareto && t >= b_ && a_ > 1.0) {
    require_t(t);
    // one monotone expression in s = (t/b)^(2-beta), so rounding cannot reverse the order
    if (a_ == 2.0) return 2.0 * b_ * b_ * (1.0 + std::log(t / b_));
    const double s = std::pow(t / b_, 2.0 - a_);
    if (a_ > 2.0) return a_ * b_ * b_ / (a_ - 2.0) * (1.0 - s / (a_ - 1.0));
    return a_ * b_ * b_ / (2.0 - a_) * (s / (a_ - 1.0) - 1.0);
  }
  return H(t) + t * M(t);
}

std::vector<double> DistributionSpec::breakpoints(double upto) const {
  std::vector<double> out;
  double anchor = 1.0;
  switch (kind_) {
    case DistKind::rademacher: anchor = 1.0; break;
    case DistKind::gaussian: anchor = a_; break;
    case DistKind::sym_pareto: anchor = b_; break;
    case DistKind::tail_table:
      anchor = table_->t().front();
      for (double x : table_->t())
        if (x < upto) out.push_back(x);
      break;
  }
  for (double x = anchor / 64.0; x < upto; x *= 4.0) out.push_back(x);
  if (kind_ != DistKind::gaussian && anchor < upto) out.push_back(anchor);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double DistributionSpec::H_quadrature(double t, double rel_tol) const {
  require_t(t);
  if (t == 0.0) return 0.0;
  const double tt = tail(t);
  std::vector<double> br{0.0};
  for (double x : breakpoints(t)) br.push_back(x);
  br.push_back(t);
  auto f = [&](double s) { return 2.0 * s * (tail(s) - tt); };
  return quad::integrate_pieces(f, br, rel_tol);
}

double DistributionSpec::M_quadrature(double t, double rel_tol) const {
  require_t(t);
  if (!finite_mean()) throw InfiniteMeanError("E|X| is infinite for " + name());
  double upper = t;
  double remainder = 0.0;
  const auto pt = power_tail();
  switch (kind_) {
    case DistKind::rademacher: upper = std::max(t, 1.0); break;
    case DistKind::gaussian: upper = t + 40.0 * a_; break;
    case DistKind::sym_pareto:
    case DistKind::tail_table:
      upper = std::max(t, std::exp(pt ? pt->log_threshold : std::log(table_->t().back())));
      if (kind_ == DistKind::sym_pareto) upper = std::max(t, b_) * 1e4;
      if (pt) {
        remainder = std::exp(pt->log_c + (1.0 - pt->beta) * std::log(upper)) / (pt->beta - 1.0);
      }
      break;
  }
  std::vector<double> br{t};
  for (double x : breakpoints(upper))
    if (x > t) br.push_back(x);
  for (double x = std::max(t, 1e-300) * 4.0; x < upper; x *= 4.0) br.push_back(x);
  br.push_back(upper);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  double body = 0.0;
  if (br.size() >= 2) body = quad::integrate_pieces([&](double s) { return tail(s); }, br, rel_tol);
  return t * tail(t) + body + remainder;
}

double DistributionSpec::log_H(const LogTower& t) const {
  if (t.log_x < 700.0) {
    const double h = H(std::exp(t.log_x));
    return h > 0.0 ? std::log(h) : -kInf;
  }
  switch (kind_) {
    case DistKind::rademacher: return 0.0;
    case DistKind::gaussian: return 2.0 * std::log(a_);
    case DistKind::sym_pareto: return PowerMoments{*power_tail(), 0.0}.log_H(t);
    case DistKind::tail_table: {
      const double last = table_->t().back();
      const auto pt = table_->power_tail();
      const double h0 = H_quadrature(last);
      if (!pt) return h0 > 0.0 ? std::log(h0) : -kInf;
      return PowerMoments{*pt, h0}.log_H(t);
    }
  }
  return -kInf;
}

double DistributionSpec::log_D(const LogTower& t) const {
  if (t.log_x < 700.0) {
    const double d = D(std::exp(t.log_x));
    return d > 0.0 ? std::log(d) : -kInf;
  }
  if (!finite_mean()) throw InfiniteMeanError("E|X| is infinite for " + name());
  switch (kind_) {
    case DistKind::rademacher: return 0.0;
    case DistKind::gaussian: return 2.0 * std::log(a_);
    case DistKind::sym_pareto: {
      const PowerMoments pm{*power_tail(), 0.0};
      return quad::log_add(pm.log_H(t), pm.log_tM(t));
    }
    case DistKind::tail_table: {
      const auto pt = table_->power_tail();
      if (!pt) return log_H(t);
      const PowerMoments pm{*pt, H_quadrature(table_->t().back())};
      return quad::log_add(pm.log_H(t), pm.log_tM(t));
    }
  }
  return -kInf;
}

MomentValue DistributionSpec::second_moment() const {
  switch (kind_) {
    case DistKind::rademacher: return {1.0, false};
    case DistKind::gaussian: return {a_ * a_, false};
    case DistKind::sym_pareto:
      if (a_ <= 2.0) return {0.0, true};
      return {a_ * b_ * b_ / (a_ - 2.0), false};
    case DistKind::tail_table: {
      const double last = table_->t().back();
      const double h0 = H_quadrature(last);
      const auto pt = table_->power_tail();
      if (!pt) return {h0, false};
      if (pt->beta <= 2.0) return {0.0, true};
      const double c = std::exp(pt->log_c);
      return {h0 + c * pt->beta * std::pow(last, 2.0 - pt->beta) / (pt->beta - 2.0), false};
    }
  }
  return {};
}

double DistributionSpec::mean_abs() const { return M(0.0); }

double DistributionSpec::draw(RandomStream& rng) const {
  switch (kind_) {
    case DistKind::rademacher: return (rng.next_u64() & 1U) ? 1.0 : -1.0;
    case DistKind::gaussian: return a_ * rng.next_normal();
    case DistKind::sym_pareto:
    case DistKind::tail_table: {
      const std::uint64_t v = rng.next_u64();
      const double u = static_cast<double>((v >> 11) + 1) * 0x1.0p-53;
      const double mag = kind_ == DistKind::sym_pareto ? b_ * std::pow(u, -1.0 / a_) : table_->quantile(u);
      return (v & 1U) ? mag : -mag;
    }
  }
  return 0.0;
}

void DistributionSpec::sample(RandomStream& rng, std::span<double> out) const {
  for (double& x : out) x = draw(rng);
}

std::vector<double> DistributionSpec::sample(RandomStream& rng, std::size_t count) const {
  std::vector<double> out(count);
  sample(rng, std::span<double>(out));
  return out;
}

// ------------------------------------------------------------- MomentCache

MomentCache::MomentCache(const DistributionSpec& dist, double t_lo, double t_hi, double ratio)
    : ratio_(ratio) {
  if (!(t_lo > 0.0) || !(t_hi >= t_lo) || !(ratio > 1.0))
    throw std::invalid_argument("moment cache: need 0 < t_lo <= t_hi and ratio > 1");
  for (double t = t_lo; t <= t_hi * (1.0 + 1e-12); t *= ratio) {
    grid_.push_back(t);
    h_.push_back(dist.H(t));
    m_.push_back(dist.M(t));
  }
}

}  // namespace lil

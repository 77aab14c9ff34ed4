#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <boost/version.hpp>

#include "CLI11.hpp"
#include "lil/alpha0.hpp"
#include "lil/conditions.hpp"
#include "lil/distmodel.hpp"
#include "lil/format.hpp"
#include "lil/klass.hpp"
#include "lil/logscale.hpp"
#include "lil/mcsim.hpp"
#include "lil/normalizer.hpp"

namespace lil::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

int line_at(const std::string& text, std::size_t pos) {
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + std::min(pos, text.size()), '\n'));
}

std::vector<std::string> split_pointer(const std::string& p) {
  std::vector<std::string> out;
  std::size_t i = 1;
  while (i <= p.size() && !p.empty()) {
    const auto j = p.find('/', i);
    out.push_back(p.substr(i, j == std::string::npos ? std::string::npos : j - i));
    if (j == std::string::npos) break;
    i = j + 1;
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------------ Config

Config Config::parse(const std::string& text, const std::string& source, fs::path base_dir) {
  Config c;
  c.text_ = text;
  c.source_ = source;
  c.base_ = std::move(base_dir);
  try {
    c.j_ = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string why = e.what();
    if (const auto k = why.find("syntax error"); k != std::string::npos) why = why.substr(k);
    throw ConfigError(source + ":" + std::to_string(line_at(text, e.byte == 0 ? 0 : e.byte - 1)) + ": " + why);
  }
  if (!c.j_.is_object()) throw ConfigError(source + ":1: config must be a JSON object");
  if (c.j_.contains("manifest") && c.j_.contains("config")) {
    c.manifest_verb_ = c.j_.value("verb", "");
    c.j_ = c.j_["config"];
    if (!c.j_.is_object()) throw ConfigError(source + ":1: manifest config must be an object");
  }
  return c;
}

Config Config::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ":0: cannot open config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string(), path.parent_path());
}

void Config::set(const std::string& pointer, nlohmann::json v, const std::string& origin) {
  try {
    j_[json::json_pointer(pointer)] = std::move(v);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": cannot set " + pointer + " (" + e.what() + ")");
  }
  overrides_.emplace_back(pointer, origin);
}

void Config::override_with(const std::string& flag, const std::string& value) {
  std::string key = flag;
  if (key.rfind("--", 0) == 0) key = key.substr(2);
  if (key.empty()) throw ConfigError("override: empty key");
  std::string pointer = "/";
  for (char ch : key) pointer += ch == '.' ? '/' : ch;
  nlohmann::json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;
  }
  set(pointer, std::move(v), "--" + key);
}

bool Config::has(const std::string& pointer) const { return j_.contains(json::json_pointer(pointer)); }

const json& Config::at(const std::string& pointer) const {
  if (!has(pointer)) fail(pointer, "missing required key " + pointer);
  return j_.at(json::json_pointer(pointer));
}

double Config::number(const std::string& pointer) const {
  const auto& v = at(pointer);
  if (!v.is_number()) fail(pointer, pointer + " must be a number");
  return v.get<double>();
}

double Config::number(const std::string& pointer, double fallback) const {
  return has(pointer) ? number(pointer) : fallback;
}

std::string Config::string(const std::string& pointer) const {
  const auto& v = at(pointer);
  if (!v.is_string()) fail(pointer, pointer + " must be a string");
  return v.get<std::string>();
}

std::string Config::string(const std::string& pointer, const std::string& fallback) const {
  return has(pointer) ? string(pointer) : fallback;
}

fs::path Config::path(const std::string& pointer) const {
  fs::path p = string(pointer);
  for (auto it = overrides_.rbegin(); it != overrides_.rend(); ++it)
    if (pointer.rfind(it->first, 0) == 0) return p;
  return p.is_relative() && !base_.empty() ? base_ / p : p;
}

std::string Config::where(const std::string& pointer) const {
  for (auto it = overrides_.rbegin(); it != overrides_.rend(); ++it)
    if (pointer.rfind(it->first, 0) == 0 || it->first.rfind(pointer, 0) == 0) return it->second;
  std::size_t pos = 0;
  int line = 1;
  for (const auto& tok : split_pointer(pointer)) {
    const auto k = text_.find("\"" + tok + "\"", pos);
    if (k == std::string::npos) break;
    pos = k;
    line = line_at(text_, k);
  }
  return source_ + ":" + std::to_string(line);
}

void Config::fail(const std::string& pointer, const std::string& why) const {
  throw ConfigError(where(pointer) + ": " + why);
}

// --------------------------------------------------------------- builders

namespace {

DistributionSpec make_dist(const Config& c) {
  if (!c.has("/distribution")) c.fail("/distribution", "missing distribution block");
  const std::string kind = c.string("/distribution/kind");
  try {
    if (kind == "rademacher") return DistributionSpec::rademacher();
    if (kind == "gaussian") return DistributionSpec::gaussian(c.number("/distribution/sigma", 1.0));
    if (kind == "feller-pruitt") return DistributionSpec::feller_pruitt();
    if (kind == "sym-pareto")
      return DistributionSpec::sym_pareto(c.number("/distribution/beta"), c.number("/distribution/xmin", 1.0));
    if (kind == "tail-table") return DistributionSpec::tail_table(TailTable::load(c.path("/distribution/table")));
  } catch (const InputFormatError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    c.fail("/distribution", e.what());
  }
  c.fail("/distribution/kind", "unknown distribution kind '" + kind + "'");
}

SlowFunction make_slow(const Config& c, const std::string& block) {
  const std::string fam = c.string(block + "/family");
  const std::string param = block + "/param";
  try {
    if (fam == "loglog-power") return SlowFunction::loglog_power(c.number(param));
    if (fam == "log-power") return SlowFunction::log_power(c.number(param));
    if (fam == "stretched") return SlowFunction::stretched(c.number(param));
    if (fam == "phi2") return SlowFunction::phi2();
    if (fam == "constant") return SlowFunction::constant(c.number(param));
    if (fam == "table") return SlowFunction::load_table(c.path(block + "/table"));
  } catch (const InputFormatError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    c.fail(param, e.what());
  } catch (const std::domain_error& e) {
    c.fail(param, e.what());
  }
  c.fail(block + "/family", "unknown slow-function family '" + fam + "'");
}

std::optional<CorollaryFamily> corollary_family(const std::string& fam) {
  if (fam == "loglog-power") return CorollaryFamily::loglog_power;
  if (fam == "log-power") return CorollaryFamily::log_power;
  if (fam == "stretched") return CorollaryFamily::stretched;
  return std::nullopt;
}

void require_normalizer(const Config& c) {
  if (!c.has("/normalizer")) c.fail("/normalizer", "missing normalizer block");
  c.string("/normalizer/family");
}

bool wants_gamma(const Config& c) { return c.string("/normalizer/family") == "gamma"; }

/// The psi normalizer of the config; constructs from phi when asked.
Normalizer make_normalizer(const Config& c, const DistributionSpec& dist) {
  require_normalizer(c);
  const std::string fam = c.string("/normalizer/family");
  if (fam == "gamma") c.fail("/normalizer/family", "gamma is a sequence, not a Psi normalizer, for this verb");
  if (fam == "construct-from-phi") {
    if (!c.has("/normalizer/phi")) c.fail("/normalizer", "construct-from-phi needs a phi block");
    return construct_psi_from_phi(dist, make_slow(c, "/normalizer/phi")).normalizer;
  }
  return Normalizer(make_slow(c, "/normalizer"));
}

double scale_of(const Config& c) {
  const double s = c.number("/normalizer/scale", 1.0);
  if (!(s > 0.0) || !std::isfinite(s)) c.fail("/normalizer/scale", "scale must be > 0");
  return s;
}

// ------------------------------------------------------------- reporting

json verdict_json(const series::Classification& cl) {
  return {{"verdict", series::to_string(cl.verdict)},
          {"depth", cl.depth},
          {"ratio", jnum(cl.fit.ratio)},
          {"decay", jnum(cl.fit.decay)},
          {"window", cl.fit.window}};
}

json moment_json(const MomentVerdict& m) {
  json j = verdict_json(m.evidence);
  j["verdict"] = series::to_string(m.verdict);
  j["basis"] = m.basis;
  return j;
}

json limsup_json(const LimsupEstimate& l) {
  return {{"window_sup", jnum(l.window_sup)}, {"trend", to_string(l.trend)},     {"value", jnum(l.value)},
          {"divergent", l.divergent},          {"slope_log", jnum(l.slope_log)}, {"slope_loglog", jnum(l.slope_loglog)},
          {"skipped", l.skipped},              {"window_start", jnum(l.window_start)}, {"tower", l.tower}};
}

void write_blocks_csv(const series::Classification& cl, std::ostream& out) {
  out << "depth,j,lo,hi,log_B\n";
  for (const auto& b : cl.blocks)
    out << b.depth << ',' << b.j << ',' << num(b.lo) << ',' << num(b.hi) << ',' << num(b.log_B) << '\n';
}

void write_limsup_csv(const LimsupEstimate& l, std::ostream& out) {
  out << "coord,log_F,F\n";
  for (const auto& p : l.table) out << num(p.coord) << ',' << num(p.log_value) << ',' << num(std::exp(p.log_value)) << '\n';
}

struct Outputs {
  fs::path dir;
  bool want_csv = true;
  bool want_json = true;
  std::vector<std::string> files;

  std::ofstream open(const std::string& name) {
    fs::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    f.precision(17);
    files.push_back(name);
    return f;
  }
  void write_json(const std::string& name, const json& j) {
    if (!want_json) return;
    open(name) << j.dump(2) << '\n';
  }
};

Outputs make_outputs(const Config& c) {
  Outputs o;
  o.dir = c.has("/output/dir") ? fs::path(c.string("/output/dir")) : fs::path("lil-out");
  if (c.has("/output/formats")) {
    const auto& f = c.at("/output/formats");
    std::vector<std::string> names;
    if (f.is_string()) {
      std::stringstream ss(f.get<std::string>());
      for (std::string t; std::getline(ss, t, ',');) names.push_back(t);
    } else if (f.is_array()) {
      for (const auto& e : f) {
        if (!e.is_string()) c.fail("/output/formats", "formats must be strings");
        names.push_back(e.get<std::string>());
      }
    } else {
      c.fail("/output/formats", "formats must be a list or a comma-separated string");
    }
    o.want_csv = o.want_json = false;
    for (const auto& n : names) {
      if (n == "csv")
        o.want_csv = true;
      else if (n == "json")
        o.want_json = true;
      else
        c.fail("/output/formats", "unknown format '" + n + "' (expected csv, json)");
    }
  }
  return o;
}

int decades_of(const Config& c) {
  const double d = c.number("/grid_decades", 300.0);
  if (!(d >= 20.0) || d > 300.0 || d != std::floor(d)) c.fail("/grid_decades", "grid_decades must be an integer in [20, 300]");
  return static_cast<int>(d);
}

double tol_of(const Config& c) {
  const double t = c.number("/tol", 1e-10);
  if (!(t > 0.0) || !(t < 1.0)) c.fail("/tol", "tol must lie in (0, 1)");
  return t;
}

std::uint64_t seed_of(const Config& c) {
  if (!c.has("/seed")) return 42;
  const auto& v = c.at("/seed");
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    c.fail("/seed", "seed must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::uint64_t count_of(const Config& c, const std::string& p, std::uint64_t fallback, std::uint64_t min) {
  if (!c.has(p)) return fallback;
  const double v = c.number(p);
  if (!(v >= static_cast<double>(min)) || v != std::floor(v) || v > 1e18)
    c.fail(p, p + " must be an integer >= " + std::to_string(min));
  return static_cast<std::uint64_t>(v);
}

// ----------------------------------------------------------------- verbs

int verb_analyze(const Config& c, Outputs& out) {
  const auto dist = make_dist(c);
  require_normalizer(c);
  const int decades = decades_of(c);
  std::optional<double> q;
  if (c.has("/analysis/q")) q = c.number("/analysis/q");
  const auto nm = make_normalizer(c, dist);
  const auto rep = analyze(dist, nm, q, decades);
  json j = {{"distribution", dist.name()},
            {"normalizer", nm.h().name()},
            {"mean_zero", rep.mean_zero},
            {"moment", moment_json(rep.moment)},
            {"limsup", limsup_json(rep.limsup)},
            {"lambda_hat", jnum(rep.lambda_hat)},
            {"lambda_hat_divergent", !std::isfinite(rep.lambda_hat)},
            {"q", rep.q},
            {"bound_lo", jnum(rep.bound_lo)},
            {"bound_hi", jnum(rep.bound_hi)},
            {"outcome", to_string(rep.outcome)},
            {"notes", rep.notes}};
  out.write_json("report.json", j);
  if (out.want_csv) {
    auto f = out.open("limsup.csv");
    write_limsup_csv(rep.limsup, f);
    auto g = out.open("blocks.csv");
    write_blocks_csv(rep.moment.evidence, g);
  }
  const bool inc = rep.outcome == Outcome::inconclusive || rep.moment.verdict == series::Verdict::inconclusive;
  return inc ? Exit::inconclusive : Exit::ok;
}

int verb_check_conditions(const Config& c, Outputs& out) {
  const auto dist = make_dist(c);
  require_normalizer(c);
  const std::string fam = c.string("/normalizer/family");
  const auto cf = corollary_family(fam);
  if (!cf) c.fail("/normalizer/family", "check-conditions needs loglog-power, log-power or stretched");
  const double param = c.number("/normalizer/param");
  CorollaryReport rep;
  try {
    rep = corollary_check(dist, *cf, param, decades_of(c));
  } catch (const std::invalid_argument& e) {
    c.fail("/normalizer/param", e.what());
  } catch (const std::domain_error& e) {
    c.fail("/normalizer/param", e.what());
  }
  json j = {{"distribution", dist.name()},
            {"family", to_string(rep.family)},
            {"param", rep.param},
            {"mean_zero", rep.mean_zero},
            {"moment", moment_json(rep.moment)},
            {"limsup", limsup_json(rep.limsup)},
            {"lambda_hat", jnum(rep.lambda_hat)},
            {"lambda_hat_divergent", !std::isfinite(rep.lambda_hat)},
            {"bound_lo", jnum(rep.bound_lo)},
            {"bound_hi", jnum(rep.bound_hi)},
            {"outcome", to_string(rep.outcome)}};
  out.write_json("report.json", j);
  if (out.want_csv) {
    auto f = out.open("limsup.csv");
    write_limsup_csv(rep.limsup, f);
    auto g = out.open("blocks.csv");
    write_blocks_csv(rep.moment.evidence, g);
  }
  const bool inc = rep.outcome == Outcome::inconclusive || rep.moment.verdict == series::Verdict::inconclusive;
  return inc ? Exit::inconclusive : Exit::ok;
}

std::vector<double> n_list(const Config& c) {
  std::vector<double> ns;
  if (c.has("/analysis/n")) {
    const auto& v = c.at("/analysis/n");
    if (!v.is_array() || v.empty()) c.fail("/analysis/n", "n must be a nonempty list");
    for (const auto& e : v) {
      if (!e.is_number()) c.fail("/analysis/n", "n entries must be numbers");
      ns.push_back(e.get<double>());
    }
  } else {
    const double from = c.number("/analysis/n_from", 1.0), to = c.number("/analysis/n_to", 1e12);
    const double per = c.number("/analysis/per_decade", 4.0);
    if (!(per >= 1.0) || per != std::floor(per)) c.fail("/analysis/per_decade", "per_decade must be an integer >= 1");
    if (!(from >= 1.0) || !(to >= from) || !std::isfinite(to)) c.fail("/analysis/n_from", "need 1 <= n_from <= n_to");
    const int k0 = static_cast<int>(std::floor(per * std::log10(from) + 1e-9));
    for (int k = k0;; ++k) {
      const double n = std::pow(10.0, k / per);
      if (n > to * (1 + 1e-12)) break;
      if (n >= from * (1 - 1e-12)) ns.push_back(std::max(n, 1.0));
    }
  }
  for (double n : ns)
    if (!(n >= 1.0) || !std::isfinite(n)) c.fail("/analysis/n", "invalid n " + num(n) + " (need finite n >= 1)");
  return ns;
}

int verb_klass_seq(const Config& c, Outputs& out) {
  const auto dist = make_dist(c);
  const auto ns = n_list(c);
  const KlassEval k(dist, tol_of(c));
  std::optional<Normalizer> nm;
  if (c.has("/normalizer")) nm = make_normalizer(c, dist);
  if (out.want_csv) {
    auto f = out.open("klass_seq.csv");
    f << "n,gamma_n,K_n_over_LLn" << (nm ? ",a_n,a_over_gamma" : "") << '\n';
    for (double n : ns) {
      const double g = k.gamma_n(n), kk = k.K(n / LL(n));
      f << num(n) << ',' << num(g) << ',' << num(kk);
      if (nm) {
        const double a = nm->psi(n);
        f << ',' << num(a) << ',' << num(a / g);
      }
      f << '\n';
    }
  }
  return Exit::ok;
}

SigmaPolicy make_policy(const Config& c, const DistributionSpec& dist) {
  if (c.has("/analysis/sigma2")) {
    const double s2 = c.number("/analysis/sigma2");
    if (!(s2 > 0.0)) c.fail("/analysis/sigma2", "sigma2 must be > 0");
    return SigmaPolicy::constant_sigma2(s2);
  }
  if (c.has("/analysis/dseq")) {
    if (!c.has("/analysis/dseq/family")) c.fail("/analysis/dseq", "dseq needs a family");
    const auto d = make_slow(c, "/analysis/dseq");
    (void)dist;
    return SigmaPolicy::with_dseq(NormSeqSpec::psi(Normalizer(d)));
  }
  const double delta = c.number("/analysis/delta", 1.0);
  if (!(delta > 0.0) || !std::isfinite(delta)) c.fail("/analysis/delta", "delta must be > 0");
  return SigmaPolicy::with_delta(delta);
}

int verb_alpha0(const Config& c, Outputs& out) {
  const auto dist = make_dist(c);
  require_normalizer(c);
  std::optional<NormSeqSpec> seq;
  if (wants_gamma(c))
    seq = NormSeqSpec::gamma(std::make_shared<const KlassEval>(dist, tol_of(c)));
  else
    seq = NormSeqSpec::psi(make_normalizer(c, dist));
  if (const double s = scale_of(c); s != 1.0) seq = NormSeqSpec::scaled(*seq, s);
  const auto policy = make_policy(c, dist);
  Alpha0Options opt;
  opt.nmax = c.number("/analysis/nmax", opt.nmax);
  opt.width = c.number("/analysis/width", opt.width);
  opt.alpha_cap = c.number("/analysis/alpha_cap", opt.alpha_cap);
  if (!(opt.nmax >= 1e6) || !std::isfinite(opt.nmax)) c.fail("/analysis/nmax", "nmax must be finite and >= 1e6");
  if (!(opt.width > 0.0)) c.fail("/analysis/width", "width must be > 0");
  if (!(opt.alpha_cap > 1.0)) c.fail("/analysis/alpha_cap", "alpha_cap must be > 1");
  Alpha0Report rep;
  try {
    rep = alpha0_estimate(dist, *seq, policy, opt);
  } catch (const PolicyError& e) {
    c.fail("/analysis/dseq", std::string(e.what()) + " at n = " + num(e.offending_n));
  }
  json eps = json::array();
  for (const auto& e : rep.regularity.ratio_checks)
    eps.push_back({{"eps", e.eps}, {"pass", e.pass}, {"m_eps", jnum(e.m_eps)}, {"failures", e.failures.size()}});
  json probes = json::array();
  for (const auto& p : rep.probes) {
    json pj = verdict_json(p.evidence);
    pj["alpha"] = p.alpha;
    probes.push_back(pj);
  }
  json j = {{"distribution", dist.name()},
            {"c", seq->name()},
            {"policy", rep.policy},
            {"bracket_found", rep.bracket_found},
            {"lo", jnum(rep.lo)},
            {"hi", jnum(rep.hi)},
            {"infinite", rep.infinite},
            {"tail_sum", moment_json(rep.tail_sum)},
            {"regularity",
             {{"monotone", rep.regularity.monotone},
              {"unbounded", rep.regularity.unbounded},
              {"growth_ok", rep.regularity.growth_ok},
              {"ratio_checks", eps},
              {"pass", rep.regularity.pass}}},
            {"inconclusive_probes", rep.inconclusive_probes},
            {"probes", probes},
            {"notes", rep.notes}};
  if (rep.bounds)
    j["ratio_bounds"] = {{"a", jnum(rep.bounds->a)},         {"b", jnum(rep.bounds->b)},
                         {"lower", jnum(rep.bounds->lower)}, {"upper", jnum(rep.bounds->upper)},
                         {"trend", to_string(rep.bounds->trend)}};
  out.write_json("alpha0.json", j);
  if (out.want_csv) {
    auto f = out.open("probes.csv");
    f << "alpha,verdict,depth,ratio,decay\n";
    for (const auto& p : rep.probes)
      f << num(p.alpha) << ',' << series::to_string(p.evidence.verdict) << ',' << p.evidence.depth << ','
        << num(p.evidence.fit.ratio) << ',' << num(p.evidence.fit.decay) << '\n';
    if (rep.bounds) {
      auto g = out.open("ratio_bounds.csv");
      g << "n,c_over_gamma\n";
      for (const auto& [n, r] : rep.bounds->table) g << num(n) << ',' << num(r) << '\n';
    }
  }
  return rep.bracket_found || rep.infinite ? Exit::ok : Exit::inconclusive;
}

int verb_simulate(const Config& c, Outputs& out) {
  const auto dist = make_dist(c);
  require_normalizer(c);
  sim::SimConfig cfg;
  cfg.dist = dist;
  if (wants_gamma(c))
    cfg.normalizer = sim::NormSpec::gamma(std::make_shared<const KlassEval>(dist, tol_of(c)));
  else
    cfg.normalizer = sim::NormSpec::psi(make_normalizer(c, dist));
  if (const double s = scale_of(c); s != 1.0) cfg.normalizer = sim::NormSpec::scaled(cfg.normalizer, s);
  if (c.has("/analysis/paths")) {
    const double p = c.number("/analysis/paths");
    if (!(p >= 1.0) || p != std::floor(p) || p > 1e6) c.fail("/analysis/paths", "paths must be an integer >= 1");
    cfg.paths = static_cast<int>(p);
  }
  cfg.n_max = count_of(c, "/analysis/n_max", cfg.n_max, 1);
  cfg.first = count_of(c, "/analysis/first", cfg.first, 1);
  cfg.ratio = c.number("/analysis/ratio", cfg.ratio);
  cfg.threads = static_cast<int>(count_of(c, "/analysis/threads", 0, 0));
  cfg.seed = seed_of(c);
  const std::string sum = c.string("/analysis/summation", "compensated");
  if (sum == "plain")
    cfg.summation = sim::Summation::plain;
  else if (sum != "compensated")
    c.fail("/analysis/summation", "summation must be plain or compensated");
  try {
    cfg.validate();
  } catch (const sim::SimError& e) {
    c.fail("/analysis", e.what());
  }
  const auto res = sim::run_sim(cfg);
  const auto bins = static_cast<int>(count_of(c, "/analysis/bins", 40, 1));
  const auto burn = count_of(c, "/analysis/burn_in", res.checkpoints.size() / 4, 0);
  if (burn >= res.checkpoints.size()) c.fail("/analysis/burn_in", "burn_in must be below the checkpoint count");
  const auto hist = sim::cluster_histogram(res, bins, burn);
  if (out.want_csv) {
    auto f = out.open("paths.csv");
    sim::write_paths_csv(res, f);
    auto g = out.open("histogram.csv");
    sim::write_histogram_csv(hist, res.seed, g);
  }
  json maxima = json::array();
  for (int p = 0; p < res.paths; ++p) maxima.push_back(res.final_max(p));
  out.write_json("summary.json", {{"seed", res.seed},
                                  {"distribution", res.dist},
                                  {"normalizer", res.normalizer},
                                  {"summation", sim::to_string(res.summation)},
                                  {"n_max", cfg.n_max},
                                  {"paths", res.paths},
                                  {"checkpoints", res.checkpoints.size()},
                                  {"running_max", maxima},
                                  {"pooled_max", res.pooled_max()},
                                  {"symmetry", hist.symmetry},
                                  {"occupancy", hist.occupancy},
                                  {"histogram_m", hist.m},
                                  {"burn_in", burn}});
  return Exit::ok;
}

int verb_construct(const Config& c, Outputs& out) {
  const auto dist = make_dist(c);
  require_normalizer(c);
  if (c.string("/normalizer/family") != "construct-from-phi")
    c.fail("/normalizer/family", "construct-normalizer needs family construct-from-phi");
  if (!c.has("/normalizer/phi")) c.fail("/normalizer", "construct-from-phi needs a phi block");
  const auto phi = make_slow(c, "/normalizer/phi");
  std::vector<double> grid;
  if (c.has("/analysis/x")) {
    const auto& v = c.at("/analysis/x");
    if (!v.is_array() || v.size() < 2) c.fail("/analysis/x", "x must be a list of at least two points");
    for (const auto& e : v) {
      if (!e.is_number() || !(e.get<double>() > 1.0)) c.fail("/analysis/x", "x entries must be numbers > 1");
      grid.push_back(std::log(e.get<double>()));
    }
    if (!std::is_sorted(grid.begin(), grid.end()) || std::adjacent_find(grid.begin(), grid.end()) != grid.end())
      c.fail("/analysis/x", "x must be strictly increasing");
  }
  Construction con = [&] {
    try {
      return construct_psi_from_phi(dist, phi, grid);
    } catch (const NonConvergenceError& e) {
      json j = {{"error", e.what()}, {"log_x", jnum(e.log_x)}, {"last_log_h", jnum(e.log_h)}};
      out.write_json("report.json", j);
      throw;
    }
  }();
  const auto& r = con.report;
  if (out.want_csv) {
    auto f = out.open("construction.csv");
    f << "x,psi,h,iterations\n";
    for (const auto& row : r.table)
      f << num(row.x) << ',' << num(row.psi) << ',' << num(row.h) << ',' << row.iterations << '\n';
  }
  {
    auto f = out.open("h_table.txt");
    f << "# lil-slowfn v1\n";
    f << "# constructed h, phi=" << phi.name() << ", distribution=" << dist.name() << '\n';
    for (const auto& row : r.table) f << num(row.x) << ' ' << num(row.h) << '\n';
  }
  json j = {{"distribution", dist.name()},
            {"phi", phi.name()},
            {"max_iterations", r.max_iterations},
            {"limsup_H_over_phi", jnum(r.limsup_H_over_phi)},
            {"limsup_warning", r.limsup_warning},
            {"moment", moment_json(r.moment)},
            {"moment_finite", r.moment.verdict == series::Verdict::convergent},
            {"monotone", r.monotone},
            {"warnings", r.warnings}};
  out.write_json("report.json", j);
  return r.moment.verdict == series::Verdict::inconclusive ? Exit::inconclusive : Exit::ok;
}

json versions() {
  return {{"lil", kVersion},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__}};
}

}  // namespace

// -------------------------------------------------------------------- run

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical experiments for laws of the iterated logarithm", "lil"};
  app.require_subcommand(1);
  app.allow_extras();
  std::string config_path, out_dir, formats;
  std::uint64_t seed = 0;
  int decades = 0;
  double tol = 0.0;
  app.add_option("--config", config_path, "JSON config or a manifest written by a previous run");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--format", formats, "comma-separated subset of csv,json");
  app.add_option("--grid-decades", decades, "decades of the x grid (20..300)");
  app.add_option("--tol", tol, "relative tolerance for moments and K");
  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"analyze", "two-sided LIL conditions for a distribution and normalizer"},
      {"check-conditions", "closed-form conditions for the loglog-power, log-power and stretched families"},
      {"klass-seq", "table of gamma_n and K(n/LLn)"},
      {"alpha0", "cluster-set radius alpha0 by bisection"},
      {"simulate", "Monte Carlo of S_n / a_n"},
      {"construct-normalizer", "Psi from an envelope phi by fixed point"}};
  for (const auto& [name, desc] : verbs) {
    auto* s = app.add_subcommand(name, desc);
    s->allow_extras();
    s->fallthrough();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return Exit::config_error;
  }
  const std::string verb = app.get_subcommands().front()->get_name();
  std::vector<std::string> extras = app.remaining();
  for (const auto& x : app.get_subcommands().front()->remaining()) extras.push_back(x);

  try {
    Config cfg = config_path.empty() ? Config::parse("{}", "<empty>") : Config::load(config_path);
    if (!cfg.manifest_verb().empty() && cfg.manifest_verb() != verb)
      throw ConfigError(config_path + ":1: manifest was written by '" + cfg.manifest_verb() + "', not '" + verb + "'");
    for (std::size_t i = 0; i < extras.size(); ++i) {
      const std::string& flag = extras[i];
      if (flag.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + flag + "'");
      if (const auto eq = flag.find('='); eq != std::string::npos) {
        cfg.override_with(flag.substr(0, eq), flag.substr(eq + 1));
      } else {
        if (i + 1 >= extras.size()) throw ConfigError(flag + ": missing value");
        cfg.override_with(flag, extras[++i]);
      }
    }
    if (app.count("--out")) cfg.set("/output/dir", out_dir, "--out");
    if (app.count("--seed")) cfg.set("/seed", seed, "--seed");
    if (app.count("--format")) cfg.set("/output/formats", formats, "--format");
    if (app.count("--grid-decades")) cfg.set("/grid_decades", decades, "--grid-decades");
    if (app.count("--tol")) cfg.set("/tol", tol, "--tol");

    Outputs o = make_outputs(cfg);
    int code = Exit::ok;
    if (verb == "analyze")
      code = verb_analyze(cfg, o);
    else if (verb == "check-conditions")
      code = verb_check_conditions(cfg, o);
    else if (verb == "klass-seq")
      code = verb_klass_seq(cfg, o);
    else if (verb == "alpha0")
      code = verb_alpha0(cfg, o);
    else if (verb == "simulate")
      code = verb_simulate(cfg, o);
    else
      code = verb_construct(cfg, o);

    json m = {{"manifest", 1},
              {"tool", "lil"},
              {"verb", verb},
              {"config", cfg.doc()},
              {"seed", seed_of(cfg)},
              {"versions", versions()},
              {"outputs", o.files},
              {"exit_code", code}};
    std::ofstream mf(o.dir / "manifest.json", std::ios::binary);
    mf << m.dump(2) << '\n';
    out << verb << ": wrote " << o.files.size() << " file(s) to " << o.dir.string() << " (exit " << code << ")\n";
    return code;
  } catch (const ConfigError& e) {
    err << "lil: config error: " << e.what() << '\n';
    return Exit::config_error;
  } catch (const NonConvergenceError& e) {
    err << "lil: fixed point did not converge: " << e.what() << '\n';
    return Exit::nonconvergence;
  } catch (const InputFormatError& e) {
    err << "lil: input error: " << e.what() << '\n';
    return Exit::config_error;
  } catch (const std::exception& e) {
    err << "lil: error: " << e.what() << '\n';
    return Exit::internal;
  }
}

}  // namespace lil::cli

#include "lil/mcsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "lil/format.hpp"
#include "lil/rng.hpp"

namespace lil::sim {

std::string to_string(Summation s) { return s == Summation::plain ? "plain" : "compensated"; }

NormSpec NormSpec::psi(Normalizer nm) {
  auto h = std::make_shared<Normalizer>(std::move(nm));
  return {"psi[" + h->h().name() + "]", [h](double n) { return h->psi(n); }};
}

NormSpec NormSpec::gamma(std::shared_ptr<const KlassEval> klass) {
  return {"gamma", [klass](double n) { return klass->gamma_n(n); }};
}

NormSpec NormSpec::fn(std::string name, std::function<double(double)> a) { return {std::move(name), std::move(a)}; }

NormSpec NormSpec::scaled(const NormSpec& base, double factor) {
  auto a = base.a;
  return {num(factor) + "*" + base.name, [a, factor](double n) { return factor * a(n); }};
}

void SimConfig::validate() const {
  if (!normalizer.a) throw SimError("simulate: no normalizer");
  if (paths < 1) throw SimError("simulate: paths must be >= 1");
  if (first < 1) throw SimError("simulate: first checkpoint must be >= 1");
  if (n_max < first) throw SimError("simulate: n_max must be >= the first checkpoint");
  if (n_max > 10'000'000'000ULL) throw SimError("simulate: n_max must be <= 1e10");
  if (!(ratio > 1.0) || !std::isfinite(ratio)) throw SimError("simulate: checkpoint ratio must be > 1");
  if (threads < 0) throw SimError("simulate: threads must be >= 0");
}

std::vector<std::uint64_t> checkpoint_schedule(std::uint64_t first, double ratio, std::uint64_t n_max) {
  std::vector<std::uint64_t> out;
  double next = static_cast<double>(first);
  std::uint64_t n = first;
  while (n < n_max) {
    out.push_back(n);
    next *= ratio;
    n = std::max(n + 1, static_cast<std::uint64_t>(std::ceil(next)));
  }
  out.push_back(n_max);
  return out;
}

int effective_threads(int requested, int paths) {
  int t = requested > 0 ? requested : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("LIL_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) t = std::min<long>(t, cap);
  }
  return std::clamp(t, 1, paths);
}

double SimResult::pooled_max() const {
  double m = 0.0;
  for (int p = 0; p < paths; ++p) m = std::max(m, final_max(p));
  return m;
}

namespace {

struct Neumaier {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double t = s + x;
    if (std::fabs(s) >= std::fabs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

void run_path(const SimConfig& cfg, int path, const std::vector<std::uint64_t>& cps, SimResult& res) {
  constexpr std::size_t kChunk = 4096;
  RandomStream rng(cfg.seed, static_cast<std::uint64_t>(path));
  std::vector<double> buf(kChunk);
  Neumaier acc;
  double plain = 0.0;
  const bool comp = cfg.summation == Summation::compensated;
  const std::size_t row = static_cast<std::size_t>(path) * cps.size();
  std::uint64_t n = 0;
  std::size_t k = 0;
  double run_max = 0.0;
  while (k < cps.size()) {
    const std::size_t take = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, cps[k] - n));
    cfg.dist.sample(rng, std::span<double>(buf.data(), take));
    if (comp)
      for (std::size_t i = 0; i < take; ++i) acc.add(buf[i]);
    else
      for (std::size_t i = 0; i < take; ++i) plain += buf[i];
    n += take;
    if (n == cps[k]) {
      const double s = comp ? acc.value() : plain;
      if (!std::isfinite(s)) throw SimError("simulate: S_n overflowed at n = " + std::to_string(n));
      const double r = s / res.a[k];
      run_max = std::max(run_max, std::fabs(r));
      res.sum[row + k] = s;
      res.ratio[row + k] = r;
      res.running_max[row + k] = run_max;
      ++k;
    }
  }
}

}  // namespace

SimResult run_sim(const SimConfig& cfg) {
  cfg.validate();
  SimResult res;
  res.seed = cfg.seed;
  res.dist = cfg.dist.name();
  res.normalizer = cfg.normalizer.name;
  res.summation = cfg.summation;
  res.paths = cfg.paths;
  res.checkpoints = checkpoint_schedule(cfg.first, cfg.ratio, cfg.n_max);
  for (auto n : res.checkpoints) {
    const double a = cfg.normalizer.a(static_cast<double>(n));
    if (!(a > 0.0) || !std::isfinite(a))
      throw SimError("simulate: normalizer is not positive and finite at n = " + std::to_string(n));
    res.a.push_back(a);
  }
  const std::size_t cells = res.checkpoints.size() * static_cast<std::size_t>(cfg.paths);
  res.sum.assign(cells, 0.0);
  res.ratio.assign(cells, 0.0);
  res.running_max.assign(cells, 0.0);

  const int nt = effective_threads(cfg.threads, cfg.paths);
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (int p = next++; p < cfg.paths; p = next++) {
      try {
        run_path(cfg, p, res.checkpoints, res);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return res;
}

Histogram cluster_histogram(const SimResult& res, int bins, std::size_t burn_in) {
  if (bins < 1) throw SimError("histogram: bins must be >= 1");
  if (burn_in >= res.checkpoints.size()) throw SimError("histogram: burn_in must be below the checkpoint count");
  std::vector<double> vals;
  for (int p = 0; p < res.paths; ++p)
    for (std::size_t k = burn_in; k < res.checkpoints.size(); ++k) vals.push_back(res.value(p, k));
  if (vals.empty()) throw SimError("histogram: empty sample set");

  Histogram h;
  h.samples = vals.size();
  for (double v : vals) h.m = std::max(h.m, std::fabs(v));
  if (h.m == 0.0) {
    h.lo = {0.0};
    h.hi = {0.0};
    h.mass = {1.0};
    h.occupancy = 1.0;
    return h;
  }
  const double width = 2.0 * h.m / bins;
  std::vector<std::size_t> count(bins, 0);
  for (double v : vals) {
    const int i = std::clamp(static_cast<int>(std::floor((v + h.m) / width)), 0, bins - 1);
    ++count[i];
  }
  int hit = 0;
  for (int i = 0; i < bins; ++i) {
    h.lo.push_back(-h.m + i * width);
    h.hi.push_back(i + 1 == bins ? h.m : -h.m + (i + 1) * width);
    h.mass.push_back(static_cast<double>(count[i]) / vals.size());
    if (count[i] > 0) ++hit;
  }
  double tv = 0.0;
  for (int i = 0; i < bins; ++i) tv += std::fabs(h.mass[i] - h.mass[bins - 1 - i]);
  h.symmetry = 0.5 * tv;
  h.occupancy = static_cast<double>(hit) / bins;
  return h;
}

void write_paths_csv(const SimResult& res, std::ostream& out) {
  out << "# seed=" << res.seed << " dist=" << res.dist << " normalizer=" << res.normalizer
      << " summation=" << to_string(res.summation) << "\n";
  out << "path,n,S_over_a,running_max\n";
  for (int p = 0; p < res.paths; ++p)
    for (std::size_t k = 0; k < res.checkpoints.size(); ++k)
      out << p << ',' << res.checkpoints[k] << ',' << num(res.value(p, k)) << ',' << num(res.max_at(p, k)) << '\n';
}

void write_histogram_csv(const Histogram& h, std::uint64_t seed, std::ostream& out) {
  out << "# seed=" << seed << " symmetry=" << num(h.symmetry) << " occupancy=" << num(h.occupancy)
      << " samples=" << h.samples << "\n";
  out << "bin_lo,bin_hi,mass\n";
  for (std::size_t i = 0; i < h.mass.size(); ++i) out << num(h.lo[i]) << ',' << num(h.hi[i]) << ',' << num(h.mass[i]) << '\n';
}

}  // namespace lil::sim

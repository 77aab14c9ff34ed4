#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lil/distmodel.hpp"
#include "lil/klass.hpp"
#include "lil/normalizer.hpp"

namespace lil::sim {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Summation { plain, compensated };
std::string to_string(Summation s);

/// The sequence a_n dividing S_n.
struct NormSpec {
  std::string name;
  std::function<double(double)> a;

  static NormSpec psi(Normalizer nm);
  static NormSpec gamma(std::shared_ptr<const KlassEval> klass);
  static NormSpec fn(std::string name, std::function<double(double)> a);
  /// a_n = factor * base.a(n).
  static NormSpec scaled(const NormSpec& base, double factor);
};

struct SimConfig {
  DistributionSpec dist = DistributionSpec::rademacher();
  NormSpec normalizer;
  std::uint64_t n_max = 10'000'000;
  int paths = 16;
  double ratio = 1.2;
  std::uint64_t first = 1000;
  std::uint64_t seed = 42;
  Summation summation = Summation::compensated;
  /// 0 picks hardware concurrency; LIL_THREADS caps either way.
  int threads = 0;

  void validate() const;
};

/// first, then ceil(prev * ratio) while below n_max, then n_max.
std::vector<std::uint64_t> checkpoint_schedule(std::uint64_t first, double ratio, std::uint64_t n_max);

/// Threads actually used for a run of `paths` paths.
int effective_threads(int requested, int paths);

struct SimResult {
  std::uint64_t seed = 0;
  std::string dist;
  std::string normalizer;
  Summation summation = Summation::compensated;
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> a;  // a_n at each checkpoint
  int paths = 0;
  /// Row-major [path][checkpoint].
  std::vector<double> sum;
  std::vector<double> ratio;
  /// Max of |S_m| / a_m over checkpoints m <= n.
  std::vector<double> running_max;

  double value(int path, std::size_t k) const { return ratio[path * checkpoints.size() + k]; }
  double max_at(int path, std::size_t k) const { return running_max[path * checkpoints.size() + k]; }
  double final_max(int path) const { return max_at(path, checkpoints.size() - 1); }
  double pooled_max() const;
};

SimResult run_sim(const SimConfig& cfg);

struct Histogram {
  double m = 0.0;  // max |value|, bins span [-m, m]
  std::vector<double> lo, hi, mass;
  double symmetry = 0.0;   // total variation between the histogram and its mirror
  double occupancy = 0.0;  // fraction of bins hit
  std::size_t samples = 0;
};

/// Pools checkpoint values with index >= burn_in over all paths.
Histogram cluster_histogram(const SimResult& res, int bins, std::size_t burn_in);

void write_paths_csv(const SimResult& res, std::ostream& out);
void write_histogram_csv(const Histogram& h, std::uint64_t seed, std::ostream& out);

}  // namespace lil::sim

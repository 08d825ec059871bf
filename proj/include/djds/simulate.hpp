#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "djds/model.hpp"

namespace djds {

// Reproducible generator: xoshiro256++ seeded via splitmix64. Trial streams
// are derived from (master seed, trial index) so Monte Carlo runs are
// order-independent and bit-stable across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng for_trial(std::uint64_t master, std::uint64_t trial);

  std::uint64_t next_u64();
  double uniform();              // [0, 1)
  double normal();               // standard normal, Box-Muller
  unsigned poisson(double mean); // inversion sampling

 private:
  std::uint64_t s_[4];
  double spare_ = 0;
  bool has_spare_ = false;
};

struct SimConfig {
  double dt = 0;
  std::uint64_t seed = 0;
  bool record_path = false;

  // throws ConfigError (std::runtime_error) if dt does not divide h or
  // exceeds a quarter of the smallest positive delay
  void validate(const LinearDjdsModel& model, double h) const;
};

struct SamplePath {
  std::size_t n = 0;
  double dt = 0;
  std::vector<double> states;       // (steps+1) * n, t = 0 .. T
  std::vector<std::uint64_t> jump_counts;  // (steps+1) * r_tilde, cumulative
  std::size_t steps() const { return n ? states.size() / n - 1 : 0; }
};

struct SimResult {
  HistorySegment window;  // last-tau window (the whole path tail incl. history)
  SamplePath path;        // populated when cfg.record_path
};

// Piecewise-constant input word: inputs[k] applied for t in [k h, (k+1) h).
SimResult simulate_deterministic(const LinearDjdsModel& model,
                                 const HistorySegment& zeta0,
                                 const std::vector<Vec>& inputs, double h,
                                 const SimConfig& cfg);

SimResult simulate_stochastic(const LinearDjdsModel& model,
                              const HistorySegment& zeta0,
                              const std::vector<Vec>& inputs, double h,
                              const SimConfig& cfg, Rng& rng);

struct McEstimate {
  double mean = 0;
  double stderr_ = 0;
  std::size_t trials = 0;
};

// statistic maps one realization to a scalar; trials use seeds derived from
// cfg.seed and are accumulated in trial-index order
McEstimate mc_moment(const LinearDjdsModel& model, const HistorySegment& zeta0,
                     const std::vector<Vec>& inputs, double h, const SimConfig& cfg,
                     std::size_t trials,
                     const std::function<double(const SimResult&)>& statistic);

void write_path_csv(const std::string& path, const SamplePath& sp);

} // namespace djds

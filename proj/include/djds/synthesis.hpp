#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "djds/abstraction.hpp"

namespace djds {

struct SafetySpec {
  Vec w_lo, w_hi;          // comfort zone W
  double contraction = 0;  // total precision; W is shrunk by this per coordinate

  bool contracted_nonempty() const;
};

struct Bitmap {
  std::uint64_t size = 0;
  std::vector<std::uint64_t> words;

  explicit Bitmap(std::uint64_t n = 0) : size(n), words((n + 63) / 64, 0) {}
  bool get(std::uint64_t i) const { return (words[i >> 6] >> (i & 63)) & 1; }
  void set(std::uint64_t i, bool v) {
    if (v) words[i >> 6] |= 1ULL << (i & 63);
    else words[i >> 6] &= ~(1ULL << (i & 63));
  }
  std::uint64_t count() const;
};

struct Controller {
  AbstractionParams params;
  PrecisionBudget budget;
  SafetySpec spec;
  std::uint64_t model_hash = 0;
  Bitmap safe;                       // the maximal invariant set
  std::vector<std::uint8_t> allowed; // one mask per safe state, ascending index

  std::uint64_t transitions() const;
  std::uint8_t mask_of(std::uint64_t state) const;  // 0 if not safe
};

// Euclidean distance from a point to the box (0 inside).
double distance_to_box(const double* x, const Vec& lo, const Vec& hi);

Bitmap label_safe(const LinearDjdsModel& model, const AbstractionParams& params,
                  const SafetySpec& spec, const SimConfig& cfg);

Bitmap maximal_invariant(const Bitmap& safe, const AbstractionParams& params);

// throws std::runtime_error("EmptyController") when the invariant set is empty
Controller extract_controller(const Bitmap& invariant, const AbstractionParams& params,
                              const SafetySpec& spec, const PrecisionBudget& budget,
                              std::uint64_t model_hash,
                              const LinearDjdsModel& model, const SimConfig& cfg);

struct InitialMatch {
  std::uint64_t state = 0;
  double distance = 0;
};
// exhaustive scan over safe states for the closest abstract output
std::optional<InitialMatch> match_initial(const HistorySegment& zeta0,
                                          const LinearDjdsModel& model,
                                          const Controller& ctrl, const SimConfig& cfg);

struct ClosedLoopRun {
  SamplePath path;
  std::vector<unsigned> input_trace;  // one id per sampling period
  std::uint64_t initial_state = 0;
};

using TieBreak = std::function<unsigned(std::uint64_t state, std::uint8_t mask)>;
unsigned lowest_allowed(std::uint64_t state, std::uint8_t mask);

// throws std::runtime_error("NoMatch") if zeta0 has no safe state within the
// controller's total precision
ClosedLoopRun run_closed_loop(const LinearDjdsModel& model, const Controller& ctrl,
                              const HistorySegment& zeta0, std::size_t periods,
                              const SimConfig& cfg, Rng& rng,
                              const TieBreak& tie_break = lowest_allowed);

void write_controller(const std::string& path, const Controller& ctrl);
Controller read_controller(const std::string& path);

} // namespace djds

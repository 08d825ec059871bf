#include "djds/synthesis.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace djds {

bool SafetySpec::contracted_nonempty() const {
  for (std::size_t i = 0; i < w_lo.size(); ++i)
    if (!(w_hi[i] - w_lo[i] > 2.0 * contraction)) return false;
  return true;
}

std::uint64_t Bitmap::count() const {
  std::uint64_t c = 0;
  for (std::uint64_t w : words) c += std::uint64_t(std::popcount(w));
  return c;
}

std::uint64_t Controller::transitions() const {
  std::uint64_t t = 0;
  for (std::uint8_t m : allowed) t += std::uint64_t(std::popcount(unsigned(m)));
  return t;
}

std::uint8_t Controller::mask_of(std::uint64_t state) const {
  if (!safe.get(state)) return 0;
  // rank of `state` among safe states = number of safe states below it
  std::uint64_t rank = 0;
  std::uint64_t wi = state >> 6;
  for (std::uint64_t i = 0; i < wi; ++i)
    rank += std::uint64_t(std::popcount(safe.words[i]));
  std::uint64_t mask = (state & 63) ? ((1ULL << (state & 63)) - 1) : 0;
  rank += std::uint64_t(std::popcount(safe.words[wi] & mask));
  return allowed[rank];
}

double distance_to_box(const double* x, const Vec& lo, const Vec& hi) {
  double s = 0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    double d = 0;
    if (x[i] < lo[i]) d = lo[i] - x[i];
    else if (x[i] > hi[i]) d = x[i] - hi[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Bitmap label_safe(const LinearDjdsModel& model, const AbstractionParams& params,
                  const SafetySpec& spec, const SimConfig& cfg) {
  if (!spec.contracted_nonempty()) throw std::runtime_error("EmptyContractedZone");
  Vec lo = spec.w_lo, hi = spec.w_hi;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] += spec.contraction;
    hi[i] -= spec.contraction;
  }
  Bitmap safe(params.num_states());
  traverse_outputs(model, params, cfg,
                   [&](std::uint64_t idx, const HistorySegment& win) {
                     for (std::size_t j = 0; j < win.samples(); ++j) {
                       const double* x = win.node(j);
                       for (std::size_t i = 0; i < win.n; ++i)
                         if (x[i] < lo[i] || x[i] > hi[i]) return;
                     }
                     safe.set(idx, true);
                   });
  return safe;
}

Bitmap maximal_invariant(const Bitmap& safe, const AbstractionParams& params) {
  Bitmap cur = safe;
  const std::size_t K = params.inputs.size();
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::uint64_t s = 0; s < cur.size; ++s) {
      if (!cur.get(s)) continue;
      bool keep = false;
      for (std::size_t u = 0; u < K && !keep; ++u)
        keep = cur.get(successor(s, unsigned(u), params));
      if (!keep) {
        cur.set(s, false);
        changed = true;
      }
    }
  }
  return cur;
}

Controller extract_controller(const Bitmap& invariant, const AbstractionParams& params,
                              const SafetySpec& spec, const PrecisionBudget& budget,
                              std::uint64_t model_hash, const LinearDjdsModel&,
                              const SimConfig&) {
  if (invariant.count() == 0) throw std::runtime_error("EmptyController");
  Controller ctrl;
  ctrl.params = params;
  ctrl.budget = budget;
  ctrl.spec = spec;
  ctrl.model_hash = model_hash;
  ctrl.safe = invariant;
  const std::size_t K = params.inputs.size();
  if (K > 8) throw std::runtime_error("input mask format supports at most 8 inputs");
  ctrl.allowed.reserve(invariant.count());
  for (std::uint64_t s = 0; s < invariant.size; ++s) {
    if (!invariant.get(s)) continue;
    std::uint8_t mask = 0;
    for (std::size_t u = 0; u < K; ++u)
      if (invariant.get(successor(s, unsigned(u), params))) mask |= std::uint8_t(1u << u);
    ctrl.allowed.push_back(mask);  // nonzero by the fixed-point property
  }
  return ctrl;
}

std::optional<InitialMatch> match_initial(const HistorySegment& zeta0,
                                          const LinearDjdsModel& model,
                                          const Controller& ctrl, const SimConfig& cfg) {
  if (ctrl.safe.count() == 0) return std::nullopt;
  InitialMatch best{0, -1};
  traverse_outputs(model, ctrl.params, cfg,
                   [&](std::uint64_t idx, const HistorySegment& win) {
                     if (!ctrl.safe.get(idx)) return;
                     double d = sup_distance(zeta0, win);
                     if (best.distance < 0 || d < best.distance) best = {idx, d};
                   });
  if (best.distance < 0 || best.distance > ctrl.budget.total) return std::nullopt;
  return best;
}

unsigned lowest_allowed(std::uint64_t, std::uint8_t mask) {
  return unsigned(std::countr_zero(unsigned(mask)));
}

ClosedLoopRun run_closed_loop(const LinearDjdsModel& model, const Controller& ctrl,
                              const HistorySegment& zeta0, std::size_t periods,
                              const SimConfig& cfg, Rng& rng, const TieBreak& tie_break) {
  auto match = match_initial(zeta0, model, ctrl, cfg);
  if (!match) throw std::runtime_error("NoMatch");

  ClosedLoopRun out;
  out.initial_state = match->state;
  std::uint64_t s = match->state;

  HistorySegment window = zeta0;
  if (std::fabs(window.grid_step - cfg.dt) > 1e-12 && window.samples() > 1)
    window = window.resampled(cfg.dt);

  SimConfig step_cfg = cfg;
  step_cfg.record_path = true;
  out.path.n = model.n;
  out.path.dt = cfg.dt;

  for (std::size_t p = 0; p < periods; ++p) {
    std::uint8_t mask = ctrl.mask_of(s);
    if (mask == 0) throw std::runtime_error("controller left its own safe set");
    unsigned u = tie_break(s, mask);
    out.input_trace.push_back(u);
    SimResult r = simulate_stochastic(model, window, {ctrl.params.inputs.points[u]},
                                      ctrl.params.h, step_cfg, rng);
    const std::size_t rt = model.R.size();
    std::size_t skip = out.path.states.empty() ? 0 : 1;  // drop duplicated t0 sample
    out.path.states.insert(out.path.states.end(),
                           r.path.states.begin() + skip * model.n, r.path.states.end());
    if (rt > 0) {
      // jump counts restart per call; shift by the cumulative total so far
      std::vector<std::uint64_t> base(rt, 0);
      if (!out.path.jump_counts.empty())
        for (std::size_t i = 0; i < rt; ++i)
          base[i] = out.path.jump_counts[out.path.jump_counts.size() - rt + i];
      std::size_t rows = r.path.jump_counts.size() / rt;
      for (std::size_t row = skip; row < rows; ++row)
        for (std::size_t i = 0; i < rt; ++i)
          out.path.jump_counts.push_back(r.path.jump_counts[row * rt + i] + base[i]);
    } else if (out.path.jump_counts.empty() && skip == 0) {
      // no jump channels: leave jump_counts empty
    }
    window = r.window;
    s = successor(s, u, ctrl.params);
  }
  return out;
}

// ---- controller file ----

namespace {
void put(std::ofstream& out, const void* p, std::size_t len) {
  out.write(static_cast<const char*>(p), std::streamsize(len));
}
void get(std::ifstream& in, void* p, std::size_t len) {
  if (!in.read(static_cast<char*>(p), std::streamsize(len)))
    throw std::runtime_error("truncated controller file");
}
template <class T> void put_v(std::ofstream& out, T v) { put(out, &v, sizeof v); }
template <class T> T get_v(std::ifstream& in) {
  T v;
  get(in, &v, sizeof v);
  return v;
}
} // namespace

void write_controller(const std::string& path, const Controller& ctrl) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("DJDSCTL1", 8);
  put_v(out, ctrl.model_hash);
  put_v(out, ctrl.params.h);
  put_v(out, std::uint32_t(ctrl.params.N));
  put_v(out, std::uint32_t(ctrl.params.inputs.size()));
  std::uint32_t m = ctrl.params.inputs.points.empty()
                        ? 0
                        : std::uint32_t(ctrl.params.inputs.points.front().size());
  put_v(out, m);
  put_v(out, ctrl.params.inputs.eta);
  for (const auto& p : ctrl.params.inputs.points)
    put(out, p.data(), p.size() * sizeof(double));
  const HistorySegment& zs = ctrl.params.zeta_s;
  put_v(out, std::uint32_t(zs.n));
  put_v(out, std::uint32_t(zs.samples()));
  put_v(out, zs.grid_step);
  put(out, zs.values.data(), zs.values.size() * sizeof(double));
  put_v(out, std::uint32_t(ctrl.spec.w_lo.size()));
  put(out, ctrl.spec.w_lo.data(), ctrl.spec.w_lo.size() * sizeof(double));
  put(out, ctrl.spec.w_hi.data(), ctrl.spec.w_hi.size() * sizeof(double));
  put_v(out, ctrl.budget.epsilon);
  put_v(out, ctrl.budget.quant_term);
  put_v(out, ctrl.budget.total);
  put_v(out, std::uint64_t(ctrl.safe.size));
  put_v(out, ctrl.safe.count());
  put_v(out, ctrl.transitions());
  // bit-packed safe set, byte granularity, little-endian bit order
  std::uint64_t nbytes = (ctrl.safe.size + 7) / 8;
  std::vector<std::uint8_t> bytes(nbytes, 0);
  for (std::uint64_t i = 0; i < ctrl.safe.size; ++i)
    if (ctrl.safe.get(i)) bytes[i >> 3] |= std::uint8_t(1u << (i & 7));
  put(out, bytes.data(), bytes.size());
  put(out, ctrl.allowed.data(), ctrl.allowed.size());
}

Controller read_controller(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  get(in, magic, 8);
  if (std::memcmp(magic, "DJDSCTL1", 8) != 0)
    throw std::runtime_error("bad controller file magic");
  Controller ctrl;
  ctrl.model_hash = get_v<std::uint64_t>(in);
  ctrl.params.h = get_v<double>(in);
  ctrl.params.N = get_v<std::uint32_t>(in);
  std::uint32_t K = get_v<std::uint32_t>(in);
  std::uint32_t m = get_v<std::uint32_t>(in);
  ctrl.params.inputs.eta = get_v<double>(in);
  ctrl.params.inputs.points.resize(K);
  for (auto& p : ctrl.params.inputs.points) {
    p.resize(m);
    get(in, p.data(), m * sizeof(double));
  }
  HistorySegment& zs = ctrl.params.zeta_s;
  zs.n = get_v<std::uint32_t>(in);
  std::uint32_t samples = get_v<std::uint32_t>(in);
  zs.grid_step = get_v<double>(in);
  zs.values.resize(std::size_t(samples) * zs.n);
  get(in, zs.values.data(), zs.values.size() * sizeof(double));
  std::uint32_t wn = get_v<std::uint32_t>(in);
  ctrl.spec.w_lo.resize(wn);
  ctrl.spec.w_hi.resize(wn);
  get(in, ctrl.spec.w_lo.data(), wn * sizeof(double));
  get(in, ctrl.spec.w_hi.data(), wn * sizeof(double));
  ctrl.budget.epsilon = get_v<double>(in);
  ctrl.budget.quant_term = get_v<double>(in);
  ctrl.budget.total = get_v<double>(in);
  ctrl.spec.contraction = ctrl.budget.total;
  std::uint64_t size = get_v<std::uint64_t>(in);
  std::uint64_t nsafe = get_v<std::uint64_t>(in);
  std::uint64_t ntrans = get_v<std::uint64_t>(in);
  ctrl.safe = Bitmap(size);
  std::uint64_t nbytes = (size + 7) / 8;
  std::vector<std::uint8_t> bytes(nbytes);
  get(in, bytes.data(), nbytes);
  for (std::uint64_t i = 0; i < size; ++i)
    if ((bytes[i >> 3] >> (i & 7)) & 1) ctrl.safe.set(i, true);
  ctrl.allowed.resize(nsafe);
  get(in, ctrl.allowed.data(), nsafe);
  if (ctrl.safe.count() != nsafe) throw std::runtime_error("controller file corrupt");
  if (ctrl.transitions() != ntrans) throw std::runtime_error("controller file corrupt");
  return ctrl;
}

} // namespace djds

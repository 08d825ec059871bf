#include "djds/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "djds/kernels.hpp"

namespace djds {

static std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

Rng Rng::for_trial(std::uint64_t master, std::uint64_t trial) {
  std::uint64_t x = master;
  std::uint64_t base = splitmix64(x);
  return Rng(base ^ (0xD1B54A32D192ED03ULL * (trial + 1)));
}

static inline std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

std::uint64_t Rng::next_u64() {
  std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0;
  do { u1 = uniform(); } while (u1 <= 0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

unsigned Rng::poisson(double mean) {
  if (mean <= 0) return 0;
  // inversion; fine for the small lambda*dt this code meets
  double p = std::exp(-mean), cum = p, u = uniform();
  unsigned k = 0;
  while (u > cum && k < 10000) {
    ++k;
    p *= mean / double(k);
    cum += p;
  }
  return k;
}

void SimConfig::validate(const LinearDjdsModel& model, double h) const {
  if (!(dt > 0)) throw std::runtime_error("ConfigError: dt must be positive");
  double steps = h / dt;
  if (std::fabs(steps - std::llround(steps)) > 1e-9 * std::max(1.0, steps))
    throw std::runtime_error("ConfigError: dt must divide h");
  double mind = model.min_positive_delay();
  if (mind > 0 && dt > mind / 4.0 + 1e-12)
    throw std::runtime_error("ConfigError: dt must be <= min positive delay / 4");
}

namespace {

// rolling history of the last (L-1)*dt time units on the integration grid
struct RingBuffer {
  std::size_t n = 0, L = 0, head = 0;
  std::vector<double> data;  // L * n, sample j at (head + j) % L

  void init(const HistorySegment& seg) {
    n = seg.n;
    L = seg.samples();
    head = 0;
    data.assign(seg.values.begin(), seg.values.end());
  }
  const double* newest() const { return sample(L - 1); }
  const double* sample(std::size_t j) const {
    return data.data() + ((head + j) % L) * n;
  }
  void push(const double* x) {
    double* dst = data.data() + head * n;
    for (std::size_t i = 0; i < n; ++i) dst[i] = x[i];
    head = (head + 1) % L;
  }
  // value delay time units before the newest sample, linear interpolation
  void delayed(double delay, double dt, Vec& out) const {
    if (L == 1 || delay <= 0) {
      const double* x = newest();
      out.assign(x, x + n);
      return;
    }
    double pos = double(L - 1) - delay / dt;
    if (pos <= 0) {
      const double* x = sample(0);
      out.assign(x, x + n);
      return;
    }
    std::size_t j = std::size_t(pos);
    double w = pos - double(j);
    const double* a = sample(j);
    if (w == 0.0) {
      out.assign(a, a + n);
      return;
    }
    const double* b = sample(j + 1);
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
  }
  HistorySegment to_segment(double dt) const {
    HistorySegment seg;
    seg.n = n;
    seg.grid_step = dt;
    seg.values.resize(L * n);
    for (std::size_t j = 0; j < L; ++j) {
      const double* s = sample(j);
      std::copy(s, s + n, seg.values.begin() + j * n);
    }
    return seg;
  }
};

SimResult run(const LinearDjdsModel& model, const HistorySegment& zeta0,
              const std::vector<Vec>& inputs, double h, const SimConfig& cfg,
              Rng* rng) {
  cfg.validate(model, h);
  const std::size_t n = model.n;
  HistorySegment z0 = zeta0;
  if (std::fabs(z0.grid_step - cfg.dt) > 1e-12 && z0.samples() > 1)
    z0 = z0.resampled(cfg.dt);
  if (z0.n != n) throw std::runtime_error("ConfigError: initial segment dimension");

  RingBuffer ring;
  ring.init(z0);
  const std::size_t steps_per_seg = std::size_t(std::llround(h / cfg.dt));
  const std::size_t total = steps_per_seg * inputs.size();
  const std::size_t rt = model.R.size();

  SimResult res;
  std::vector<std::uint64_t> counts(rt, 0);
  if (cfg.record_path) {
    res.path.n = n;
    res.path.dt = cfg.dt;
    res.path.states.reserve((total + 1) * n);
    const double* x0 = ring.newest();
    res.path.states.insert(res.path.states.end(), x0, x0 + n);
    res.path.jump_counts.insert(res.path.jump_counts.end(), counts.begin(), counts.end());
  }

  Vec x(n), xd1(n), xd2(n), xd3(n), drift(n), coeff(n), xnew(n);
  for (std::size_t seg = 0; seg < inputs.size(); ++seg) {
    const Vec& u = inputs[seg];
    if (u.size() != model.m) throw std::runtime_error("ConfigError: input dimension");
    for (std::size_t k = 0; k < steps_per_seg; ++k) {
      const double* cur = ring.newest();
      x.assign(cur, cur + n);
      ring.delayed(model.tau1, cfg.dt, xd1);

      std::fill(drift.begin(), drift.end(), 0.0);
      kernels::matvec_acc(model.A1.a.data(), n, n, x.data(), drift.data());
      kernels::matvec_acc(model.A2.a.data(), n, n, xd1.data(), drift.data());
      if (model.m > 0)
        kernels::matvec_acc(model.B.a.data(), n, model.m, u.data(), drift.data());

      xnew = x;
      kernels::axpy(cfg.dt, drift.data(), xnew.data(), n);

      if (rng) {
        if (!model.G.empty()) {
          ring.delayed(model.tau2, cfg.dt, xd2);
          double sqdt = std::sqrt(cfg.dt);
          for (std::size_t i = 0; i < model.G.size(); ++i) {
            std::fill(coeff.begin(), coeff.end(), 0.0);
            kernels::matvec_acc(model.G[i].a.data(), n, n, x.data(), coeff.data());
            kernels::matvec_acc(model.Gbar[i].a.data(), n, n, xd2.data(), coeff.data());
            kernels::axpy(sqdt * rng->normal(), coeff.data(), xnew.data(), n);
          }
        }
        if (rt > 0) {
          ring.delayed(model.tau3, cfg.dt, xd3);
          for (std::size_t i = 0; i < rt; ++i) {
            unsigned dN = rng->poisson(model.lambda[i] * cfg.dt);
            counts[i] += dN;
            if (dN == 0) continue;
            std::fill(coeff.begin(), coeff.end(), 0.0);
            kernels::matvec_acc(model.R[i].a.data(), n, n, x.data(), coeff.data());
            kernels::matvec_acc(model.Rbar[i].a.data(), n, n, xd3.data(), coeff.data());
            kernels::axpy(double(dN), coeff.data(), xnew.data(), n);
          }
        }
      }

      ring.push(xnew.data());
      if (cfg.record_path) {
        res.path.states.insert(res.path.states.end(), xnew.begin(), xnew.end());
        res.path.jump_counts.insert(res.path.jump_counts.end(), counts.begin(),
                                    counts.end());
      }
    }
  }
  res.window = ring.to_segment(cfg.dt);
  return res;
}

} // namespace

SimResult simulate_deterministic(const LinearDjdsModel& model,
                                 const HistorySegment& zeta0,
                                 const std::vector<Vec>& inputs, double h,
                                 const SimConfig& cfg) {
  return run(model, zeta0, inputs, h, cfg, nullptr);
}

SimResult simulate_stochastic(const LinearDjdsModel& model, const HistorySegment& zeta0,
                              const std::vector<Vec>& inputs, double h,
                              const SimConfig& cfg, Rng& rng) {
  return run(model, zeta0, inputs, h, cfg, &rng);
}

McEstimate mc_moment(const LinearDjdsModel& model, const HistorySegment& zeta0,
                     const std::vector<Vec>& inputs, double h, const SimConfig& cfg,
                     std::size_t trials,
                     const std::function<double(const SimResult&)>& statistic) {
  if (trials < 2) throw std::runtime_error("ConfigError: trials must be >= 2");
  double sum = 0, sumsq = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::for_trial(cfg.seed, t);
    SimResult r = simulate_stochastic(model, zeta0, inputs, h, cfg, rng);
    double v = statistic(r);
    sum += v;
    sumsq += v * v;
  }
  McEstimate e;
  e.trials = trials;
  e.mean = sum / double(trials);
  double var = std::max(0.0, (sumsq - sum * sum / double(trials)) / double(trials - 1));
  e.stderr_ = std::sqrt(var / double(trials));
  return e;
}

void write_path_csv(const std::string& path, const SamplePath& sp) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::size_t rt = sp.states.empty() ? 0
                   : sp.jump_counts.size() / (sp.steps() + 1);
  out << "time";
  for (std::size_t i = 1; i <= sp.n; ++i) out << ",x" << i;
  for (std::size_t i = 1; i <= rt; ++i) out << ",N" << i;
  out << "\n";
  char buf[64];
  for (std::size_t k = 0; k <= sp.steps(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", double(k) * sp.dt);
    out << buf;
    for (std::size_t i = 0; i < sp.n; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", sp.states[k * sp.n + i]);
      out << buf;
    }
    for (std::size_t i = 0; i < rt; ++i) out << "," << sp.jump_counts[k * rt + i];
    out << "\n";
  }
}

} // namespace djds

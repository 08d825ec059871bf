#include "djds/abstraction.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace djds {

std::uint64_t AbstractionParams::num_states() const {
  std::uint64_t s = 1;
  for (std::size_t i = 0; i < N; ++i) s *= inputs.size();
  return s;
}

std::uint64_t AbstractionParams::num_transitions() const {
  return num_states() * inputs.size();
}

std::vector<unsigned> decode_word(std::uint64_t index, std::size_t N, std::size_t K) {
  std::vector<unsigned> w(N);
  for (std::size_t i = N; i-- > 0;) {
    w[i] = unsigned(index % K);
    index /= K;
  }
  return w;
}

std::uint64_t encode_word(const std::vector<unsigned>& word, std::size_t K) {
  std::uint64_t idx = 0;
  for (unsigned u : word) idx = idx * K + u;
  return idx;
}

std::uint64_t successor(std::uint64_t index, unsigned u, const AbstractionParams& p) {
  std::uint64_t mod = p.num_states() / p.inputs.size();  // K^{N-1}
  return (index % mod) * p.inputs.size() + u;
}

SigmaBound make_sigma_bound(const LinearDjdsModel& model,
                            const StabilityCertificate& cert, const KlEnvelope& env,
                            const OperatingRegion& region,
                            const QuantizedInputSet& inputs,
                            const HistorySegment& zeta_s, double dq) {
  SigmaBound b;
  b.env = env;
  b.Pbar_norm = cert.lambda_max_P;
  b.gamma_tilde_slope = spectral_norm(cert.P) * region.diameter();
  b.dq = dq;
  b.n = model.n;
  b.rbar = model.G.size();
  b.sum_lambda = 0;
  for (double l : model.lambda) b.sum_lambda += l;
  double s = zeta_s.sup_norm();
  b.norm_zeta_k = s * s;  // k = 2
  b.gamma_u = env.gamma(inputs.sup_norm());
  return b;
}

namespace {

// integrands of the two integrals in sigma_hat (k = 2)
inline double integrand_diffusion(const SigmaBound& b, double s) {
  return b.env.beta_tilde(b.norm_zeta_k, s) + b.gamma_u;
}
inline double integrand_jump(const SigmaBound& b, double Lr, double s) {
  return b.gamma_tilde_slope * Lr * std::sqrt(integrand_diffusion(b, s));
}

double sigma_hat_impl(const SigmaBound& b, double Lg, double Lr, double t) {
  if (t <= 0) return 0.0;
  double I1 = 0, I2 = 0;
  double prev1 = integrand_diffusion(b, 0.0);
  double prev2 = integrand_jump(b, Lr, 0.0);
  double s = 0;
  while (s < t) {
    double next = std::min(t, s + b.dq);
    double f1 = integrand_diffusion(b, next);
    double f2 = integrand_jump(b, Lr, next);
    I1 += 0.5 * (prev1 + f1) * (next - s);
    I2 += 0.5 * (prev2 + f2) * (next - s);
    prev1 = f1;
    prev2 = f2;
    s = next;
  }
  double damp = std::exp(-b.env.kappa * t);
  double A = 0.5 * b.Pbar_norm * double(b.n) * double(std::min(b.n, b.rbar)) * Lg * Lg;
  double inner = A * damp * I1 + b.sum_lambda * damp * I2;
  return b.env.alpha_lower_inv(inner);
}

void prepare_theta(const SigmaBound& b, double Lg, double Lr, double tmax) {
  if (b.theta_Lg == Lg && b.theta_Lr == Lr && b.theta_tmax >= tmax) return;
  std::size_t len = std::size_t(std::ceil(tmax / b.dq)) + 2;
  // cumulative trapezoid pass, then suffix max for the nonincreasing envelope
  std::vector<double> vals(len);
  double I1 = 0, I2 = 0;
  double prev1 = integrand_diffusion(b, 0.0);
  double prev2 = integrand_jump(b, Lr, 0.0);
  double A = 0.5 * b.Pbar_norm * double(b.n) * double(std::min(b.n, b.rbar)) * Lg * Lg;
  vals[0] = 0.0;
  for (std::size_t i = 1; i < len; ++i) {
    double t = double(i) * b.dq;
    double f1 = integrand_diffusion(b, t);
    double f2 = integrand_jump(b, Lr, t);
    I1 += 0.5 * (prev1 + f1) * b.dq;
    I2 += 0.5 * (prev2 + f2) * b.dq;
    prev1 = f1;
    prev2 = f2;
    double damp = std::exp(-b.env.kappa * t);
    vals[i] = b.env.alpha_lower_inv(A * damp * I1 + b.sum_lambda * damp * I2);
  }
  for (std::size_t i = len - 1; i-- > 0;) vals[i] = std::max(vals[i], vals[i + 1]);
  b.theta = std::move(vals);
  b.theta_Lg = Lg;
  b.theta_Lr = Lr;
  b.theta_tmax = double(len - 2) * b.dq;
}

} // namespace

double sigma_hat(const SigmaBound& bound, double Lg, double Lr, double t) {
  if (t < 0) throw std::invalid_argument("sigma_hat: t must be >= 0");
  return sigma_hat_impl(bound, Lg, Lr, t);
}

double sigma(const SigmaBound& bound, double Lg, double Lr, double t) {
  if (t < 0) throw std::invalid_argument("sigma: t must be >= 0");
  if (Lg == 0 && Lr == 0) return 0.0;
  double ts = std::max(t - bound.env.tau, 0.0);
  prepare_theta(bound, Lg, Lr, ts + bound.dq);
  double pos = ts / bound.dq;
  std::size_t j = std::size_t(pos);
  if (j + 1 >= bound.theta.size()) return bound.theta.back();
  double w = pos - double(j);
  return (1.0 - w) * bound.theta[j] + w * bound.theta[j + 1];
}

double compute_Z(const LinearDjdsModel& model, const AbstractionParams& params,
                 const SimConfig& cfg) {
  double best = 0;
  for (const auto& u : params.inputs.points) {
    SimResult r = simulate_deterministic(model, params.zeta_s, {u}, params.h, cfg);
    double d = sup_distance(r.window, params.zeta_s);
    best = std::max(best, d * d);
  }
  return best;
}

McEstimate compute_Z_tilde(const LinearDjdsModel& model, const AbstractionParams& params,
                           const SimConfig& cfg, std::size_t trials) {
  McEstimate best{};
  bool first = true;
  for (const auto& u : params.inputs.points) {
    McEstimate e = mc_moment(model, params.zeta_s, {u}, params.h, cfg, trials,
                             [&](const SimResult& r) {
                               double d = sup_distance(r.window, params.zeta_s);
                               return d * d;
                             });
    if (first || e.mean > best.mean) best = e;
    first = false;
  }
  return best;
}

double EpsilonPlan::lhs(double eps) const {
  return self_coeff * eps + sigma_term + tail_term;
}

EpsilonPlan min_epsilon(const LinearDjdsModel& model, const AbstractionParams& params,
                        const SigmaBound& bound, PrecisionMode mode,
                        const SimConfig& cfg, std::size_t trials, double Z_override) {
  EpsilonPlan plan;
  const KlEnvelope& env = bound.env;
  double h = params.h;
  // beta_tilde(eps^2, h) = a^2 eps^2 with this coefficient
  plan.self_coeff = std::sqrt(std::exp(-(h - env.tau)) +
                              env.ratio * std::exp(-env.kappa * std::max(0.0, h - env.tau)));

  if (Z_override >= 0) {
    plan.Z = Z_override;
  } else if (mode == PrecisionMode::noiseless) {
    plan.Z = compute_Z(model, params, cfg);
  } else {
    McEstimate e = compute_Z_tilde(model, params, cfg, trials);
    plan.Z = e.mean;
    plan.Z_stderr = e.stderr_;
  }
  LipschitzConstants lip = lipschitz_constants(model);
  plan.sigma_term =
      mode == PrecisionMode::noiseless
          ? std::sqrt(sigma(bound, lip.Lg, lip.Lr, double(params.N + 1) * h))
          : 0.0;
  plan.tail_term = std::sqrt(env.beta_tilde(plan.Z, double(params.N) * h));

  plan.budget.k = 2;
  plan.budget.quant_term = std::sqrt(env.gamma(params.inputs.eta));

  if (plan.self_coeff >= 1.0) {
    plan.feasible = false;
    plan.obstruction = "sampling time h too small: (beta_tilde(eps^k,h))^{1/k} >= eps for all eps";
    return plan;
  }
  double lo = 1e-9;
  double hi = (plan.sigma_term + plan.tail_term) / (1.0 - plan.self_coeff) + 1e-6;
  hi = std::max(hi, 2e-9);
  auto ok = [&](double eps) { return plan.lhs(eps) <= eps; };
  if (!ok(hi)) {
    plan.feasible = false;
    plan.obstruction = "no epsilon in range satisfies the inequality";
    return plan;
  }
  if (ok(lo)) hi = lo;
  while (hi - lo > 1e-6) {
    double mid = 0.5 * (lo + hi);
    if (ok(mid)) hi = mid; else lo = mid;
  }
  plan.feasible = true;
  plan.budget.epsilon = hi;
  plan.budget.total = hi + plan.budget.quant_term;
  return plan;
}

std::optional<std::size_t> min_horizon(const LinearDjdsModel& model,
                                       AbstractionParams params, const SigmaBound& bound,
                                       double epsilon, PrecisionMode mode,
                                       const SimConfig& cfg, std::size_t N_max) {
  double Z = mode == PrecisionMode::noiseless
                 ? compute_Z(model, params, cfg)
                 : compute_Z_tilde(model, params, cfg, 1000).mean;
  for (std::size_t N = 1; N <= N_max; ++N) {
    params.N = N;
    EpsilonPlan plan = min_epsilon(model, params, bound, mode, cfg, 1000, Z);
    if (!plan.feasible) {
      // the h-obstruction does not improve with N
      if (plan.self_coeff >= 1.0) return std::nullopt;
      continue;
    }
    if (plan.budget.epsilon <= epsilon) return N;
  }
  return std::nullopt;
}

HistorySegment output_map(std::uint64_t index, const LinearDjdsModel& model,
                          const AbstractionParams& params, const SimConfig& cfg) {
  std::vector<unsigned> word = decode_word(index, params.N, params.inputs.size());
  std::vector<Vec> ins;
  ins.reserve(word.size());
  for (unsigned u : word) ins.push_back(params.inputs.points[u]);
  return simulate_deterministic(model, params.zeta_s, ins, params.h, cfg).window;
}

void traverse_outputs(
    const LinearDjdsModel& model, const AbstractionParams& params, const SimConfig& cfg,
    const std::function<void(std::uint64_t, const HistorySegment&)>& visit) {
  const std::size_t K = params.inputs.size();
  HistorySegment root = params.zeta_s;
  if (std::fabs(root.grid_step - cfg.dt) > 1e-12 && root.samples() > 1)
    root = root.resampled(cfg.dt);

  // one window per depth; inputs visited in ascending id so leaves come out
  // in ascending index order
  std::function<void(std::size_t, std::uint64_t, const HistorySegment&)> rec =
      [&](std::size_t depth, std::uint64_t index, const HistorySegment& seg) {
        for (std::size_t u = 0; u < K; ++u) {
          HistorySegment next =
              simulate_deterministic(model, seg, {params.inputs.points[u]}, params.h, cfg)
                  .window;
          std::uint64_t idx = index * K + u;
          if (depth + 1 == params.N)
            visit(idx, next);
          else
            rec(depth + 1, idx, next);
        }
      };
  if (params.N == 0) throw std::invalid_argument("N must be >= 1");
  rec(0, 0, root);
}

void write_manifest(const std::string& path, const AbstractionParams& params,
                    const PrecisionBudget& budget, std::uint64_t model_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << key << " = " << buf << "\n";
  };
  put("h", params.h);
  out << "N = " << params.N << "\n";
  put("eta", params.inputs.eta);
  out << "num_inputs = " << params.inputs.size() << "\n";
  out << "input_points =";
  for (const auto& p : params.inputs.points)
    for (double v : p) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out << buf;
    }
  out << "\n";
  put("epsilon", budget.epsilon);
  put("quant_term", budget.quant_term);
  put("total_precision", budget.total);
  out << "states = " << params.num_states() << "\n";
  out << "transitions = " << params.num_transitions() << "\n";
  out << "model_hash = " << model_hash << "\n";
}

} // namespace djds

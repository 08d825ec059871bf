#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "djds/model.hpp"
#include "djds/simulate.hpp"
#include "djds/stability.hpp"

namespace djds {

// Shift-register abstraction parameters: states are input words of length N,
// outputs are noiseless trajectory tails simulated from the source state.
struct AbstractionParams {
  double h = 0;
  std::size_t N = 0;
  HistorySegment zeta_s;
  QuantizedInputSet inputs;

  std::uint64_t num_states() const;       // |inputs|^N
  std::uint64_t num_transitions() const;  // |inputs|^{N+1}
};

// word decoding is big-endian base |inputs|: u1 is the most significant digit
std::vector<unsigned> decode_word(std::uint64_t index, std::size_t N, std::size_t K);
std::uint64_t encode_word(const std::vector<unsigned>& word, std::size_t K);
std::uint64_t successor(std::uint64_t index, unsigned u, const AbstractionParams& p);

// Quadrature bound on the noise-induced k-th moment deviation.
struct SigmaBound {
  KlEnvelope env;
  double Pbar_norm = 0;          // ||sqrt(P)||^2 = lambda_max(P), quadratic V
  double gamma_tilde_slope = 0;  // max_D ||P (y - x)|| <= ||P|| diam(D)
  double dq = 0.1;               // quadrature step
  std::size_t n = 0, rbar = 0;
  double sum_lambda = 0;
  double norm_zeta_k = 0;        // ||zeta_s||^k on the grid, k = 2
  double gamma_u = 0;            // gamma(sup ||u|| over the input set)

  // cached envelope theta for the (Lg, Lr) last prepared
  mutable std::vector<double> theta;
  mutable double theta_Lg = -1, theta_Lr = -1, theta_tmax = -1;
};

SigmaBound make_sigma_bound(const LinearDjdsModel& model,
                            const StabilityCertificate& cert, const KlEnvelope& env,
                            const OperatingRegion& region,
                            const QuantizedInputSet& inputs,
                            const HistorySegment& zeta_s, double dq);

double sigma_hat(const SigmaBound& bound, double Lg, double Lr, double t);
double sigma(const SigmaBound& bound, double Lg, double Lr, double t);

double compute_Z(const LinearDjdsModel& model, const AbstractionParams& params,
                 const SimConfig& cfg);
McEstimate compute_Z_tilde(const LinearDjdsModel& model, const AbstractionParams& params,
                           const SimConfig& cfg, std::size_t trials);

struct PrecisionBudget {
  double epsilon = 0;
  double quant_term = 0;  // (gamma(eta))^{1/k}
  double total = 0;
  int k = 2;
};

enum class PrecisionMode { noiseless, stochastic };

// itemized terms of the defining inequality at the returned epsilon
struct EpsilonPlan {
  bool feasible = false;
  PrecisionBudget budget;
  double self_coeff = 0;   // a in a*eps: (beta_tilde(eps^k, h))^{1/k} = a * eps
  double sigma_term = 0;   // (sigma((N+1)h))^{1/k}, zero in stochastic mode
  double tail_term = 0;    // (beta_tilde(Z, N h))^{1/k}
  double Z = 0;
  double Z_stderr = 0;     // stochastic mode only
  std::string obstruction; // set when infeasible
  double lhs(double eps) const;  // a*eps + sigma_term + tail_term
};

EpsilonPlan min_epsilon(const LinearDjdsModel& model, const AbstractionParams& params,
                        const SigmaBound& bound, PrecisionMode mode,
                        const SimConfig& cfg, std::size_t trials = 1000,
                        double Z_override = -1);

std::optional<std::size_t> min_horizon(const LinearDjdsModel& model,
                                       AbstractionParams params,
                                       const SigmaBound& bound, double epsilon,
                                       PrecisionMode mode, const SimConfig& cfg,
                                       std::size_t N_max = 64);

HistorySegment output_map(std::uint64_t index, const LinearDjdsModel& model,
                          const AbstractionParams& params, const SimConfig& cfg);

// Depth-first sweep over all |inputs|^N words, one short integration per tree
// edge; the visitor sees leaves in ascending index order.
void traverse_outputs(
    const LinearDjdsModel& model, const AbstractionParams& params, const SimConfig& cfg,
    const std::function<void(std::uint64_t, const HistorySegment&)>& visit);

void write_manifest(const std::string& path, const AbstractionParams& params,
                    const PrecisionBudget& budget, std::uint64_t model_hash);

} // namespace djds

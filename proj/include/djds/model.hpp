#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "djds/linalg.hpp"

namespace djds {

using Vec = std::vector<double>;

// Linear delayed jump-diffusion system
//   dx = (A1 x + A2 x(t-tau1) + B u) dt
//      + sum_i (G_i x + Gbar_i x(t-tau2)) dW_i
//      + sum_i (R_i x + Rbar_i x(t-tau3)) dP_i,   P_i Poisson(lambda_i)
struct LinearDjdsModel {
  std::size_t n = 0, m = 0;
  Matrix A1, A2, B;
  std::vector<Matrix> G, Gbar;    // r_bar diffusion channels
  std::vector<Matrix> R, Rbar;    // r_tilde jump channels
  Vec lambda;                     // jump rates, size r_tilde
  double tau1 = 0, tau2 = 0, tau3 = 0;

  double tau() const { return std::max(tau1, std::max(tau2, tau3)); }
  double min_positive_delay() const;
  void validate() const;  // throws std::invalid_argument on shape errors
  std::uint64_t hash() const;
};

struct Box {
  Vec lo, hi;
};

struct InputSpace {
  std::vector<Box> boxes;          // exactly one of boxes / explicit_points set
  std::vector<Vec> explicit_points;

  bool is_explicit() const { return !explicit_points.empty(); }
  // min over boxes & coordinates of (hi - lo)
  double span() const;
};

struct QuantizedInputSet {
  double eta = 0;                  // 0 for explicit point sets
  std::vector<Vec> points;
  std::size_t size() const { return points.size(); }
  double sup_norm() const;         // max Euclidean norm over points
};

// Sampled function on [-tau, 0] -> R^n, linear interpolation between nodes.
struct HistorySegment {
  double grid_step = 0;
  std::size_t n = 0;
  Vec values;                      // samples * n, values[j*n + i] = x_i(-tau + j*dt)

  std::size_t samples() const { return n ? values.size() / n : 0; }
  double tau() const { return samples() ? grid_step * double(samples() - 1) : 0.0; }
  static HistorySegment constant(const Vec& x, double tau, double dt);
  const double* node(std::size_t j) const { return values.data() + j * n; }
  Vec eval(double theta) const;    // theta in [-tau, 0]
  double sup_norm() const;         // max over grid nodes of Euclidean norm
  HistorySegment resampled(double new_dt) const;
};

struct OperatingRegion {
  Vec lo, hi;
  double diameter() const;         // Euclidean diameter of the box
};

QuantizedInputSet quantize(const InputSpace& space, double eta);

struct LipschitzConstants {
  double Lf, Lu, Lg, Lr;
};
LipschitzConstants lipschitz_constants(const LinearDjdsModel& model);

double sup_distance(const HistorySegment& a, const HistorySegment& b);

// Model file: [model] / [input] / [region] sections, see README.
struct ModelFile {
  LinearDjdsModel model;
  InputSpace input;
  std::optional<OperatingRegion> region;
};
ModelFile parse_model_file(const std::string& path);  // throws std::runtime_error

} // namespace djds

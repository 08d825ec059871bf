#include "djds/kernels.hpp"

#include <atomic>

namespace djds::kernels {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_acc_scalar(const double* M, std::size_t rows, std::size_t cols,
                       const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] += dot_scalar(M + r * cols, x, cols);
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

#if defined(DJDS_HAVE_AVX2)
double dot_avx2(const double*, const double*, std::size_t);
void axpy_avx2(double, const double*, double*, std::size_t);
void matvec_acc_avx2(const double*, std::size_t, std::size_t, const double*, double*);
double sqdist_avx2(const double*, const double*, std::size_t);

static bool cpu_has_avx2() { return __builtin_cpu_supports("avx2"); }
#else
static bool cpu_has_avx2() { return false; }
#endif

static std::atomic<bool> g_force_scalar{false};

bool force_scalar(bool on) { return g_force_scalar.exchange(on); }

bool simd_active() { return cpu_has_avx2() && !g_force_scalar.load(); }

double dot(const double* a, const double* b, std::size_t n) {
#if defined(DJDS_HAVE_AVX2)
  if (simd_active()) return dot_avx2(a, b, n);
#endif
  return dot_scalar(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#if defined(DJDS_HAVE_AVX2)
  if (simd_active()) { axpy_avx2(alpha, x, y, n); return; }
#endif
  axpy_scalar(alpha, x, y, n);
}

void matvec_acc(const double* M, std::size_t rows, std::size_t cols,
                const double* x, double* y) {
#if defined(DJDS_HAVE_AVX2)
  if (simd_active()) { matvec_acc_avx2(M, rows, cols, x, y); return; }
#endif
  matvec_acc_scalar(M, rows, cols, x, y);
}

double sqdist(const double* a, const double* b, std::size_t n) {
#if defined(DJDS_HAVE_AVX2)
  if (simd_active()) return sqdist_avx2(a, b, n);
#endif
  return sqdist_scalar(a, b, n);
}

} // namespace djds::kernels

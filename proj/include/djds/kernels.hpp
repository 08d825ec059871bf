#pragma once
#include <cstddef>

// Low-level dense kernels. Scalar reference implementations always exist;
// on x86-64 with AVX2 the dispatcher swaps in vectorized variants at first use.
namespace djds::kernels {

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
// y += M * x, M row-major (rows x cols)
void matvec_acc(const double* M, std::size_t rows, std::size_t cols,
                const double* x, double* y);
double sqdist(const double* a, const double* b, std::size_t n);

// scalar reference versions, kept callable for equivalence tests
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void matvec_acc_scalar(const double* M, std::size_t rows, std::size_t cols,
                       const double* x, double* y);
double sqdist_scalar(const double* a, const double* b, std::size_t n);

// true if the vectorized path is compiled in and the CPU supports it
bool simd_active();
// tests can force the scalar path; returns previous setting
bool force_scalar(bool on);

} // namespace djds::kernels

#pragma once
#include <cstddef>
#include <vector>

namespace djds {

// Dense row-major matrix, sized for small systems (n <= a few hundred).
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static Matrix identity(std::size_t n);
  bool empty() const { return rows == 0 || cols == 0; }
};

Matrix operator+(const Matrix& x, const Matrix& y);
Matrix operator-(const Matrix& x, const Matrix& y);
Matrix operator*(const Matrix& x, const Matrix& y);
Matrix operator*(double s, const Matrix& x);
Matrix transpose(const Matrix& x);
std::vector<double> matvec(const Matrix& m, const std::vector<double>& v);
double frobenius_norm(const Matrix& x);
bool is_symmetric(const Matrix& x, double tol);

struct EigenResult {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors, matching `values`
  std::size_t sweeps = 0;
};

// Cyclic Jacobi for symmetric matrices. Stops when every off-diagonal entry
// is below 1e-12 * ||M||_F (or after max_sweeps).
EigenResult jacobi_eigen(const Matrix& m, std::size_t max_sweeps = 100);

double min_eigenvalue(const Matrix& sym);
double max_eigenvalue(const Matrix& sym);
// largest singular value, via jacobi on M^T M
double spectral_norm(const Matrix& m);

} // namespace djds

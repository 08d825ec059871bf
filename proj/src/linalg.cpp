#include "djds/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "djds/kernels.hpp"

namespace djds {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

static void check_same_shape(const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw std::invalid_argument("matrix shape mismatch");
}

Matrix operator+(const Matrix& x, const Matrix& y) {
  check_same_shape(x, y);
  Matrix r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

Matrix operator-(const Matrix& x, const Matrix& y) {
  check_same_shape(x, y);
  Matrix r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

Matrix operator*(const Matrix& x, const Matrix& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matrix product shape mismatch");
  Matrix r(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t k = 0; k < x.cols; ++k) {
      double v = x(i, k);
      if (v == 0.0) continue;
      kernels::axpy(v, &y.a[k * y.cols], &r.a[i * r.cols], y.cols);
    }
  return r;
}

Matrix operator*(double s, const Matrix& x) {
  Matrix r = x;
  for (double& v : r.a) v *= s;
  return r;
}

Matrix transpose(const Matrix& x) {
  Matrix r(x.cols, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) r(j, i) = x(i, j);
  return r;
}

std::vector<double> matvec(const Matrix& m, const std::vector<double>& v) {
  if (m.cols != v.size()) throw std::invalid_argument("matvec shape mismatch");
  std::vector<double> r(m.rows, 0.0);
  kernels::matvec_acc(m.a.data(), m.rows, m.cols, v.data(), r.data());
  return r;
}

double frobenius_norm(const Matrix& x) {
  double s = 0.0;
  for (double v : x.a) s += v * v;
  return std::sqrt(s);
}

bool is_symmetric(const Matrix& x, double tol) {
  if (x.rows != x.cols) return false;
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = i + 1; j < x.cols; ++j)
      if (std::fabs(x(i, j) - x(j, i)) > tol) return false;
  return true;
}

EigenResult jacobi_eigen(const Matrix& m, std::size_t max_sweeps) {
  if (m.rows != m.cols) throw std::invalid_argument("jacobi: matrix not square");
  const std::size_t n = m.rows;
  Matrix a = m;
  // symmetrize defensively; callers pass symmetric input
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = v;
    }
  Matrix q = Matrix::identity(n);
  const double thresh = 1e-12 * frobenius_norm(a);

  EigenResult res;
  for (res.sweeps = 0; res.sweeps < max_sweeps; ++res.sweeps) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::fabs(a(i, j)));
    if (off <= thresh) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t qi = p + 1; qi < n; ++qi) {
        double apq = a(p, qi);
        if (std::fabs(apq) <= thresh) continue;
        double theta = (a(qi, qi) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, qi);
          a(k, p) = c * akp - s * akq;
          a(k, qi) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(qi, k);
          a(p, k) = c * apk - s * aqk;
          a(qi, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double qkp = q(k, p), qkq = q(k, qi);
          q(k, p) = c * qkp - s * qkq;
          q(k, qi) = s * qkp + c * qkq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i + 1 < n; ++i) {  // stable selection sort, tiny n
    std::size_t best = i;
    for (std::size_t j = i + 1; j < n; ++j)
      if (a(order[j], order[j]) < a(order[best], order[best])) best = j;
    std::swap(order[i], order[best]);
  }
  res.values.resize(n);
  res.vectors = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    res.values[i] = a(order[i], order[i]);
    for (std::size_t k = 0; k < n; ++k) res.vectors(k, i) = q(k, order[i]);
  }
  return res;
}

double min_eigenvalue(const Matrix& sym) { return jacobi_eigen(sym).values.front(); }
double max_eigenvalue(const Matrix& sym) { return jacobi_eigen(sym).values.back(); }

double spectral_norm(const Matrix& m) {
  if (m.empty()) return 0.0;
  Matrix mtm = transpose(m) * m;
  double lam = max_eigenvalue(mtm);
  return std::sqrt(std::max(0.0, lam));
}

} // namespace djds

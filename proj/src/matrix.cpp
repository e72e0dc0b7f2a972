#include "graphpure/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "graphpure/kernels.hpp"

namespace graphpure {

namespace {
void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string("shape mismatch in ") + what);
}
}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::operator*(const Matrix& other) const {
  if (cols_ != other.rows_) throw std::invalid_argument("shape mismatch in matmul");
  Matrix out(rows_, other.cols_);
  kernels::ops().matmul(data(), other.data(), out.data(), rows_, cols_, other.cols_);
  return out;
}

Matrix Matrix::transpose() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

Matrix Matrix::hadamard(const Matrix& other) const {
  require_same_shape(*this, other, "hadamard");
  Matrix out(rows_, cols_);
  kernels::ops().hadamard(data(), other.data(), out.data(), size());
  return out;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "add");
  kernels::ops().add(data(), other.data(), data(), size());
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "sub");
  kernels::ops().sub(data(), other.data(), data(), size());
  return *this;
}

Matrix& Matrix::operator*=(double alpha) {
  kernels::ops().scale(alpha, data(), size());
  return *this;
}

void Matrix::add_scaled(double alpha, const Matrix& x) {
  require_same_shape(*this, x, "add_scaled");
  kernels::ops().axpy(alpha, x.data(), data(), size());
}

double Matrix::trace() const {
  double s = 0.0;
  const std::size_t n = std::min(rows_, cols_);
  for (std::size_t i = 0; i < n; ++i) s += (*this)(i, i);
  return s;
}

double Matrix::sum() const { return kernels::ops().sum(data(), size()); }
double Matrix::sumsq() const { return kernels::ops().sumsq(data(), size()); }

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

double Matrix::max_abs_diff(const Matrix& other) const {
  require_same_shape(*this, other, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    m = std::max(m, std::fabs(data_[i] - other.data_[i]));
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool Matrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      if (std::fabs((*this)(i, j) - (*this)(j, i)) > tol) return false;
  return true;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::zero_diagonal() {
  const std::size_t n = std::min(rows_, cols_);
  for (std::size_t i = 0; i < n; ++i) (*this)(i, i) = 0.0;
}

Matrix Matrix::symmetrized() const {
  if (rows_ != cols_) throw std::invalid_argument("symmetrized needs a square matrix");
  Matrix out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      out(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
  return out;
}

Matrix relu(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  kernels::ops().relu(m.data(), out.data(), m.size());
  return out;
}

Matrix relu_grad(const Matrix& pre, const Matrix& g) {
  if (!pre.same_shape(g)) throw std::invalid_argument("shape mismatch in relu_grad");
  Matrix out(pre.rows(), pre.cols());
  kernels::ops().relu_grad(pre.data(), g.data(), out.data(), pre.size());
  return out;
}

Matrix pairwise_squared_distances(const Matrix& z) {
  Matrix out(z.rows(), z.rows());
  kernels::ops().pairwise_sqdist(z.data(), z.rows(), z.cols(), out.data());
  return out;
}

std::vector<double> symmetric_eigenvalues(Matrix a, double tol, int max_sweeps) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigenvalues need a square matrix");
  const std::size_t n = a.rows();
  if (n == 0) return {};

  double scale = a.max_abs();
  if (scale == 0.0) return std::vector<double>(n, 0.0);
  const double off_tol = tol * scale;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::fabs(a(i, j)));
    if (off <= off_tol) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= off_tol * 1e-2) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace graphpure

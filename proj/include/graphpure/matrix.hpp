#pragma once

#include <cstddef>
#include <vector>

namespace graphpure {

// Dense row-major matrix of doubles. Arithmetic goes through the
// runtime-dispatched kernel table.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  Matrix operator*(const Matrix& other) const;  // matrix product
  Matrix transpose() const;
  Matrix hadamard(const Matrix& other) const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double alpha);
  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double alpha) { return a *= alpha; }
  friend Matrix operator*(double alpha, Matrix a) { return a *= alpha; }

  // y += alpha * x, shapes must match
  void add_scaled(double alpha, const Matrix& x);

  double trace() const;
  double sum() const;
  double sumsq() const;  // sum of squared entries
  double max_abs() const;
  double max_abs_diff(const Matrix& other) const;

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  bool is_symmetric(double tol = 0.0) const;

  void fill(double v);
  void zero_diagonal();
  // (m + m^T) / 2
  Matrix symmetrized() const;

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

Matrix relu(const Matrix& m);
// g masked by pre > 0
Matrix relu_grad(const Matrix& pre, const Matrix& g);
Matrix pairwise_squared_distances(const Matrix& z);

// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending order.
std::vector<double> symmetric_eigenvalues(Matrix a, double tol = 1e-13, int max_sweeps = 64);

}  // namespace graphpure

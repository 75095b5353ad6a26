#pragma once

#include <cstddef>
#include <vector>

namespace compsim {

using Vector = std::vector<double>;

/// Dense row-major matrix. Sized for systems of at most a few hundred
/// pools; no sparsity, no expression templates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_ && rows_ > 0; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

Matrix transpose(const Matrix& a);
Vector matvec(const Matrix& a, const Vector& x);

double max_abs(const Matrix& a);
double inf_norm(const Matrix& a);  // max absolute row sum
double inf_norm(const Vector& v);
double sum(const Vector& v);

}  // namespace compsim

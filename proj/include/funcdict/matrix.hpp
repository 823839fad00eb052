#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace funcdict {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Small and allocation-simple; every
// linear-algebra routine in the project works on this one type.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return v_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return v_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {v_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {v_.data() + i * cols_, cols_};
  }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  bool all_finite() const;
  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);  // squared Euclidean norm
double norm(std::span<const double> a);

Vector matvec(const Matrix& a, const Vector& x);   // a * x
Vector tmatvec(const Matrix& a, const Vector& y);  // aᵀ * y
Matrix gram(const Matrix& a);                      // aᵀ a
Matrix transpose(const Matrix& a);
double frobenius(const Matrix& a);

}  // namespace funcdict

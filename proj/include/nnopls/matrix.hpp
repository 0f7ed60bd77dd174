#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "nnopls/kernels.hpp"

namespace nnopls {

// Dense row-major matrix of doubles. Small value type; all the heavy loops
// go through the kern:: dispatch layer.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& r : rows) {
      if (r.size() != m.cols_) throw std::invalid_argument("ragged initializer");
      std::size_t j = 0;
      for (double v : r) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  std::vector<double> col(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  void set_col(std::size_t j, const std::vector<double>& c) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
  }

  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o);
    kern::axpy(1.0, o.data(), data(), size());
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o);
    kern::axpy(-1.0, o.data(), data(), size());
    return *this;
  }
  Matrix& operator*=(double a) {
    kern::scale(a, data(), size());
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  double frobenius_norm() const { return std::sqrt(kern::sumsq(data(), size())); }
  double frobenius_sq() const { return kern::sumsq(data(), size()); }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double min_entry() const {
    if (data_.empty()) return 0.0;
    double m = data_[0];
    for (double v : data_) m = std::min(m, v);
    return m;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

private:
  void check_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);

// c = a^T * b without forming the transpose
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// c = a * b^T without forming the transpose
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// y = a * x for a vector x
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

// y = a^T * x
std::vector<double> matvec_t(const Matrix& a, const std::vector<double>& x);

inline double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
  return kern::dot(a.data(), b.data(), a.size());
}

inline double vec_norm(const std::vector<double>& a) {
  return std::sqrt(kern::sumsq(a.data(), a.size()));
}

} // namespace nnopls

#pragma once

// Small dense linear algebra. Matrices here are at most a few hundred
// entries on a side, so everything is plain row-major std::vector storage.

#include <cstddef>
#include <span>
#include <vector>

namespace lco {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transpose() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
std::vector<double> operator*(const Matrix& a, std::span<const double> x);

/// A^T x without forming the transpose.
std::vector<double> transpose_times(const Matrix& a, std::span<const double> x);
/// A A^T.
Matrix gram_rows(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double quadratic_form(const Matrix& h, std::span<const double> v);
double max_abs_diff(const Matrix& a, const Matrix& b);
double asymmetry(const Matrix& a);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column i is the eigenvector of values[i]
};

inline constexpr double kSymmetryTolerance = 1e-10;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// off_tol. Throws InvalidInputError on input asymmetric beyond 1e-10.
SymmetricEigen jacobi_eigen(const Matrix& a, double off_tol = 1e-12);
double min_eigenvalue(const Matrix& h);
double max_eigenvalue(const Matrix& h);

struct PowerIterationResult {
  double eigenvalue = 0.0;
  std::vector<double> eigenvector;
  int iterations = 0;
};

/// Dominant eigenvalue of a symmetric PSD matrix; stops once the Rayleigh
/// quotient changes by less than rel_tol relative.
PowerIterationResult power_iteration(const Matrix& s, double rel_tol = 1e-10, int max_iterations = 100000);

/// Largest singular value of J, via power iteration on J J^T.
double largest_singular_value(const Matrix& j, double rel_tol = 1e-10);

}  // namespace lco

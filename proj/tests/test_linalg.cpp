#include <cmath>

#include "doctest.h"
#include "lco/errors.hpp"
#include "lco/linalg.hpp"
#include "support/oracles.hpp"

using namespace lco;

namespace {

Matrix random_symmetric(oracle::Draw& d, std::size_t n) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = d.normal();
  return a;
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("Jacobi eigenvalues of a 2x2 match the closed form") {
    Matrix a(2, 2);
    a(0, 0) = 2.0;
    a(0, 1) = a(1, 0) = 1.0;
    a(1, 1) = -1.0;
    const SymmetricEigen e = jacobi_eigen(a);
    const double mid = 0.5, rad = std::sqrt(1.5 * 1.5 + 1.0);
    CHECK(e.values[0] == doctest::Approx(mid - rad));
    CHECK(e.values[1] == doctest::Approx(mid + rad));
  }

  TEST_CASE("Jacobi reconstructs random symmetric matrices") {
    oracle::Draw d(51);
    for (int c = 0; c < 50; ++c) {
      const std::size_t n = 1 + d.index(12);
      const Matrix a = random_symmetric(d, n);
      const SymmetricEigen e = jacobi_eigen(a);
      for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);
      const Matrix rebuilt = e.vectors * Matrix::diagonal(e.values) * e.vectors.transpose();
      CHECK(max_abs_diff(rebuilt, a) <= 1e-10);
      CHECK(max_abs_diff(e.vectors.transpose() * e.vectors, Matrix::identity(n)) <= 1e-10);
      double trace = 0, sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        trace += a(i, i);
        sum += e.values[i];
      }
      CHECK(sum == doctest::Approx(trace).scale(1.0));
    }
  }

  TEST_CASE("asymmetric input is rejected") {
    Matrix a(2, 2);
    a(0, 1) = 1.0;
    CHECK_THROWS_AS(jacobi_eigen(a), InvalidInputError);
  }

  TEST_CASE("power iteration agrees with Jacobi on PSD matrices") {
    oracle::Draw d(52);
    for (int c = 0; c < 30; ++c) {
      const std::size_t rows = 1 + d.index(6), cols = 1 + d.index(10);
      Matrix j(rows, cols);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = 0; k < cols; ++k) j(r, k) = d.normal();
      const double top = max_eigenvalue(gram_rows(j));
      CHECK(power_iteration(gram_rows(j)).eigenvalue == doctest::Approx(top).epsilon(1e-8));
      CHECK(largest_singular_value(j) == doctest::Approx(std::sqrt(top)).epsilon(1e-8));
    }
    CHECK(largest_singular_value(Matrix::diagonal(std::vector<double>{3.0, -5.0, 1.0})) == doctest::Approx(5.0));
  }

  TEST_CASE("products and helpers") {
    Matrix a(2, 3);
    a(0, 0) = 1;
    a(0, 2) = 2;
    a(1, 1) = 3;
    const std::vector<double> x{1.0, 1.0, 1.0};
    CHECK((a * x) == std::vector<double>{3.0, 3.0});
    CHECK(transpose_times(a, std::vector<double>{1.0, 2.0}) == std::vector<double>{1.0, 6.0, 2.0});
    CHECK(max_abs_diff(gram_rows(a), a * a.transpose()) == 0.0);
    CHECK(norm2(std::vector<double>{3.0, 4.0}) == doctest::Approx(5.0));
    CHECK(quadratic_form(Matrix::identity(3), x) == doctest::Approx(3.0));
    CHECK(asymmetry(Matrix::identity(2)) == 0.0);
  }
}

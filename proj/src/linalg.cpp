#include "faultloc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace faultloc {

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw Error("matrix product: dimension mismatch");
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

double norm_one(const ComplexMatrix& a) {
  double best = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) sum += std::abs(a(r, c));
    best = std::max(best, sum);
  }
  return best;
}

double norm_inf(const ComplexMatrix& a) {
  double best = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double sum = 0.0;
    for (const Complex& v : a.row(r)) sum += std::abs(v);
    best = std::max(best, sum);
  }
  return best;
}

double max_abs(const ComplexMatrix& a) {
  double best = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (const Complex& v : a.row(r)) best = std::max(best, std::abs(v));
  return best;
}

LuDecomposition::LuDecomposition(ComplexMatrix a) : lu_(std::move(a)) {
  const std::size_t n = lu_.rows();
  if (lu_.cols() != n) throw Error("LU: matrix is not square");
  perm_.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      if (const double v = std::abs(lu_(r, k)); v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) throw SingularMatrixError("LU: matrix is singular");
    if (pivot != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(pivot, c));
      std::swap(perm_[k], perm_[pivot]);
    }
    const Complex inv_pivot = 1.0 / lu_(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      const Complex factor = lu_(r, k) * inv_pivot;
      lu_(r, k) = factor;
      if (factor == Complex{}) continue;
      for (std::size_t c = k + 1; c < n; ++c) lu_(r, c) -= factor * lu_(k, c);
    }
  }
}

std::vector<Complex> LuDecomposition::solve(std::span<const Complex> rhs) const {
  const std::size_t n = lu_.rows();
  if (rhs.size() != n) throw Error("LU solve: right-hand side has wrong length");
  std::vector<Complex> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    Complex sum = rhs[perm_[i]];
    for (std::size_t j = 0; j < i; ++j) sum -= lu_(i, j) * x[j];
    x[i] = sum;
  }
  for (std::size_t i = n; i-- > 0;) {
    Complex sum = x[i];
    for (std::size_t j = i + 1; j < n; ++j) sum -= lu_(i, j) * x[j];
    x[i] = sum / lu_(i, i);
  }
  return x;
}

ComplexMatrix LuDecomposition::inverse() const {
  const std::size_t n = lu_.rows();
  ComplexMatrix inv(n, n);
  std::vector<Complex> unit(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::fill(unit.begin(), unit.end(), Complex{});
    unit[c] = 1.0;
    const auto col = solve(unit);
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  return inv;
}

}  // namespace faultloc

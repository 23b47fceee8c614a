#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "faultloc/types.hpp"

namespace faultloc {

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major complex matrix. Sized for desk-scale networks.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static ComplexMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const Complex> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool operator==(const ComplexMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

/// Maximum absolute column sum.
double norm_one(const ComplexMatrix& a);
/// Maximum absolute row sum.
double norm_inf(const ComplexMatrix& a);
double max_abs(const ComplexMatrix& a);

/// LU factorization with partial pivoting. Throws SingularMatrixError when a
/// pivot falls to exactly zero; conditioning is the caller's concern.
class LuDecomposition {
 public:
  explicit LuDecomposition(ComplexMatrix a);

  std::vector<Complex> solve(std::span<const Complex> rhs) const;
  ComplexMatrix inverse() const;

 private:
  ComplexMatrix lu_;
  std::vector<std::size_t> perm_;
};

}  // namespace faultloc

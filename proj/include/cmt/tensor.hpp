// Minimal row-major matrix used by the network code. Value semantics; all
// heavy products go through the kernels in kernels.hpp.
#pragma once

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmt/kernels.hpp"

namespace cmt {

template <typename T>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(size_t(r) * c, T(0)) {}

  T* row(int i) { return a.data() + size_t(i) * cols; }
  const T* row(int i) const { return a.data() + size_t(i) * cols; }
  T& at(int i, int j) { return a[size_t(i) * cols + j]; }
  T at(int i, int j) const { return a[size_t(i) * cols + j]; }
  size_t size() const { return a.size(); }
  T* data() { return a.data(); }
  const T* data() const { return a.data(); }

  void zero() { std::fill(a.begin(), a.end(), T(0)); }

  bool finite() const {
    for (T v : a)
      if (!std::isfinite(double(v))) return false;
    return true;
  }
};

// C = A * B (optionally accumulating)
template <typename T>
void matmul(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool acc = false) {
  assert(A.cols == B.rows);
  if (C.rows != A.rows || C.cols != B.cols) C = Mat<T>(A.rows, B.cols);
  kern::gemm_nn(A.data(), B.data(), C.data(), A.rows, A.cols, B.cols, acc);
}

// C = A * B^T
template <typename T>
void matmul_nt(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool acc = false) {
  assert(A.cols == B.cols);
  if (C.rows != A.rows || C.cols != B.rows) C = Mat<T>(A.rows, B.rows);
  kern::gemm_nt(A.data(), B.data(), C.data(), A.rows, A.cols, B.rows, acc);
}

// C = A^T * B
template <typename T>
void matmul_tn(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, bool acc = false) {
  assert(A.rows == B.rows);
  if (C.rows != A.cols || C.cols != B.cols) C = Mat<T>(A.cols, B.cols);
  kern::gemm_tn(A.data(), B.data(), C.data(), A.cols, A.rows, B.cols, acc);
}

template <typename T>
void check_finite(const Mat<T>& m, const std::string& what) {
  if (!m.finite()) throw std::runtime_error("non-finite values in " + what);
}

}  // namespace cmt

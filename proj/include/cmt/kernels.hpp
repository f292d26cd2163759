// Hot numeric kernels. Each kernel has an OpenMP-parallel implementation and
// a plain serial reference (kern::ref) kept for testing; the parallel loops
// assign each output element to exactly one thread and keep that element's
// accumulation order fixed, so results are bit-identical at any thread count
// (the nt reference accumulates in dot form and may differ in the last ulp
// under FMA contraction). bench/ compares the two.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cmt::kern {

inline int& thread_count() {
  static int n = 1;
  return n;
}

inline void set_threads(int n) {
  thread_count() = std::max(1, n);
#ifdef _OPENMP
  omp_set_num_threads(thread_count());
#endif
}

inline int threads() { return thread_count(); }

// --- serial references --------------------------------------------------------

namespace ref {

// C[m x n] = A[m x k] * B[k x n]   (+= when acc)
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, int m, int k, int n, bool acc = false) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      T s = acc ? C[size_t(i) * n + j] : T(0);
      for (int p = 0; p < k; ++p) s += A[size_t(i) * k + p] * B[size_t(p) * n + j];
      C[size_t(i) * n + j] = s;
    }
}

// C[m x n] = A[m x k] * B^T, B stored [n x k]
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, int m, int k, int n, bool acc = false) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      T s = acc ? C[size_t(i) * n + j] : T(0);
      for (int p = 0; p < k; ++p) s += A[size_t(i) * k + p] * B[size_t(j) * k + p];
      C[size_t(i) * n + j] = s;
    }
}

// C[m x n] = A^T * B, A stored [k x m], B [k x n]
template <typename T>
void gemm_tn(const T* A, const T* B, T* C, int m, int k, int n, bool acc = false) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      T s = acc ? C[size_t(i) * n + j] : T(0);
      for (int p = 0; p < k; ++p) s += A[size_t(p) * m + i] * B[size_t(p) * n + j];
      C[size_t(i) * n + j] = s;
    }
}

// out[i] = min_j |A_i - B_j|^2 over 3D points; arg stores the minimizer.
inline void nn_sqdist(const double* A, int na, const double* B, int nb, double* out, int* arg) {
  for (int i = 0; i < na; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int bj = 0;
    const double ax = A[3 * i], ay = A[3 * i + 1], az = A[3 * i + 2];
    for (int j = 0; j < nb; ++j) {
      double dx = ax - B[3 * j], dy = ay - B[3 * j + 1], dz = az - B[3 * j + 2];
      double d = dx * dx + dy * dy + dz * dz;
      if (d < best) {
        best = d;
        bj = j;
      }
    }
    out[i] = best;
    if (arg) arg[i] = bj;
  }
}

}  // namespace ref

// --- parallel kernels -----------------------------------------------------------

// Processes four A rows per pass so each streamed B row is reused; every C
// element still accumulates over k in ascending order.
template <typename T>
void gemm_nn(const T* __restrict__ A, const T* __restrict__ B, T* __restrict__ C, int m, int k,
             int n, bool acc = false) {
  const int m4 = m - m % 4;
#pragma omp parallel for schedule(static) if (threads() > 1 && m4 > 4)
  for (int i = 0; i < m4; i += 4) {
    T* __restrict__ c0 = C + size_t(i) * n;
    T* __restrict__ c1 = c0 + n;
    T* __restrict__ c2 = c1 + n;
    T* __restrict__ c3 = c2 + n;
    if (!acc)
      for (int j = 0; j < n; ++j) c0[j] = c1[j] = c2[j] = c3[j] = T(0);
    const T* __restrict__ a0 = A + size_t(i) * k;
    for (int p = 0; p < k; ++p) {
      const T x0 = a0[p], x1 = a0[k + p], x2 = a0[2 * k + p], x3 = a0[3 * k + p];
      const T* __restrict__ brow = B + size_t(p) * n;
      for (int j = 0; j < n; ++j) {
        const T b = brow[j];
        c0[j] += x0 * b;
        c1[j] += x1 * b;
        c2[j] += x2 * b;
        c3[j] += x3 * b;
      }
    }
  }
  for (int i = m4; i < m; ++i) {
    T* __restrict__ crow = C + size_t(i) * n;
    if (!acc)
      for (int j = 0; j < n; ++j) crow[j] = T(0);
    const T* __restrict__ arow = A + size_t(i) * k;
    for (int p = 0; p < k; ++p) {
      const T a = arow[p];
      const T* __restrict__ brow = B + size_t(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
  }
}

// Transposes B into scratch and runs the nn kernel: the dot-product form does
// not vectorize (no FP reassociation), and this keeps the per-element
// accumulation order identical to the reference.
template <typename T>
void gemm_nt(const T* __restrict__ A, const T* __restrict__ B, T* __restrict__ C, int m, int k,
             int n, bool acc = false) {
  static thread_local std::vector<T> scratch;
  scratch.resize(size_t(k) * n);
  for (int j = 0; j < n; ++j)
    for (int p = 0; p < k; ++p) scratch[size_t(p) * n + j] = B[size_t(j) * k + p];
  gemm_nn(A, scratch.data(), C, m, k, n, acc);
}

template <typename T>
void gemm_tn(const T* __restrict__ A, const T* __restrict__ B, T* __restrict__ C, int m, int k,
             int n, bool acc = false) {
  static thread_local std::vector<T> scratch;
  scratch.resize(size_t(m) * k);
  for (int p = 0; p < k; ++p)
    for (int i = 0; i < m; ++i) scratch[size_t(i) * k + p] = A[size_t(p) * m + i];
  gemm_nn(scratch.data(), B, C, m, k, n, acc);
}

inline void nn_sqdist(const double* A, int na, const double* B, int nb, double* out,
                      int* arg = nullptr) {
#pragma omp parallel for schedule(static) if (threads() > 1 && na > 64)
  for (int i = 0; i < na; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int bj = 0;
    const double ax = A[3 * i], ay = A[3 * i + 1], az = A[3 * i + 2];
    for (int j = 0; j < nb; ++j) {
      double dx = ax - B[3 * j], dy = ay - B[3 * j + 1], dz = az - B[3 * j + 2];
      double d = dx * dx + dy * dy + dz * dz;
      if (d < best) {
        best = d;
        bj = j;
      }
    }
    out[i] = best;
    if (arg) arg[i] = bj;
  }
}

}  // namespace cmt::kern

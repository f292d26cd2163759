// Compares the serial reference kernels against the OpenMP implementations at
// training-relevant shapes. Thread count comes from CMT_THREADS (default 1).
#include <benchmark/benchmark.h>

#include <cstdlib>

#include "cmt/kernels.hpp"
#include "cmt/rng.hpp"
#include "cmt/tensor.hpp"

using namespace cmt;

namespace {

template <typename T>
Mat<T> random_mat(int r, int c, uint64_t seed) {
  Rng rng(seed);
  Mat<T> m(r, c);
  for (auto& v : m.a) v = T(rng.normal());
  return m;
}

void bench_gemm_ref(benchmark::State& state) {
  const int m = int(state.range(0)), k = int(state.range(1)), n = int(state.range(2));
  auto A = random_mat<float>(m, k, 1);
  auto B = random_mat<float>(k, n, 2);
  Mat<float> C(m, n);
  for (auto _ : state) {
    kern::ref::gemm_nn(A.data(), B.data(), C.data(), m, k, n);
    benchmark::DoNotOptimize(C.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * 2 * m * k * n);
}

void bench_gemm(benchmark::State& state) {
  const int m = int(state.range(0)), k = int(state.range(1)), n = int(state.range(2));
  auto A = random_mat<float>(m, k, 1);
  auto B = random_mat<float>(k, n, 2);
  Mat<float> C(m, n);
  for (auto _ : state) {
    kern::gemm_nn(A.data(), B.data(), C.data(), m, k, n);
    benchmark::DoNotOptimize(C.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * 2 * m * k * n);
}

void bench_nn_sqdist_ref(benchmark::State& state) {
  const int na = int(state.range(0)), nb = int(state.range(1));
  auto A = random_mat<double>(na, 3, 3);
  auto B = random_mat<double>(nb, 3, 4);
  std::vector<double> d(na);
  for (auto _ : state) {
    kern::ref::nn_sqdist(A.data(), na, B.data(), nb, d.data(), nullptr);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * na * nb);
}

void bench_nn_sqdist(benchmark::State& state) {
  const int na = int(state.range(0)), nb = int(state.range(1));
  auto A = random_mat<double>(na, 3, 3);
  auto B = random_mat<double>(nb, 3, 4);
  std::vector<double> d(na);
  for (auto _ : state) {
    kern::nn_sqdist(A.data(), na, B.data(), nb, d.data(), nullptr);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * na * nb);
}

}  // namespace

// transformer projection, attention block, denoiser shapes
BENCHMARK(bench_gemm_ref)->Args({2560, 128, 384})->Args({640, 512, 128})->Args({40, 32, 40});
BENCHMARK(bench_gemm)->Args({2560, 128, 384})->Args({640, 512, 128})->Args({40, 32, 40});
BENCHMARK(bench_nn_sqdist_ref)->Args({2000, 2000})->Args({512, 512});
BENCHMARK(bench_nn_sqdist)->Args({2000, 2000})->Args({512, 512});

int main(int argc, char** argv) {
  if (const char* t = std::getenv("CMT_THREADS")) kern::set_threads(std::atoi(t));
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  return 0;
}

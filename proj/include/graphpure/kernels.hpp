#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops used by the dense linear algebra layer.
// Every kernel has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant. The active table is chosen at runtime
// and can be forced (tests pin both backends and compare outputs).

namespace graphpure::kernels {

enum class Backend { Scalar, Avx2 };

struct Ops {
  // c (m x n) = a (m x k) * b (k x n), row-major; c is overwritten
  void (*matmul)(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sumsq)(const double* a, std::size_t n);
  void (*relu)(const double* a, double* out, std::size_t n);
  // out = g where pre > 0, else 0
  void (*relu_grad)(const double* pre, const double* g, double* out, std::size_t n);
  // out (n x n) = squared euclidean distances between rows of z (n x d)
  void (*pairwise_sqdist)(const double* z, std::size_t n, std::size_t d, double* out);
};

bool backend_supported(Backend b);
Backend detect_backend();
void set_backend(Backend b);  // throws std::runtime_error if unsupported
Backend active_backend();
const Ops& ops();
std::string backend_name(Backend b);

const Ops& scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif

}  // namespace graphpure::kernels

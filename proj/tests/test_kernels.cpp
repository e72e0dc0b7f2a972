#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "graphpure/kernels.hpp"
#include "graphpure/matrix.hpp"
#include "graphpure/rng.hpp"

using namespace graphpure;
namespace k = graphpure::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * rng.uniform01() - 1.0;
  return v;
}

double rel_diff(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1.0});
  return std::fabs(a - b) / denom;
}

}  // namespace

TEST_CASE("scalar backend is always supported and selectable") {
  CHECK(k::backend_supported(k::Backend::Scalar));
  k::set_backend(k::Backend::Scalar);
  CHECK(k::active_backend() == k::Backend::Scalar);
  k::set_backend(k::detect_backend());
}

TEST_CASE("matmul matches naive triple loop") {
  Rng rng(11, "kernels");
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t m = 1 + rng.below(17), kk = 1 + rng.below(17), n = 1 + rng.below(17);
    const auto a = random_vec(m * kk, rng);
    const auto b = random_vec(kk * n, rng);
    std::vector<double> expect(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < kk; ++p) expect[i * n + j] += a[i * kk + p] * b[p * n + j];

    for (k::Backend backend : {k::Backend::Scalar, k::Backend::Avx2}) {
      if (!k::backend_supported(backend)) continue;
      k::set_backend(backend);
      std::vector<double> c(m * n, -1.0);
      k::ops().matmul(a.data(), b.data(), c.data(), m, kk, n);
      for (std::size_t i = 0; i < m * n; ++i) CHECK(rel_diff(c[i], expect[i]) < 1e-13);
    }
  }
  k::set_backend(k::detect_backend());
}

TEST_CASE("simd and scalar agree on every kernel") {
  if (!k::backend_supported(k::Backend::Avx2)) {
    MESSAGE("avx2 unavailable, equivalence trivially satisfied");
    return;
  }
  const k::Ops& sc = k::scalar_ops();
  const k::Ops& vx = k::avx2_ops();
  Rng rng(7, "kernels-equiv");

  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + rng.below(300);
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);

    std::vector<double> r1(n), r2(n);
    sc.add(a.data(), b.data(), r1.data(), n);
    vx.add(a.data(), b.data(), r2.data(), n);
    CHECK(r1 == r2);

    sc.sub(a.data(), b.data(), r1.data(), n);
    vx.sub(a.data(), b.data(), r2.data(), n);
    CHECK(r1 == r2);

    sc.hadamard(a.data(), b.data(), r1.data(), n);
    vx.hadamard(a.data(), b.data(), r2.data(), n);
    CHECK(r1 == r2);

    r1 = a;
    r2 = a;
    sc.axpy(0.37, b.data(), r1.data(), n);
    vx.axpy(0.37, b.data(), r2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_diff(r1[i], r2[i]) < 1e-15);

    r1 = a;
    r2 = a;
    sc.scale(-1.7, r1.data(), n);
    vx.scale(-1.7, r2.data(), n);
    CHECK(r1 == r2);

    CHECK(rel_diff(sc.dot(a.data(), b.data(), n), vx.dot(a.data(), b.data(), n)) < 1e-13);
    CHECK(rel_diff(sc.sum(a.data(), n), vx.sum(a.data(), n)) < 1e-13);
    CHECK(rel_diff(sc.sumsq(a.data(), n), vx.sumsq(a.data(), n)) < 1e-13);

    sc.relu(a.data(), r1.data(), n);
    vx.relu(a.data(), r2.data(), n);
    CHECK(r1 == r2);

    sc.relu_grad(a.data(), b.data(), r1.data(), n);
    vx.relu_grad(a.data(), b.data(), r2.data(), n);
    CHECK(r1 == r2);
  }

  for (int rep = 0; rep < 6; ++rep) {
    const std::size_t n = 2 + rng.below(40), d = 1 + rng.below(33);
    const auto z = random_vec(n * d, rng);
    std::vector<double> d1(n * n), d2(n * n);
    sc.pairwise_sqdist(z.data(), n, d, d1.data());
    vx.pairwise_sqdist(z.data(), n, d, d2.data());
    for (std::size_t i = 0; i < n * n; ++i) CHECK(rel_diff(d1[i], d2[i]) < 1e-13);

    const std::size_t m = 1 + rng.below(30), kk = 1 + rng.below(30), nn = 1 + rng.below(30);
    const auto a = random_vec(m * kk, rng);
    const auto b = random_vec(kk * nn, rng);
    std::vector<double> c1(m * nn), c2(m * nn);
    sc.matmul(a.data(), b.data(), c1.data(), m, kk, nn);
    vx.matmul(a.data(), b.data(), c2.data(), m, kk, nn);
    for (std::size_t i = 0; i < m * nn; ++i) CHECK(rel_diff(c1[i], c2[i]) < 1e-13);
  }
}

TEST_CASE("matrix helpers: transpose, symmetrize, eigenvalues") {
  Rng rng(3, "matrix");
  Matrix a(4, 4);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform01();
  const Matrix s = a.symmetrized();
  CHECK(s.is_symmetric(0.0));
  CHECK(a.transpose().transpose().max_abs_diff(a) == 0.0);

  // eigenvalues of a known matrix: [[2,1],[1,2]] -> {1, 3}
  Matrix m(2, 2);
  m(0, 0) = 2;
  m(0, 1) = 1;
  m(1, 0) = 1;
  m(1, 1) = 2;
  const auto eig = symmetric_eigenvalues(m);
  CHECK(std::fabs(eig[0] - 1.0) < 1e-12);
  CHECK(std::fabs(eig[1] - 3.0) < 1e-12);

  // spectrum of a random symmetric matrix: trace and frobenius consistency
  Matrix r(8, 8);
  for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = 2.0 * rng.uniform01() - 1.0;
  const Matrix rs = r.symmetrized();
  const auto ev = symmetric_eigenvalues(rs);
  double tr = 0.0, fr = 0.0;
  for (double v : ev) {
    tr += v;
    fr += v * v;
  }
  CHECK(std::fabs(tr - rs.trace()) < 1e-10);
  CHECK(std::fabs(fr - rs.sumsq()) < 1e-10);
}

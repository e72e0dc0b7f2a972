#include "graphpure/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace graphpure::kernels {

namespace {
std::atomic<const Ops*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::Scalar};

const Ops& table_for(Backend b) {
#if defined(__x86_64__) || defined(_M_X64)
  if (b == Backend::Avx2) return avx2_ops();
#endif
  return scalar_ops();
}
}  // namespace

bool backend_supported(Backend b) {
  if (b == Backend::Scalar) return true;
#if defined(__x86_64__) || defined(_M_X64)
  if (b == Backend::Avx2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#endif
  return false;
}

Backend detect_backend() {
  return backend_supported(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

void set_backend(Backend b) {
  if (!backend_supported(b))
    throw std::runtime_error("kernel backend not supported on this cpu: " + backend_name(b));
  g_backend.store(b);
  g_active.store(&table_for(b));
}

Backend active_backend() {
  if (g_active.load() == nullptr) set_backend(detect_backend());
  return g_backend.load();
}

const Ops& ops() {
  const Ops* t = g_active.load();
  if (t == nullptr) {
    set_backend(detect_backend());
    t = g_active.load();
  }
  return *t;
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

}  // namespace graphpure::kernels

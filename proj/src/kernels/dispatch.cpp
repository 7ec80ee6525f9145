#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "backends.hpp"

namespace ecgbal::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(ECGBAL_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  Backend chosen = cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
  if (const char* env = std::getenv("ECGBAL_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") chosen = Backend::Scalar;
    else if (want == "avx2" && backend_available(Backend::Avx2)) chosen = Backend::Avx2;
  }
  return chosen;
}

std::atomic<const Table*>& active_table() {
  static std::atomic<const Table*> t{&table(initial_backend())};
  return t;
}

std::atomic<Backend>& active_tag() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("kernel operands differ in length");
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  if (b == Backend::Scalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

const Table& table(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument("kernel backend '" + std::string(backend_name(b)) +
                                "' is not available on this machine");
  }
#if defined(ECGBAL_WITH_AVX2)
  if (b == Backend::Avx2) return avx2::table();
#endif
  return scalar::table();
}

Backend active_backend() { return active_tag().load(std::memory_order_relaxed); }

void force_backend(Backend b) {
  active_table().store(&table(b));
  active_tag().store(b);
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  return active_table().load(std::memory_order_relaxed)->dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> x) {
  return active_table().load(std::memory_order_relaxed)->sum_squares(x.data(), x.size());
}

double sum_abs(std::span<const double> x) {
  return active_table().load(std::memory_order_relaxed)->sum_abs(x.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_sizes(x.size(), y.size());
  active_table().load(std::memory_order_relaxed)->axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<const double> x, std::span<double> out) {
  check_sizes(x.size(), out.size());
  active_table().load(std::memory_order_relaxed)->scale(alpha, x.data(), out.data(), x.size());
}

void lerp_clamped(std::span<const double> a, std::span<const double> b, double t,
                  std::span<double> out) {
  check_sizes(a.size(), b.size());
  check_sizes(a.size(), out.size());
  active_table().load(std::memory_order_relaxed)->lerp_clamped(a.data(), b.data(), t, out.data(),
                                                               a.size());
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamCoefficients& c) {
  check_sizes(params.size(), grads.size());
  check_sizes(params.size(), m.size());
  check_sizes(params.size(), v.size());
  active_table().load(std::memory_order_relaxed)->adam_update(params.data(), grads.data(),
                                                              m.data(), v.data(), c,
                                                              params.size());
}

}  // namespace ecgbal::kernels

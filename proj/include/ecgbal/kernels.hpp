#pragma once

// Data-parallel inner loops shared by the equalizer and the trainer.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2 variant. The backend is chosen once at startup from CPUID and can be
// overridden with ECGBAL_KERNELS=scalar|avx2 or force_backend().
//
// Elementwise kernels (axpy, scale, lerp_clamped, adam_update) round
// identically on every backend. Reductions (dot, sum_squares, sum_abs) differ
// only in summation order, so backends agree to a few ulps of the sum of
// absolute terms. Within one backend every kernel is deterministic.

#include <cstddef>
#include <span>
#include <string_view>

namespace ecgbal::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
// Not safe to call while other threads are running kernels.
void force_backend(Backend b);

double dot(std::span<const double> a, std::span<const double> b);
double sum_squares(std::span<const double> x);
double sum_abs(std::span<const double> x);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// out = alpha * x (out may alias x)
void scale(double alpha, std::span<const double> x, std::span<double> out);
// out = (1 - t) * a + t * b, clamped to [min(a, b), max(a, b)] elementwise.
void lerp_clamped(std::span<const double> a, std::span<const double> b, double t,
                  std::span<double> out);

struct AdamCoefficients {
  double step_size;     // lr * sqrt(1 - beta2^t) / (1 - beta1^t)
  double beta1;
  double beta2;
  double epsilon_hat;   // epsilon * sqrt(1 - beta2^t)
};

// m = b1 m + (1 - b1) g ; v = b2 v + (1 - b2) g^2 ; p -= step * m / (sqrt(v) + eps_hat)
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamCoefficients& c);

// Direct access to one backend, bypassing dispatch. Used by equivalence tests.
struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum_squares)(const double*, std::size_t);
  double (*sum_abs)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, const double*, double*, std::size_t);
  void (*lerp_clamped)(const double*, const double*, double, double*, std::size_t);
  void (*adam_update)(double*, const double*, double*, double*, const AdamCoefficients&,
                      std::size_t);
};

// Throws std::invalid_argument if the backend was not compiled in or the CPU lacks it.
const Table& table(Backend b);

}  // namespace ecgbal::kernels

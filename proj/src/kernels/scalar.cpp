#include <algorithm>
#include <cmath>

#include "backends.hpp"

namespace ecgbal::kernels::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_squares(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_abs(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

void lerp_clamped(const double* a, const double* b, double t, double* out, std::size_t n) {
  const double s = 1.0 - t;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = s * a[i] + t * b[i];
    const double lo = std::min(a[i], b[i]);
    const double hi = std::max(a[i], b[i]);
    out[i] = std::min(std::max(v, lo), hi);
  }
}

void adam_update(double* p, const double* g, double* m, double* v, const AdamCoefficients& c,
                 std::size_t n) {
  const double one_m_b1 = 1.0 - c.beta1;
  const double one_m_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = c.beta1 * m[i] + one_m_b1 * g[i];
    v[i] = c.beta2 * v[i] + one_m_b2 * (g[i] * g[i]);
    p[i] -= c.step_size * m[i] / (std::sqrt(v[i]) + c.epsilon_hat);
  }
}

}  // namespace

const Table& table() {
  static const Table t{dot, sum_squares, sum_abs, axpy, scale, lerp_clamped, adam_update};
  return t;
}

}  // namespace ecgbal::kernels::scalar

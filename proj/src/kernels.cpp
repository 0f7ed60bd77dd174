#include "nnopls/kernels.hpp"

#include <atomic>

namespace nnopls::kern {

namespace detail {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double sumsq_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void mul_scalar(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void div_scalar(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] / y[i];
}

void clamp_floor_scalar(double f, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] < f ? f : x[i];
}

#ifdef NNOPLS_HAVE_AVX2
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
double dot_avx2(const double* x, const double* y, std::size_t n);
void scale_avx2(double a, double* x, std::size_t n);
double sum_avx2(const double* x, std::size_t n);
double sumsq_avx2(const double* x, std::size_t n);
void mul_avx2(const double* x, const double* y, double* out, std::size_t n);
void div_avx2(const double* x, const double* y, double* out, std::size_t n);
void clamp_floor_avx2(double f, double* x, std::size_t n);
#endif

bool cpu_has_avx2() {
#if defined(NNOPLS_HAVE_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<bool> scalar_forced{false};

bool use_avx2() {
  static const bool available = cpu_has_avx2();
  return available && !scalar_forced.load(std::memory_order_relaxed);
}

} // namespace detail

Isa active_isa() { return detail::use_avx2() ? Isa::avx2 : Isa::scalar; }

void force_scalar(bool on) {
  detail::scalar_forced.store(on, std::memory_order_relaxed);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
#ifdef NNOPLS_HAVE_AVX2
  if (detail::use_avx2()) return detail::axpy_avx2(a, x, y, n);
#endif
  detail::axpy_scalar(a, x, y, n);
}

double dot(const double* x, const double* y, std::size_t n) {
#ifdef NNOPLS_HAVE_AVX2
  if (detail::use_avx2()) return detail::dot_avx2(x, y, n);
#endif
  return detail::dot_scalar(x, y, n);
}

void scale(double a, double* x, std::size_t n) {
#ifdef NNOPLS_HAVE_AVX2
  if (detail::use_avx2()) return detail::scale_avx2(a, x, n);
#endif
  detail::scale_scalar(a, x, n);
}

double sum(const double* x, std::size_t n) {
#ifdef NNOPLS_HAVE_AVX2
  if (detail::use_avx2()) return detail::sum_avx2(x, n);
#endif
  return detail::sum_scalar(x, n);
}

double sumsq(const double* x, std::size_t n) {
#ifdef NNOPLS_HAVE_AVX2
  if (detail::use_avx2()) return detail::sumsq_avx2(x, n);
#endif
  return detail::sumsq_scalar(x, n);
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
#ifdef NNOPLS_HAVE_AVX2
  if (detail::use_avx2()) return detail::mul_avx2(x, y, out, n);
#endif
  detail::mul_scalar(x, y, out, n);
}

void div(const double* x, const double* y, double* out, std::size_t n) {
#ifdef NNOPLS_HAVE_AVX2
  if (detail::use_avx2()) return detail::div_avx2(x, y, out, n);
#endif
  detail::div_scalar(x, y, out, n);
}

void clamp_floor(double f, double* x, std::size_t n) {
#ifdef NNOPLS_HAVE_AVX2
  if (detail::use_avx2()) return detail::clamp_floor_avx2(f, x, n);
#endif
  detail::clamp_floor_scalar(f, x, n);
}

} // namespace nnopls::kern

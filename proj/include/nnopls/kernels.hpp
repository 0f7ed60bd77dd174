#pragma once

#include <cstddef>

// Runtime-dispatched arithmetic kernels. Every entry point has a scalar
// reference implementation; on x86 with AVX2+FMA an accelerated variant is
// selected at startup. force_scalar() pins the scalar path (used by the
// equivalence tests).

namespace nnopls::kern {

enum class Isa { scalar, avx2 };

Isa active_isa();
void force_scalar(bool on);

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// sum_i x[i] * y[i]
double dot(const double* x, const double* y, std::size_t n);

// x[i] *= a
void scale(double a, double* x, std::size_t n);

double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);

// out[i] = x[i] * y[i]
void mul(const double* x, const double* y, double* out, std::size_t n);

// out[i] = x[i] / y[i]
void div(const double* x, const double* y, double* out, std::size_t n);

// x[i] = max(floor_value, x[i])
void clamp_floor(double floor_value, double* x, std::size_t n);

} // namespace nnopls::kern

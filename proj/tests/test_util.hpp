#pragma once

#include <random>

#include "nnopls/dataset.hpp"
#include "nnopls/matrix.hpp"

namespace testutil {

using nnopls::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

// SPD with a bounded condition number: A = B B^T + c I.
inline Matrix random_spd(std::mt19937_64& rng, std::size_t n, double jitter = 0.5) {
  Matrix b = random_matrix(rng, n, n);
  Matrix a = nnopls::matmul_nt(b, b);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += jitter;
  return a;
}

inline nnopls::RawDataset random_dataset(std::mt19937_64& rng, std::size_t n,
                                         std::size_t m, std::size_t samples) {
  nnopls::RawDataset d;
  d.inputs = random_matrix(rng, n, samples, 0.0, 1.0);
  d.targets = random_matrix(rng, m, samples);
  return d;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).max_abs();
}

} // namespace testutil

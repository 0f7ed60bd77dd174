#pragma once

#include <stdexcept>
#include <vector>

#include "nnopls/matrix.hpp"

namespace nnopls {

struct NnlsProblem {
  Matrix a; // p x q design
  Matrix b; // p x r right-hand sides
};

struct NnlsSolution {
  Matrix x; // q x r, >= 0 with exact zeros on the active set
  double kkt_residual = 0.0;
  int iterations = 0;
  std::vector<std::size_t> dropped_columns; // all-zero design columns
};

struct NnlsFailure : std::runtime_error {
  NnlsFailure(std::string msg, NnlsSolution best_iterate)
      : std::runtime_error(std::move(msg)), best(std::move(best_iterate)) {}
  NnlsSolution best;
};

// Scale-free default certificate tolerance.
double default_kkt_tolerance(const Matrix& atb);

// Block principal pivoting on the normal equations a^T a x = a^T b, with a
// single-variable exchange backup rule. Columns of b are independent solves
// sharing the factorizations' inputs.
NnlsSolution nnls_solve(const NnlsProblem& problem, double kkt_tolerance = -1.0);

// Normal-equation entry point used by the U-step: ata = a^T a (q x q),
// atb = a^T b for one right-hand side. max_pivot_iterations <= 0 means 5q.
std::vector<double> nnls_solve_normal(const Matrix& ata, const std::vector<double>& atb,
                                      double kkt_tolerance, int max_pivot_iterations,
                                      int* iterations_out = nullptr);

} // namespace nnopls

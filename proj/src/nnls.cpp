#include "nnopls/nnls.hpp"

#include <algorithm>
#include <cmath>

#include "nnopls/linalg.hpp"

namespace nnopls {

double default_kkt_tolerance(const Matrix& atb) {
  return 1e-10 * std::max(1.0, atb.max_abs());
}

namespace {

// Solve the restricted normal equations on the free set; ridge fallback when
// the restricted matrix is numerically rank-deficient.
std::vector<double> solve_restricted(const Matrix& ata, const std::vector<double>& atb,
                                     const std::vector<std::size_t>& free_set) {
  const std::size_t f = free_set.size();
  Matrix sub(f, f);
  std::vector<double> rhs(f);
  for (std::size_t i = 0; i < f; ++i) {
    rhs[i] = atb[free_set[i]];
    for (std::size_t j = 0; j < f; ++j) sub(i, j) = ata(free_set[i], free_set[j]);
  }
  auto l = cholesky(sub);
  if (!l) {
    const double ridge = 1e-12 * ata.trace() / double(ata.rows());
    for (std::size_t i = 0; i < f; ++i) sub(i, i) += ridge;
    l = cholesky(sub);
    if (!l) throw std::runtime_error("nnls: restricted system not factorizable");
  }
  return cholesky_solve(*l, rhs);
}

} // namespace

std::vector<double> nnls_solve_normal(const Matrix& ata, const std::vector<double>& atb,
                                      double kkt_tolerance, int max_pivot_iterations,
                                      int* iterations_out) {
  const std::size_t q = ata.rows();
  if (max_pivot_iterations <= 0) max_pivot_iterations = 5 * static_cast<int>(q) + 10;
  const double tol = kkt_tolerance;

  // free_mask[i]: variable solved for; otherwise pinned at zero with dual y.
  std::vector<bool> free_mask(q, false);
  std::vector<double> x(q, 0.0), y(q, 0.0);

  std::size_t best_infeasible = q + 1;
  int backup_budget = 3;
  int iter = 0;
  std::vector<double> best_x(q, 0.0);

  for (; iter < max_pivot_iterations; ++iter) {
    std::vector<std::size_t> free_set;
    for (std::size_t i = 0; i < q; ++i)
      if (free_mask[i]) free_set.push_back(i);

    std::fill(x.begin(), x.end(), 0.0);
    if (!free_set.empty()) {
      std::vector<double> xf = solve_restricted(ata, atb, free_set);
      for (std::size_t i = 0; i < free_set.size(); ++i) x[free_set[i]] = xf[i];
    }
    for (std::size_t i = 0; i < q; ++i) {
      if (free_mask[i]) {
        y[i] = 0.0;
      } else {
        double s = -atb[i];
        for (std::size_t k = 0; k < q; ++k)
          if (free_mask[k] && x[k] != 0.0) s += ata(i, k) * x[k];
        y[i] = s;
      }
    }

    std::vector<std::size_t> violating;
    for (std::size_t i = 0; i < q; ++i) {
      if (free_mask[i] && x[i] < -tol) violating.push_back(i);
      else if (!free_mask[i] && y[i] < -tol) violating.push_back(i);
    }

    if (violating.empty()) {
      for (std::size_t i = 0; i < q; ++i)
        if (!free_mask[i] || x[i] < 0.0) x[i] = 0.0;
      if (iterations_out) *iterations_out = iter + 1;
      return x;
    }

    best_x = x;
    for (std::size_t i = 0; i < q; ++i)
      if (best_x[i] < 0.0) best_x[i] = 0.0;

    if (violating.size() < best_infeasible) {
      best_infeasible = violating.size();
      backup_budget = 3;
      for (std::size_t i : violating) free_mask[i] = !free_mask[i];
    } else if (backup_budget > 0) {
      --backup_budget;
      for (std::size_t i : violating) free_mask[i] = !free_mask[i];
    } else {
      // Murty's single-variable rule: flip only the largest-index violator.
      free_mask[violating.back()] = !free_mask[violating.back()];
    }
  }

  NnlsSolution best;
  best.x = Matrix(q, 1);
  for (std::size_t i = 0; i < q; ++i) best.x(i, 0) = best_x[i];
  best.iterations = iter;
  throw NnlsFailure("nnls: no termination after " + std::to_string(max_pivot_iterations) +
                        " pivot iterations",
                    std::move(best));
}

NnlsSolution nnls_solve(const NnlsProblem& problem, double kkt_tolerance) {
  const Matrix& a = problem.a;
  const Matrix& b = problem.b;
  if (a.rows() != b.rows()) throw std::invalid_argument("nnls: a and b row mismatch");
  if (a.rows() < 1 || a.cols() < 1 || b.cols() < 1)
    throw std::invalid_argument("nnls: empty problem");

  NnlsSolution sol;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double nrm = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) nrm += a(i, j) * a(i, j);
    if (nrm == 0.0)
      sol.dropped_columns.push_back(j);
    else
      keep.push_back(j);
  }

  Matrix ad(a.rows(), keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) ad(i, j) = a(i, keep[j]);

  Matrix ata = matmul_tn(ad, ad);
  Matrix atb = matmul_tn(ad, b);
  if (kkt_tolerance < 0.0) kkt_tolerance = default_kkt_tolerance(atb);

  sol.x = Matrix(a.cols(), b.cols());
  int total_iters = 0;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    int iters = 0;
    std::vector<double> xc;
    if (!keep.empty())
      xc = nnls_solve_normal(ata, atb.col(c), kkt_tolerance, 0, &iters);
    total_iters += iters;
    for (std::size_t j = 0; j < keep.size(); ++j) sol.x(keep[j], c) = xc[j];
  }
  sol.iterations = total_iters;

  // KKT certificate: w = a^T(b - a x); w <= tol at zeros, |w| <= tol at
  // positive coordinates.
  Matrix res = b - matmul(a, sol.x);
  Matrix grad = matmul_tn(a, res);
  double worst = 0.0;
  for (std::size_t j = 0; j < sol.x.cols(); ++j)
    for (std::size_t i = 0; i < sol.x.rows(); ++i) {
      const double g = grad(i, j);
      worst = std::max(worst, sol.x(i, j) > 0.0 ? std::abs(g) : g);
    }
  sol.kkt_residual = std::max(0.0, worst);
  return sol;
}

} // namespace nnopls

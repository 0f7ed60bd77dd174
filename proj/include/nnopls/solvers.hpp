#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nnopls/dataset.hpp"
#include "nnopls/linalg.hpp"
#include "nnopls/matrix.hpp"

namespace nnopls {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  std::size_t n_f = 1;
  double delta = -1.0; // < 0: per-method default
  int max_outer_iterations = 1000;
  double epsilon_floor = 1e-16; // NMF-OPLS
  double ridge_tau = -1.0;      // < 0: 1e-8 * trace(cxx) / n
  int popls_restarts = 4;
  unsigned long seed = 0;
  double kkt_tolerance = -1.0; // < 0: scale-free default
  bool nonneg = true;          // disabling reduces nopls to plain alternating OPLS
};

enum class StopReason { tolerance, max_iterations };

struct SolverReport {
  int outer_iterations = 0;
  std::vector<double> loss_trajectory;
  std::vector<double> eigenvalue_trace_trajectory;
  StopReason stop_reason = StopReason::tolerance;
  double wall_time = 0.0;
  bool unordered = false;
  bool convergence_warning = false;
  std::vector<std::size_t> degenerate_columns;
  std::size_t filters_extracted = 0;
};

struct SolverResult {
  Matrix u; // n x n_f
  Matrix w; // m x n_f
  SolverReport report;
};

// ---- building blocks ------------------------------------------------------

// Eigendecomposition W-step: top min(m, n_f) eigenpairs of
// (U^T Cxy)^T (U^T Cxy). Only an m x m problem is decomposed.
EigResult w_step(const CovarianceSet& cov, const Matrix& u);

// Orthogonal Procrustes solution W = Q P^T from the thin SVD P D Q^T of
// m_matrix (n_f x m).
Matrix procrustes_w(const Matrix& m_matrix);

// Non-negative U-step: minimizes ||Y - W U^T X||_F^2 over U >= 0 for W with
// orthonormal columns; n_f independent NNLS solves sharing Cxx.
Matrix u_step(const CovarianceSet& cov, const Matrix& w, double kkt_tolerance = -1.0);

// Unit-norm unidimensional W-step, w = (u^T Cxy)^T / ||u^T Cxy||.
// Returns empty vector when u^T Cxy = 0 (deflation exhausted).
std::vector<double> unidim_w(const Matrix& cxy, const std::vector<double>& u);

// Schur complement deflation of the cross-covariance.
Matrix schur_deflate(const Matrix& cxy, const std::vector<double>& u);

// NNDSVDa initialization of cxy_bar (elementwise >= 0) into u0 w0^T.
void nndsvd_init(const Matrix& cxy_bar, std::size_t n_f, Matrix& u0, Matrix& w0);

// Rayleigh-style quotient u^T Cxy Cxy^T u / (u^T (Cxx + tau I) u).
double popls_quotient(const Matrix& cxx, const Matrix& cxy, const std::vector<double>& u,
                      double ridge_tau);

// Eq.(1) objective from covariances:
// Tr{Cyy} - 2 Tr{W^T Cxy^T U} + Tr{U^T Cxx U W^T W}.
double loss_from_covariances(const CovarianceSet& cov, const Matrix& u, const Matrix& w);

// Best-achievable Eq.(1) loss for a fixed bank u, with W refit in closed form.
double refit_loss(const CovarianceSet& cov, const Matrix& u, double ridge_tau);

double effective_ridge(const Matrix& cxx, double ridge_tau);

// ---- the five constrained solvers and the unconstrained baseline ----------

SolverResult nopls(const CenteredDataset& d, const SolverConfig& cfg);
SolverResult pnopls(const CenteredDataset& d, const SolverConfig& cfg);
SolverResult defnopls(const CenteredDataset& d, const SolverConfig& cfg);
SolverResult nmf_opls(const RawDataset& raw, const SolverConfig& cfg);
SolverResult popls(const CenteredDataset& d, const SolverConfig& cfg);
SolverResult opls_baseline(const CenteredDataset& d, const SolverConfig& cfg);

// Dispatch by method name ("nopls", "pnopls", "defnopls", "nmf_opls",
// "popls", "opls"). nmf_opls requires the raw dataset.
SolverResult run_solver(const std::string& method, const RawDataset& raw,
                        const CenteredDataset& d, const SolverConfig& cfg);

} // namespace nnopls

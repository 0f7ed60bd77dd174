#include "nnopls/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "nnopls/nnls.hpp"

namespace nnopls {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// Coordinate-vector init: one Kronecker delta per column, placed on the
// n_f rows of Cxy that individually carry the most target energy.
Matrix kronecker_delta_init(const Matrix& cxy, std::size_t n_f) {
  const std::size_t n = cxy.rows();
  std::vector<std::pair<double, std::size_t>> rows(n);
  for (std::size_t i = 0; i < n; ++i)
    rows[i] = {-kern::sumsq(cxy.row(i), cxy.cols()), i};
  std::stable_sort(rows.begin(), rows.end());
  Matrix u(n, n_f);
  for (std::size_t j = 0; j < std::min(n, n_f); ++j) u(rows[j].second, j) = 1.0;
  return u;
}

std::vector<double> column_norms(const Matrix& a) {
  std::vector<double> norms(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) norms[j] += a(i, j) * a(i, j);
  for (double& v : norms) v = std::sqrt(v);
  return norms;
}

void check_orthonormal_columns(const Matrix& w) {
  Matrix g = matmul_tn(w, w);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      // Padded all-zero columns are tolerated; they yield zero filters.
      if (i == j && std::abs(g(i, i)) < 1e-20) continue;
      const double target = i == j ? 1.0 : 0.0;
      if (std::abs(g(i, j) - target) > 1e-8)
        throw SolverError("u_step requires W with orthonormal columns");
    }
}

// Columns beyond the rank of Cxy carry no explanatory power of their own
// (the alternation can park duplicates of earlier columns there); zero any
// column whose removal leaves the refit objective unchanged.
void drop_redundant_columns(const CovarianceSet& cov, Matrix& u, double ridge_tau) {
  double current = refit_loss(cov, u, ridge_tau);
  // A column has to explain more than a 1e-6 share of the target energy to
  // keep its place; below that it is indistinguishable from noise fitting.
  const double slack = 1e-6 * std::max(cov.cyy.trace(), 1e-300);
  for (std::size_t j = u.cols(); j-- > 0;) {
    bool already_zero = true;
    for (std::size_t i = 0; i < u.rows() && already_zero; ++i)
      already_zero = u(i, j) == 0.0;
    if (already_zero) continue;
    Matrix trial = u;
    for (std::size_t i = 0; i < u.rows(); ++i) trial(i, j) = 0.0;
    const double without = refit_loss(cov, trial, ridge_tau);
    if (without <= current + slack) {
      u = std::move(trial);
      current = without;
    }
  }
}

void record_degenerate_columns(const Matrix& u, SolverReport& report) {
  report.degenerate_columns.clear();
  const auto norms = column_norms(u);
  for (std::size_t j = 0; j < norms.size(); ++j)
    if (norms[j] == 0.0) report.degenerate_columns.push_back(j);
}

} // namespace

double effective_ridge(const Matrix& cxx, double ridge_tau) {
  if (ridge_tau >= 0.0) return ridge_tau;
  return 1e-8 * cxx.trace() / double(cxx.rows());
}

double loss_from_covariances(const CovarianceSet& cov, const Matrix& u, const Matrix& w) {
  const Matrix ucxy = matmul_tn(u, cov.cxy);     // n_f x m
  const Matrix cxxu = matmul(cov.cxx, u);        // n x n_f
  const Matrix utcxxu = matmul_tn(u, cxxu);      // n_f x n_f
  const Matrix wtw = matmul_tn(w, w);            // n_f x n_f
  double cross = 0.0;                            // Tr{W^T Cxy^T U} = Tr{(U^T Cxy) W}
  for (std::size_t i = 0; i < ucxy.rows(); ++i)
    for (std::size_t j = 0; j < ucxy.cols(); ++j) cross += ucxy(i, j) * w(j, i);
  double quad = 0.0; // Tr{(U^T Cxx U)(W^T W)}
  for (std::size_t i = 0; i < utcxxu.rows(); ++i)
    for (std::size_t j = 0; j < utcxxu.cols(); ++j) quad += utcxxu(i, j) * wtw(j, i);
  return cov.cyy.trace() - 2.0 * cross + quad;
}

double refit_loss(const CovarianceSet& cov, const Matrix& u, double ridge_tau) {
  std::vector<std::size_t> keep;
  const auto norms = column_norms(u);
  for (std::size_t j = 0; j < u.cols(); ++j)
    if (norms[j] > 0.0) keep.push_back(j);
  if (keep.empty()) return cov.cyy.trace();

  Matrix uk(u.rows(), keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j)
    for (std::size_t i = 0; i < u.rows(); ++i) uk(i, j) = u(i, keep[j]);

  const double tau = effective_ridge(cov.cxx, ridge_tau);
  Matrix g = matmul_tn(uk, matmul(cov.cxx, uk));
  Matrix utu = matmul_tn(uk, uk);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += tau * utu(i, j);

  // Thresholded pseudo-inverse: near-parallel columns make the Gram matrix
  // numerically singular, where a triangular solve can return garbage.
  const EigResult e = sym_eig(g);
  const Matrix m = matmul_tn(cov.cxy, uk); // m x k
  const double thr = 1e-12 * std::max(e.values.empty() ? 0.0 : e.values.front(), 0.0);
  double reduction = 0.0;
  for (std::size_t j = 0; j < e.values.size(); ++j) {
    if (e.values[j] <= thr) continue;
    double proj_sq = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t c = 0; c < m.cols(); ++c) dot += m(i, c) * e.vectors(c, j);
      proj_sq += dot * dot;
    }
    reduction += proj_sq / e.values[j];
  }
  return cov.cyy.trace() - reduction;
}

EigResult w_step(const CovarianceSet& cov, const Matrix& u) {
  const Matrix m_matrix = matmul_tn(u, cov.cxy); // n_f x m
  if (m_matrix.max_abs() == 0.0)
    throw SolverError("w_step: U^T Cxy is identically zero (degenerate projection)");
  const Matrix s = matmul_tn(m_matrix, m_matrix); // m x m
  EigResult full = sym_eig(s);
  const std::size_t k = std::min(u.cols(), s.rows());
  EigResult top;
  top.values.assign(full.values.begin(), full.values.begin() + k);
  top.vectors = Matrix(s.rows(), k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < s.rows(); ++i) top.vectors(i, j) = full.vectors(i, j);

  // Eigenvector signs are arbitrary; pick the loss-minimizing orientation,
  // the one that keeps each column's cross term m_j^T w_j non-negative.
  for (std::size_t j = 0; j < k && j < m_matrix.rows(); ++j) {
    double cross = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) cross += m_matrix(j, i) * top.vectors(i, j);
    if (cross < 0.0)
      for (std::size_t i = 0; i < s.rows(); ++i) top.vectors(i, j) = -top.vectors(i, j);
  }
  return top;
}

Matrix procrustes_w(const Matrix& m_matrix) {
  if (m_matrix.max_abs() == 0.0)
    throw SolverError("procrustes_w: zero matrix");
  SvdResult s = svd(m_matrix); // m_matrix = P D Q^T, P: n_f x k, Q: m x k
  return matmul_nt(s.v, s.u);  // Q P^T, m x n_f
}

Matrix u_step(const CovarianceSet& cov, const Matrix& w, double kkt_tolerance) {
  check_orthonormal_columns(w);
  const Matrix atb = matmul(cov.cxy, w); // n x n_f, columns Cxy w_j
  if (kkt_tolerance < 0.0) kkt_tolerance = default_kkt_tolerance(atb);

  Matrix u(cov.cxx.rows(), w.cols());
  const auto wnorms = column_norms(w);
  for (std::size_t j = 0; j < w.cols(); ++j) {
    if (wnorms[j] < 1e-14) continue; // padded column -> zero filter
    std::vector<double> col = nnls_solve_normal(cov.cxx, atb.col(j), kkt_tolerance, 0);
    u.set_col(j, col);
  }
  return u;
}

std::vector<double> unidim_w(const Matrix& cxy, const std::vector<double>& u) {
  std::vector<double> w = matvec_t(cxy, u); // Cxy^T u, length m
  const double nrm = vec_norm(w);
  if (nrm == 0.0) return {};
  kern::scale(1.0 / nrm, w.data(), w.size());
  return w;
}

Matrix schur_deflate(const Matrix& cxy, const std::vector<double>& u) {
  std::vector<double> v = matvec_t(cxy, u); // C^T u, length m
  const double denom = kern::sumsq(v.data(), v.size());
  if (denom == 0.0) return cxy; // no-op, caller warns
  Matrix out = cxy;
  // C <- C (I - v v^T / denom) = C - (C v) v^T / denom
  std::vector<double> cv = matvec(cxy, v);
  const double inv = 1.0 / denom;
  for (std::size_t i = 0; i < out.rows(); ++i)
    kern::axpy(-cv[i] * inv, v.data(), out.row(i), out.cols());
  return out;
}

// ---------------------------------------------------------------------------

SolverResult nopls(const CenteredDataset& d, const SolverConfig& cfg) {
  const auto t0 = clock_type::now();
  if (cfg.n_f < 1 || cfg.n_f > d.n())
    throw SolverError("nopls: n_f must be in [1, n]");
  const CovarianceSet cov = covariances(d);
  const double tau = effective_ridge(cov.cxx, cfg.ridge_tau);

  SolverResult r;
  r.u = kronecker_delta_init(cov.cxy, cfg.n_f);
  r.w = Matrix(d.m(), cfg.n_f);

  std::optional<Matrix> cxx_chol; // unconstrained mode factor
  if (!cfg.nonneg) {
    Matrix reg = cov.cxx;
    for (std::size_t i = 0; i < reg.rows(); ++i) reg(i, i) += tau;
    cxx_chol = cholesky(reg);
    if (!cxx_chol) throw SolverError("nopls: Cxx not factorizable");
  }

  const auto update_u = [&](const Matrix& w) {
    if (cfg.nonneg) return u_step(cov, w, cfg.kkt_tolerance);
    const Matrix atb = matmul(cov.cxy, w);
    Matrix u(d.n(), cfg.n_f);
    const auto wnorms = column_norms(w);
    for (std::size_t j = 0; j < cfg.n_f; ++j)
      if (wnorms[j] >= 1e-14) u.set_col(j, cholesky_solve(*cxx_chol, atb.col(j)));
    return u;
  };

  double prev_trace = 0.0;
  double delta_stop = cfg.delta;
  r.report.stop_reason = StopReason::max_iterations;

  for (int k = 0; k < cfg.max_outer_iterations; ++k) {
    const Matrix m_matrix = matmul_tn(r.u, cov.cxy);
    if (m_matrix.max_abs() == 0.0) {
      // Nothing left to explain (Cxy = 0 or U collapsed): degenerate bank.
      r.u = Matrix(d.n(), cfg.n_f);
      r.w = Matrix(d.m(), cfg.n_f);
      r.report.loss_trajectory.push_back(cov.cyy.trace());
      r.report.eigenvalue_trace_trajectory.push_back(0.0);
      r.report.stop_reason = StopReason::tolerance;
      r.report.outer_iterations = k + 1;
      break;
    }

    EigResult eig = w_step(cov, r.u);
    if (cfg.n_f <= d.m()) {
      // Exact block minimizer over W^T W = I; the eigenvalues above still
      // drive the stop rule and the final relevance ordering.
      r.w = procrustes_w(m_matrix);
    } else {
      // Infeasible orthonormality: take the eigenbasis and pad zero columns,
      // which the U-step turns into zero filters.
      r.w = Matrix(d.m(), cfg.n_f);
      for (std::size_t j = 0; j < eig.vectors.cols(); ++j)
        for (std::size_t i = 0; i < d.m(); ++i) r.w(i, j) = eig.vectors(i, j);
    }
    const double trace_k =
        std::accumulate(eig.values.begin(), eig.values.end(), 0.0);
    r.report.eigenvalue_trace_trajectory.push_back(trace_k);
    if (delta_stop < 0.0) delta_stop = 1e-8 * std::max(trace_k, 1e-300);

    r.u = update_u(r.w);

    r.report.loss_trajectory.push_back(loss_from_covariances(cov, r.u, r.w));
    r.report.outer_iterations = k + 1;

    if (k > 0 && std::abs(trace_k - prev_trace) <= delta_stop) {
      r.report.stop_reason = StopReason::tolerance;
      break;
    }
    prev_trace = trace_k;
  }

  drop_redundant_columns(cov, r.u, cfg.ridge_tau);

  // Order the converged columns by how much each one lowers the objective
  // (2 m_j^T w_j - u_j^T Cxx u_j with orthonormal W); a column permutation
  // leaves the loss untouched.
  {
    const Matrix m_final = matmul_tn(r.u, cov.cxy);
    std::vector<std::pair<double, std::size_t>> order(cfg.n_f);
    for (std::size_t j = 0; j < cfg.n_f; ++j) {
      double cross = 0.0, quad = 0.0;
      for (std::size_t i = 0; i < d.m(); ++i) cross += m_final(j, i) * r.w(i, j);
      for (std::size_t a = 0; a < d.n(); ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < d.n(); ++b) row += cov.cxx(a, b) * r.u(b, j);
        quad += r.u(a, j) * row;
      }
      order[j] = {quad - 2.0 * cross, j};
    }
    std::stable_sort(order.begin(), order.end());
    Matrix u_sorted(d.n(), cfg.n_f), w_sorted(d.m(), cfg.n_f);
    for (std::size_t j = 0; j < cfg.n_f; ++j) {
      u_sorted.set_col(j, r.u.col(order[j].second));
      w_sorted.set_col(j, r.w.col(order[j].second));
    }
    r.u = std::move(u_sorted);
    r.w = std::move(w_sorted);
  }

  record_degenerate_columns(r.u, r.report);
  r.report.wall_time = seconds_since(t0);
  return r;
}

SolverResult pnopls(const CenteredDataset& d, const SolverConfig& cfg) {
  const auto t0 = clock_type::now();
  if (cfg.n_f < 1 || cfg.n_f > d.n())
    throw SolverError("pnopls: n_f must be in [1, n]");
  if (cfg.n_f > d.m())
    throw SolverError("pnopls: n_f > m makes W^T W = I unattainable");
  const CovarianceSet cov = covariances(d);

  SolverResult r;
  r.u = kronecker_delta_init(cov.cxy, cfg.n_f);
  r.w = Matrix(d.m(), cfg.n_f);
  r.report.unordered = true;

  double prev_trace = 0.0;
  double delta_stop = cfg.delta;
  r.report.stop_reason = StopReason::max_iterations;

  for (int k = 0; k < cfg.max_outer_iterations; ++k) {
    const Matrix m_matrix = matmul_tn(r.u, cov.cxy); // n_f x m
    if (m_matrix.max_abs() == 0.0)
      throw SolverError("pnopls: U^T Cxy is identically zero (degenerate)");

    r.w = procrustes_w(m_matrix);

    // Rotation-invariant progress monitor: sum of squared singular values.
    const double trace_k = matmul_nt(m_matrix, m_matrix).trace();
    r.report.eigenvalue_trace_trajectory.push_back(trace_k);
    if (delta_stop < 0.0) delta_stop = 1e-8 * std::max(trace_k, 1e-300);

    r.u = u_step(cov, r.w, cfg.kkt_tolerance);

    const double loss = loss_from_covariances(cov, r.u, r.w);
    r.report.loss_trajectory.push_back(loss);
    r.report.outer_iterations = k + 1;

    const auto& traj = r.report.loss_trajectory;
    if (traj.size() > 10) {
      const double old = traj[traj.size() - 11];
      if (loss > old * (1.0 + 1e-6)) r.report.convergence_warning = true;
    }

    if (k > 0 && std::abs(trace_k - prev_trace) <= delta_stop) {
      r.report.stop_reason = StopReason::tolerance;
      break;
    }
    prev_trace = trace_k;
  }

  drop_redundant_columns(cov, r.u, cfg.ridge_tau);
  record_degenerate_columns(r.u, r.report);
  r.report.wall_time = seconds_since(t0);
  return r;
}

SolverResult defnopls(const CenteredDataset& d, const SolverConfig& cfg) {
  const auto t0 = clock_type::now();
  if (cfg.n_f < 1 || cfg.n_f > d.n())
    throw SolverError("defnopls: n_f must be in [1, n]");
  const CovarianceSet cov = covariances(d);
  const double delta = cfg.delta < 0.0 ? 1e-10 : cfg.delta;
  const double cxy_norm0 = cov.cxy.frobenius_norm();

  SolverResult r;
  r.u = Matrix(d.n(), cfg.n_f);
  r.w = Matrix(d.m(), cfg.n_f);
  r.report.stop_reason = StopReason::tolerance;

  Matrix cxy_d = cov.cxy;
  double kkt = cfg.kkt_tolerance;
  if (kkt < 0.0) kkt = default_kkt_tolerance(cov.cxy);

  for (std::size_t j = 0; j < cfg.n_f; ++j) {
    if (cxy_d.frobenius_norm() <= 1e-12 * std::max(cxy_norm0, 1e-300)) break;

    // Seed the stage on the coordinate whose row of the deflated
    // cross-covariance carries the most target energy: the single-filter
    // analogue of the coordinate init the joint solver uses.
    std::size_t seed = 0;
    double seed_energy = -1.0;
    for (std::size_t i = 0; i < d.n(); ++i) {
      const double e = kern::sumsq(cxy_d.row(i), cxy_d.cols());
      if (e > seed_energy) {
        seed_energy = e;
        seed = i;
      }
    }
    if (seed_energy <= 0.0) break;

    std::vector<double> u(d.n(), 0.0), w;
    u[seed] = 1.0;
    bool converged = false;
    bool dead_filter = false;
    int inner = 0;
    for (; inner < cfg.max_outer_iterations; ++inner) {
      w = unidim_w(cxy_d, u);
      if (w.empty()) {
        dead_filter = true;
        break;
      }
      std::vector<double> atb = matvec(cxy_d, w);
      std::vector<double> u_new = nnls_solve_normal(cov.cxx, atb, kkt, 0);
      const double nn = vec_norm(u_new);
      if (nn == 0.0) {
        dead_filter = true;
        break;
      }
      const double d_cos = vec_dot(u, u_new) / (vec_norm(u) * nn);
      u = std::move(u_new);
      if (d_cos > 1.0 - delta) {
        converged = true;
        break;
      }
    }
    r.report.outer_iterations += inner + 1;
    if (dead_filter) break;
    if (!converged) r.report.convergence_warning = true;

    r.u.set_col(j, u);
    r.w.set_col(j, w);
    r.report.filters_extracted = j + 1;

    const std::vector<double> before = matvec_t(cxy_d, u);
    r.report.eigenvalue_trace_trajectory.push_back(kern::sumsq(before.data(), before.size()));
    cxy_d = schur_deflate(cxy_d, u);

    r.report.loss_trajectory.push_back(refit_loss(cov, r.u, cfg.ridge_tau));
  }

  record_degenerate_columns(r.u, r.report);
  r.report.wall_time = seconds_since(t0);
  return r;
}

void nndsvd_init(const Matrix& cxy_bar, std::size_t n_f, Matrix& u0, Matrix& w0) {
  const std::size_t n = cxy_bar.rows(), m = cxy_bar.cols();
  if (cxy_bar.max_abs() == 0.0) throw SolverError("nndsvd_init: zero matrix");
  if (cxy_bar.min_entry() < 0.0)
    throw SolverError("nndsvd_init: matrix must be elementwise non-negative");

  u0 = Matrix(n, n_f);
  w0 = Matrix(m, n_f);
  const SvdResult s = svd(cxy_bar);
  const std::size_t k = std::min({n, m, n_f});

  for (std::size_t j = 0; j < k; ++j) {
    const double sigma = s.s[j];
    if (sigma <= 0.0) continue;
    std::vector<double> p = s.u.col(j), q = s.v.col(j);
    if (j == 0) {
      // Perron pair: sign-consistent up to a global flip.
      for (double& v : p) v = std::abs(v);
      for (double& v : q) v = std::abs(v);
      const double root = std::sqrt(sigma);
      for (std::size_t i = 0; i < n; ++i) u0(i, 0) = root * p[i];
      for (std::size_t i = 0; i < m; ++i) w0(i, 0) = root * q[i];
      continue;
    }
    std::vector<double> pp(n, 0.0), pn(n, 0.0), qp(m, 0.0), qn(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) (p[i] >= 0.0 ? pp[i] : pn[i]) = std::abs(p[i]);
    for (std::size_t i = 0; i < m; ++i) (q[i] >= 0.0 ? qp[i] : qn[i]) = std::abs(q[i]);
    const double npp = vec_norm(pp), npn = vec_norm(pn);
    const double nqp = vec_norm(qp), nqn = vec_norm(qn);
    const double mp = npp * nqp, mn = npn * nqn;
    const std::vector<double>& psel = mp >= mn ? pp : pn;
    const std::vector<double>& qsel = mp >= mn ? qp : qn;
    const double pnorm = mp >= mn ? npp : npn;
    const double qnorm = mp >= mn ? nqp : nqn;
    const double msel = mp >= mn ? mp : mn;
    if (msel == 0.0) continue;
    const double scale = std::sqrt(sigma * msel);
    for (std::size_t i = 0; i < n; ++i) u0(i, j) = scale * psel[i] / pnorm;
    for (std::size_t i = 0; i < m; ++i) w0(i, j) = scale * qsel[i] / qnorm;
  }

  // NNDSVDa: zeros (and any column past min(n, m)) take the matrix mean.
  const double mean = kern::sum(cxy_bar.data(), cxy_bar.size()) / double(n * m);
  for (std::size_t j = 0; j < n_f; ++j) {
    for (std::size_t i = 0; i < n; ++i)
      if (u0(i, j) <= 0.0) u0(i, j) = mean;
    for (std::size_t i = 0; i < m; ++i)
      if (w0(i, j) <= 0.0) w0(i, j) = mean;
  }
}

SolverResult nmf_opls(const RawDataset& raw, const SolverConfig& cfg) {
  const auto t0 = clock_type::now();
  if (cfg.n_f < 1 || cfg.n_f > raw.n())
    throw SolverError("nmf_opls: n_f must be in [1, n]");
  if (raw.inputs.min_entry() < 0.0)
    throw SolverError("nmf_opls: inputs must be elementwise non-negative");
  if (raw.targets.min_entry() < 0.0)
    throw SolverError("nmf_opls: targets must be elementwise non-negative");

  const CovarianceSet cov = raw_covariances(raw);
  const double eps = cfg.epsilon_floor;

  SolverResult r;
  r.report.unordered = true;
  nndsvd_init(cov.cxy, cfg.n_f, r.u, r.w);
  kern::clamp_floor(eps, r.u.data(), r.u.size());
  kern::clamp_floor(eps, r.w.data(), r.w.size());

  r.report.stop_reason = StopReason::max_iterations;
  const double tiny = 1e-300;

  for (int k = 0; k < cfg.max_outer_iterations; ++k) {
    const Matrix u_prev = r.u;

    // W <- max(eps, W o (Cxy^T U) / (W U^T Cxx U))
    {
      const Matrix num = matmul_tn(cov.cxy, r.u);
      const Matrix utcxxu = matmul_tn(r.u, matmul(cov.cxx, r.u));
      Matrix den = matmul(r.w, utcxxu);
      kern::clamp_floor(tiny, den.data(), den.size());
      Matrix ratio(num.rows(), num.cols());
      kern::div(num.data(), den.data(), ratio.data(), num.size());
      kern::mul(r.w.data(), ratio.data(), r.w.data(), r.w.size());
      kern::clamp_floor(eps, r.w.data(), r.w.size());
    }
    // U <- max(eps, U o (Cxy W) / (Cxx U W^T W))
    {
      const Matrix num = matmul(cov.cxy, r.w);
      const Matrix wtw = matmul_tn(r.w, r.w);
      Matrix den = matmul(matmul(cov.cxx, r.u), wtw);
      kern::clamp_floor(tiny, den.data(), den.size());
      Matrix ratio(num.rows(), num.cols());
      kern::div(num.data(), den.data(), ratio.data(), num.size());
      kern::mul(r.u.data(), ratio.data(), r.u.data(), r.u.size());
      kern::clamp_floor(eps, r.u.data(), r.u.size());
    }

    // Frobenius normalization (W first, then U), floor re-applied.
    const double wn = r.w.frobenius_norm();
    if (wn > 0.0) r.w *= 1.0 / wn;
    const double un = r.u.frobenius_norm();
    if (un > 0.0) r.u *= 1.0 / un;
    kern::clamp_floor(eps, r.w.data(), r.w.size());
    kern::clamp_floor(eps, r.u.data(), r.u.size());

    r.report.loss_trajectory.push_back(loss_from_covariances(cov, r.u, r.w));
    r.report.outer_iterations = k + 1;

    const double diff = (r.u - u_prev).frobenius_norm();
    const double delta = cfg.delta < 0.0 ? 1e-9 * r.u.frobenius_norm() : cfg.delta;
    if (diff <= delta) {
      r.report.stop_reason = StopReason::tolerance;
      break;
    }
  }

  r.report.wall_time = seconds_since(t0);
  return r;
}

double popls_quotient(const Matrix& cxx, const Matrix& cxy, const std::vector<double>& u,
                      double ridge_tau) {
  const double tau = effective_ridge(cxx, ridge_tau);
  const std::vector<double> ctu = matvec_t(cxy, u);
  const double num = kern::sumsq(ctu.data(), ctu.size());
  const std::vector<double> bu = matvec(cxx, u);
  const double den = vec_dot(u, bu) + tau * kern::sumsq(u.data(), u.size());
  return num / den;
}

namespace {

// Projected gradient ascent on the non-negative unit sphere for the
// cross-covariance quotient. Returns the best quotient found.
double popls_ascend(const Matrix& cxx, const Matrix& cxy_d, double tau,
                    std::vector<double>& u) {
  const std::size_t n = u.size();
  auto project = [&](std::vector<double>& v) {
    for (double& x : v)
      if (x < 0.0) x = 0.0;
    const double nrm = vec_norm(v);
    if (nrm == 0.0) return false;
    kern::scale(1.0 / nrm, v.data(), v.size());
    return true;
  };
  if (!project(u)) return -1.0;

  auto quotient = [&](const std::vector<double>& v) {
    const std::vector<double> ctv = matvec_t(cxy_d, v);
    const double num = kern::sumsq(ctv.data(), ctv.size());
    const std::vector<double> bv = matvec(cxx, v);
    const double den = vec_dot(v, bv) + tau;
    return num / den;
  };

  double q = quotient(u);
  for (int iter = 0; iter < 500; ++iter) {
    const std::vector<double> ctu = matvec_t(cxy_d, u);
    std::vector<double> au = matvec(cxy_d, ctu); // Cxy Cxy^T u
    std::vector<double> bu = matvec(cxx, u);
    kern::axpy(tau, u.data(), bu.data(), n);
    const double den = vec_dot(u, bu);
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * (au[i] - q * bu[i]) / den;
    const double gn = vec_norm(g);
    if (gn == 0.0) break;

    double alpha = 1.0 / gn;
    bool improved = false;
    for (int bt = 0; bt < 50; ++bt, alpha *= 0.5) {
      std::vector<double> cand = u;
      kern::axpy(alpha, g.data(), cand.data(), n);
      if (!project(cand)) continue;
      const double qc = quotient(cand);
      if (qc > q * (1.0 + 1e-14) || (q == 0.0 && qc > 0.0)) {
        u = std::move(cand);
        const double gain = qc - q;
        q = qc;
        improved = true;
        if (gain <= 1e-12 * std::max(q, 1e-300)) iter = 500; // converged
        break;
      }
    }
    if (!improved) break;
  }
  return q;
}

} // namespace

SolverResult popls(const CenteredDataset& d, const SolverConfig& cfg) {
  const auto t0 = clock_type::now();
  if (cfg.n_f < 1 || cfg.n_f > d.n())
    throw SolverError("popls: n_f must be in [1, n]");
  const CovarianceSet cov = covariances(d);
  const double tau = effective_ridge(cov.cxx, cfg.ridge_tau);
  const double cxy_norm0 = cov.cxy.frobenius_norm();

  SolverResult r;
  r.u = Matrix(d.n(), cfg.n_f);
  r.w = Matrix(d.m(), cfg.n_f);
  r.report.stop_reason = StopReason::tolerance;

  Matrix cxy_d = cov.cxy;

  for (std::size_t j = 0; j < cfg.n_f; ++j) {
    if (cxy_d.frobenius_norm() <= 1e-12 * std::max(cxy_norm0, 1e-300)) break;

    // Multi-starts: clipped leading singular direction, then the coordinate
    // vectors with the largest cross-covariance rows.
    std::vector<std::vector<double>> starts;
    {
      const SvdResult s = svd(cxy_d);
      std::vector<double> lead = s.u.col(0);
      double pos = 0.0;
      for (double v : lead) pos += v > 0.0 ? v : 0.0;
      if (pos < -std::accumulate(lead.begin(), lead.end(), 0.0) + pos)
        for (double& v : lead) v = -v;
      starts.push_back(std::move(lead));

      std::vector<double> row_norms(d.n());
      for (std::size_t i = 0; i < d.n(); ++i)
        row_norms[i] = kern::sumsq(cxy_d.row(i), cxy_d.cols());
      std::vector<std::size_t> order(d.n());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return row_norms[a] > row_norms[b];
      });
      for (std::size_t t = 0; t < order.size() && starts.size() < std::size_t(std::max(1, cfg.popls_restarts)); ++t) {
        if (row_norms[order[t]] == 0.0) break;
        std::vector<double> e(d.n(), 0.0);
        e[order[t]] = 1.0;
        starts.push_back(std::move(e));
      }
    }

    double best_q = -1.0;
    std::vector<double> best_u;
    for (auto& s0 : starts) {
      std::vector<double> u = s0;
      const double q = popls_ascend(cov.cxx, cxy_d, tau, u);
      if (q > best_q) {
        best_q = q;
        best_u = std::move(u);
      }
    }
    if (best_q <= 0.0 || best_u.empty()) break; // all restarts degenerate

    r.u.set_col(j, best_u);
    r.report.filters_extracted = j + 1;
    r.report.eigenvalue_trace_trajectory.push_back(best_q);

    cxy_d = schur_deflate(cxy_d, best_u);
    r.report.loss_trajectory.push_back(refit_loss(cov, r.u, cfg.ridge_tau));
    r.report.outer_iterations += 1;
  }

  // Convenience regression matrix for loss evaluation downstream.
  {
    const auto norms = column_norms(r.u);
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < r.u.cols(); ++j)
      if (norms[j] > 0.0) keep.push_back(j);
    if (!keep.empty()) {
      Matrix uk(d.n(), keep.size());
      for (std::size_t j = 0; j < keep.size(); ++j)
        for (std::size_t i = 0; i < d.n(); ++i) uk(i, j) = r.u(i, keep[j]);
      Matrix g = matmul_tn(uk, matmul(cov.cxx, uk));
      Matrix utu = matmul_tn(uk, uk);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t jj = 0; jj < g.cols(); ++jj) g(i, jj) += tau * utu(i, jj);
      if (auto l = cholesky(g)) {
        const Matrix m = matmul_tn(cov.cxy, uk);       // m x k
        const Matrix wk = cholesky_solve(*l, m.transposed()); // k x m
        for (std::size_t j = 0; j < keep.size(); ++j)
          for (std::size_t i = 0; i < d.m(); ++i) r.w(i, keep[j]) = wk(j, i);
      }
    }
  }

  record_degenerate_columns(r.u, r.report);
  r.report.wall_time = seconds_since(t0);
  return r;
}

SolverResult opls_baseline(const CenteredDataset& d, const SolverConfig& cfg) {
  const auto t0 = clock_type::now();
  if (cfg.n_f < 1 || cfg.n_f > d.n())
    throw SolverError("opls: n_f must be in [1, n]");
  const CovarianceSet cov = covariances(d);
  const double tau = effective_ridge(cov.cxx, cfg.ridge_tau);

  Matrix a = matmul_nt(cov.cxy, cov.cxy); // n x n
  Matrix b = cov.cxx;
  for (std::size_t i = 0; i < b.rows(); ++i) b(i, i) += tau;

  const EigResult e = generalized_eig(a, b);

  SolverResult r;
  r.u = Matrix(d.n(), cfg.n_f);
  for (std::size_t j = 0; j < cfg.n_f; ++j) {
    std::vector<double> col = e.vectors.col(j);
    const double nrm = vec_norm(col);
    if (nrm > 0.0) kern::scale(1.0 / nrm, col.data(), col.size());
    r.u.set_col(j, col);
  }
  r.report.eigenvalue_trace_trajectory.assign(e.values.begin(),
                                              e.values.begin() + cfg.n_f);

  // Free-optimal regression matrix W = Cxy^T U (U^T Cxx U + tau U^T U)^-1.
  Matrix g = matmul_tn(r.u, matmul(cov.cxx, r.u));
  Matrix utu = matmul_tn(r.u, r.u);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += tau * utu(i, j);
  auto l = cholesky(g);
  if (!l) throw SolverError("opls: projected Gram matrix not factorizable");
  const Matrix m = matmul_tn(cov.cxy, r.u);
  const Matrix wk = cholesky_solve(*l, m.transposed()); // n_f x m
  r.w = wk.transposed();

  r.report.outer_iterations = 1;
  r.report.loss_trajectory.push_back(loss_from_covariances(cov, r.u, r.w));
  r.report.wall_time = seconds_since(t0);
  return r;
}

SolverResult run_solver(const std::string& method, const RawDataset& raw,
                        const CenteredDataset& d, const SolverConfig& cfg) {
  if (method == "nopls") return nopls(d, cfg);
  if (method == "pnopls") return pnopls(d, cfg);
  if (method == "defnopls") return defnopls(d, cfg);
  if (method == "nmf_opls") return nmf_opls(raw, cfg);
  if (method == "popls") return popls(d, cfg);
  if (method == "opls") return opls_baseline(d, cfg);
  throw SolverError("unknown method: " + method);
}

} // namespace nnopls

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nnopls/filterbank.hpp"
#include "nnopls/linalg.hpp"
#include "nnopls/nnls.hpp"
#include "nnopls/solvers.hpp"
#include "test_util.hpp"

using namespace nnopls;
using testutil::random_matrix;

namespace {

const double kPi = 3.14159265358979323846;

// Centered dataset with planted structure: x = u1 a^T + u2 b^T with zero-mean
// orthogonal rows a, b, and y = U^T x. The optimum of Eq. (1) is zero and the
// W-step eigenvectors are axis-aligned, so alternation can recover U exactly.
CenteredDataset planted_orthogonal_instance(std::size_t n_samples) {
  CenteredDataset d;
  const std::size_t n = 4, m = 2;
  Matrix u(n, m);
  u(0, 0) = 0.8;
  u(1, 0) = 0.6;
  u(2, 1) = 0.6;
  u(3, 1) = 0.8;

  Matrix a(1, n_samples), b(1, n_samples);
  for (std::size_t t = 0; t < n_samples; ++t) {
    a(0, t) = 2.0 * std::cos(2.0 * kPi * double(t) / double(n_samples));
    b(0, t) = std::sin(2.0 * kPi * 3.0 * double(t) / double(n_samples));
  }

  d.x = Matrix(n, n_samples);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < n_samples; ++t)
      d.x(i, t) = u(i, 0) * a(0, t) + u(i, 1) * b(0, t);
  d.y = matmul_tn(u, d.x);
  d.mu_x.assign(n, 0.0);
  d.mu_y.assign(m, 0.0);
  return d;
}

CenteredDataset centered_from(const RawDataset& raw) { return center(raw); }

} // namespace

TEST_CASE("w_step with identity U reproduces the singular spectrum of cxy") {
  std::mt19937_64 rng(41);
  CovarianceSet cov;
  cov.cxy = random_matrix(rng, 5, 3);
  cov.cxx = Matrix::identity(5);
  cov.cyy = Matrix::identity(3);
  const EigResult e = w_step(cov, Matrix::identity(5));
  const SvdResult s = svd(cov.cxy);
  REQUIRE(e.values.size() == 3);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(e.values[j] == doctest::Approx(s.s[j] * s.s[j]).epsilon(1e-10));
}

TEST_CASE("u_step matches a joint vectorized NNLS oracle") {
  std::mt19937_64 rng(43);
  const std::size_t n = 4, m = 2, n_samples = 30, n_f = 2;
  RawDataset raw = testutil::random_dataset(rng, n, m, n_samples);
  const CenteredDataset d = centered_from(raw);
  const CovarianceSet cov = covariances(d);

  // Orthonormal W from the SVD of a random matrix.
  const SvdResult s = svd(random_matrix(rng, m, n_f));
  const Matrix w = s.u;

  const Matrix u = u_step(cov, w);
  CHECK(u.min_entry() >= 0.0);
  const double mine = reconstruction_loss(u, w, d);

  // Joint oracle: one NNLS over vec(U) against the stacked m*N x n*n_f design
  // with entries w(i_m, j) * x(i_n, t).
  NnlsProblem joint;
  joint.a = Matrix(m * n_samples, n * n_f);
  joint.b = Matrix(m * n_samples, 1);
  for (std::size_t im = 0; im < m; ++im)
    for (std::size_t t = 0; t < n_samples; ++t) {
      const std::size_t row = im * n_samples + t;
      joint.b(row, 0) = d.y(im, t);
      for (std::size_t j = 0; j < n_f; ++j)
        for (std::size_t in = 0; in < n; ++in)
          joint.a(row, j * n + in) = w(im, j) * d.x(in, t);
    }
  const NnlsSolution oracle = nnls_solve(joint);
  Matrix u_oracle(n, n_f);
  for (std::size_t j = 0; j < n_f; ++j)
    for (std::size_t in = 0; in < n; ++in) u_oracle(in, j) = oracle.x(j * n + in, 0);
  const double oracle_loss = reconstruction_loss(u_oracle, w, d);

  CHECK(mine == doctest::Approx(oracle_loss).epsilon(1e-8));
}

TEST_CASE("u_step rejects non-orthonormal W") {
  CovarianceSet cov;
  cov.cxx = Matrix::identity(3);
  cov.cxy = Matrix(3, 2, 1.0);
  cov.cyy = Matrix::identity(2);
  const Matrix w = Matrix(2, 2, 0.7);
  CHECK_THROWS_AS(u_step(cov, w), SolverError);
}

TEST_CASE("procrustes_w on a hand-solvable axis swap") {
  const Matrix m = Matrix::from_rows({{0, 2}, {1, 0}});
  const Matrix w = procrustes_w(m);
  CHECK(w(0, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(w(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w(1, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("schur_deflate zeroes the extracted direction and drops rank by one") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix cxy = random_matrix(rng, 6, 3);
    std::vector<double> u(6);
    std::uniform_real_distribution<double> pos(0.1, 1.0);
    for (auto& v : u) v = pos(rng);

    const Matrix def = schur_deflate(cxy, u);
    const auto ut_def = matvec_t(def, u);
    CHECK(vec_norm(ut_def) <= 1e-10 * cxy.frobenius_norm());

    const SvdResult before = svd(cxy);
    const SvdResult after = svd(def);
    const double tol = 1e-10 * before.s[0];
    auto rank = [&](const std::vector<double>& s) {
      std::size_t r = 0;
      for (double v : s)
        if (v > tol) ++r;
      return r;
    };
    CHECK(rank(after.s) == rank(before.s) - 1);
  }
}

TEST_CASE("unidim_w normalizes and signals exhausted deflation") {
  const Matrix cxy = Matrix::from_rows({{3, 0}, {0, 4}});
  const auto w = unidim_w(cxy, {1.0, 0.0});
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(0.0).scale(1.0));
  CHECK(unidim_w(Matrix(2, 2), {1.0, 1.0}).empty());
}

TEST_CASE("nndsvd_init matches the dominant pair and stays strictly positive") {
  std::mt19937_64 rng(49);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 8, 4, 0.0, 1.0);
    const SvdResult s = svd(a);
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += a.data()[i];
    mean /= double(a.size());

    // The leading pair is the exact rank-1 truncation: for a non-negative
    // matrix the dominant singular pair is already non-negative up to sign.
    {
      Matrix u0, w0;
      nndsvd_init(a, 1, u0, w0);
      const double err = (a - matmul_nt(u0, w0)).frobenius_norm();
      double tail = 0.0;
      for (std::size_t j = 1; j < s.s.size(); ++j) tail += s.s[j] * s.s[j];
      CHECK(err == doctest::Approx(std::sqrt(tail)).epsilon(1e-8));
    }

    for (std::size_t n_f : {std::size_t(2), std::size_t(4), std::size_t(6)}) {
      Matrix u0, w0;
      nndsvd_init(a, n_f, u0, w0);
      // The fill pass leaves no zeros behind.
      CHECK(u0.min_entry() > 0.0);
      CHECK(w0.min_entry() > 0.0);
      // Columns past min(n, m) are pure mean fill.
      for (std::size_t j = 4; j < n_f; ++j)
        for (std::size_t i = 0; i < 8; ++i)
          CHECK(u0(i, j) == doctest::Approx(mean).epsilon(1e-12));
      // Each extra column adds at most its fill mass to the reconstruction
      // error on top of the rank-1 tail.
      const double err = (a - matmul_nt(u0, w0)).frobenius_norm();
      double tail = 0.0;
      for (std::size_t j = 1; j < s.s.size(); ++j) tail += s.s[j] * s.s[j];
      const double fill_mass =
          mean * std::sqrt(8.0 * 4.0) * double(n_f - 1);
      CHECK(err <= std::sqrt(tail) + fill_mass + 1e-9);
    }
  }
}

TEST_CASE("loss_from_covariances equals the direct residual") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const RawDataset raw = testutil::random_dataset(rng, 5, 3, 40);
    const CenteredDataset d = centered_from(raw);
    const CovarianceSet cov = covariances(d);
    const Matrix u = random_matrix(rng, 5, 2, 0.0, 1.0);
    const Matrix w = random_matrix(rng, 3, 2);
    const double via_traces = loss_from_covariances(cov, u, w);
    const double via_residual = reconstruction_loss(u, w, d);
    CHECK(via_traces == doctest::Approx(via_residual).epsilon(1e-8));
  }
}

TEST_CASE("nopls recovers a noise-free planted bank") {
  const CenteredDataset d = planted_orthogonal_instance(64);
  SolverConfig cfg;
  cfg.n_f = 2;
  cfg.delta = 1e-14; // drive the alternation well past the default stop
  const SolverResult r = nopls(d, cfg);
  const double scale = d.y.frobenius_sq();
  CHECK(r.report.loss_trajectory.back() <= 1e-8 * scale);
  CHECK(r.u.min_entry() >= 0.0);
}

TEST_CASE("nopls handles targets independent of inputs") {
  // Antisymmetric x against symmetric y makes Cxy exactly zero in floating
  // point: each entry is a*w + (-a)*w.
  CenteredDataset d;
  d.x = Matrix::from_rows({{1, -1}, {2, -2}, {3, -3}});
  d.y = Matrix::from_rows({{1, 1}, {2, 2}});
  d.mu_x.assign(3, 0.0);
  d.mu_y.assign(2, 0.0);
  SolverConfig cfg;
  cfg.n_f = 2;
  const SolverResult r = nopls(d, cfg);
  const double cyy_trace = matmul_nt(d.y, d.y).trace();
  CHECK(r.report.loss_trajectory.back() == doctest::Approx(cyy_trace).epsilon(1e-12));
  CHECK(r.report.degenerate_columns.size() == 2);
}

TEST_CASE("nopls with m = 1 matches defnopls with one filter") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    const RawDataset raw = testutil::random_dataset(rng, 6, 1, 50);
    const CenteredDataset d = centered_from(raw);
    SolverConfig cfg;
    cfg.n_f = 1;
    const SolverResult a = nopls(d, cfg);
    const SolverResult b = defnopls(d, cfg);
    const CovarianceSet cov = covariances(d);
    const double la = refit_loss(cov, a.u, 0.0);
    const double lb = refit_loss(cov, b.u, 0.0);
    CHECK(la == doctest::Approx(lb).epsilon(1e-8));
  }
}

TEST_CASE("nopls columns beyond the cross-covariance rank come back degenerate") {
  const CenteredDataset d = planted_orthogonal_instance(32);
  SolverConfig cfg;
  cfg.n_f = 4; // rank(Cxy) is 2
  const SolverResult r = nopls(d, cfg);
  CHECK(r.u.cols() == 4);
  CHECK(r.report.degenerate_columns.size() >= 2);
}

TEST_CASE("pnopls equals nopls on the separable planted instance") {
  const CenteredDataset d = planted_orthogonal_instance(64);
  SolverConfig cfg;
  cfg.n_f = 2;
  const SolverResult a = nopls(d, cfg);
  const SolverResult b = pnopls(d, cfg);
  CHECK(b.report.unordered);
  const double scale = std::max(1.0, d.y.frobenius_sq());
  CHECK(std::abs(a.report.loss_trajectory.back() - b.report.loss_trajectory.back()) <=
        1e-6 * scale);
}

TEST_CASE("pnopls refuses more filters than targets") {
  const CenteredDataset d = planted_orthogonal_instance(32);
  SolverConfig cfg;
  cfg.n_f = 3; // m = 2
  CHECK_THROWS_AS(pnopls(d, cfg), SolverError);
}

TEST_CASE("defnopls loss trajectory is non-increasing across filters") {
  std::mt19937_64 rng(57);
  for (int trial = 0; trial < 5; ++trial) {
    const RawDataset raw = testutil::random_dataset(rng, 8, 3, 60);
    const CenteredDataset d = centered_from(raw);
    SolverConfig cfg;
    cfg.n_f = 3;
    const SolverResult r = defnopls(d, cfg);
    const auto& traj = r.report.loss_trajectory;
    for (std::size_t i = 1; i < traj.size(); ++i)
      CHECK(traj[i] <= traj[i - 1] * (1.0 + 1e-9) + 1e-12);
    CHECK(r.u.min_entry() >= 0.0);
    CHECK(r.report.filters_extracted >= 1);
  }
}

TEST_CASE("defnopls stops early when deflation exhausts the cross-covariance") {
  const CenteredDataset d = planted_orthogonal_instance(64);
  SolverConfig cfg;
  cfg.n_f = 4; // only 2 directions exist
  const SolverResult r = defnopls(d, cfg);
  CHECK(r.report.filters_extracted <= 2);
}

TEST_CASE("nmf_opls descends and stays floored") {
  std::mt19937_64 rng(59);
  RawDataset raw;
  raw.inputs = random_matrix(rng, 6, 40, 0.0, 1.0);
  const Matrix u_true = random_matrix(rng, 6, 2, 0.0, 1.0);
  raw.targets = matmul_tn(u_true, raw.inputs);

  SolverConfig cfg;
  cfg.n_f = 2;
  cfg.max_outer_iterations = 5000;
  cfg.delta = 1e-13;
  const SolverResult r = nmf_opls(raw, cfg);
  CHECK(r.report.unordered);
  CHECK(r.u.min_entry() >= cfg.epsilon_floor);
  CHECK(r.w.min_entry() >= cfg.epsilon_floor);
  CHECK(r.report.loss_trajectory.back() <= r.report.loss_trajectory.front() + 1e-9);

  // Not worse than 1.5x what nopls achieves on the centered version.
  const CenteredDataset d = centered_from(raw);
  const SolverResult ref = nopls(d, cfg);
  const CovarianceSet cov_raw = raw_covariances(raw);
  const CovarianceSet cov_cen = covariances(d);
  const double mine = refit_loss(cov_raw, r.u, 0.0);
  const double base = refit_loss(cov_cen, ref.u, 0.0);
  CHECK(mine <= 1.5 * base + 1e-6 * cov_raw.cyy.trace());
}

TEST_CASE("nmf_opls rejects negative data") {
  RawDataset raw;
  raw.inputs = Matrix::from_rows({{1, -1}, {0, 1}});
  raw.targets = Matrix(1, 2, 1.0);
  SolverConfig cfg;
  cfg.n_f = 1;
  CHECK_THROWS_AS(nmf_opls(raw, cfg), SolverError);
}

TEST_CASE("popls picks the boundary optimum of a signed cross-covariance") {
  Matrix cxx = Matrix::identity(2);
  Matrix cxy(2, 1);
  cxy(0, 0) = 3.0;
  cxy(1, 0) = -4.0;
  CHECK(popls_quotient(cxx, cxy, {0.0, 1.0}, 0.0) == doctest::Approx(16.0));

  CenteredDataset d;
  const std::size_t n_samples = 40;
  // Quadrature pair: Cxx proportional to the identity, y = 3 x1 - 4 x2, so
  // the constrained optimum is the analytic boundary point e2.
  d.x = Matrix(2, n_samples);
  for (std::size_t t = 0; t < n_samples; ++t) {
    d.x(0, t) = std::cos(2.0 * kPi * double(t) / n_samples);
    d.x(1, t) = std::sin(2.0 * kPi * double(t) / n_samples);
  }
  d.y = Matrix(1, n_samples);
  for (std::size_t t = 0; t < n_samples; ++t) d.y(0, t) = 3.0 * d.x(0, t) - 4.0 * d.x(1, t);
  d.mu_x.assign(2, 0.0);
  d.mu_y.assign(1, 0.0);

  SolverConfig cfg;
  cfg.n_f = 1;
  cfg.ridge_tau = 0.0;
  const SolverResult r = popls(d, cfg);
  // The negative coordinate is unreachable, so the mass lands on x2.
  CHECK(r.u(1, 0) > 0.99);
  CHECK(r.u(0, 0) < 0.15);
}

TEST_CASE("unconstrained 1-D optimum dominates the constrained quotient") {
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 10; ++trial) {
    const RawDataset raw = testutil::random_dataset(rng, 5, 1, 60);
    const CenteredDataset d = centered_from(raw);
    const CovarianceSet cov = covariances(d);

    SolverConfig cfg;
    cfg.n_f = 1;
    cfg.ridge_tau = 0.0;
    const SolverResult con = popls(d, cfg);
    const SolverResult freeu = opls_baseline(d, cfg);

    const double q_con = popls_quotient(cov.cxx, cov.cxy, con.u.col(0), 0.0);
    const double q_free = popls_quotient(cov.cxx, cov.cxy, freeu.u.col(0), 0.0);
    CHECK(q_free >= q_con * (1.0 - 1e-9));
  }
}

TEST_CASE("opls_baseline two solve routes agree") {
  std::mt19937_64 rng(65);
  const RawDataset raw = testutil::random_dataset(rng, 6, 3, 80);
  const CenteredDataset d = centered_from(raw);
  const CovarianceSet cov = covariances(d);
  SolverConfig cfg;
  cfg.n_f = 2;
  cfg.ridge_tau = 0.0;
  const SolverResult r = opls_baseline(d, cfg);

  // Route 2: refit loss through the closed form must match the solver's own.
  const double direct = loss_from_covariances(cov, r.u, r.w);
  const double closed = refit_loss(cov, r.u, 0.0);
  CHECK(direct == doctest::Approx(closed).epsilon(1e-8));
}

TEST_CASE("run_solver dispatches and rejects unknown names") {
  std::mt19937_64 rng(67);
  const RawDataset raw = testutil::random_dataset(rng, 4, 2, 30);
  const CenteredDataset d = centered_from(raw);
  SolverConfig cfg;
  cfg.n_f = 2;
  for (const char* name : {"nopls", "pnopls", "defnopls", "popls", "opls"}) {
    const SolverResult r = run_solver(name, raw, d, cfg);
    CHECK(r.u.rows() == 4);
  }
  CHECK_THROWS_AS(run_solver("bogus", raw, d, cfg), SolverError);
}

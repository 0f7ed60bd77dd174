#include "nnopls/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nnopls {

namespace {

void fix_column_signs(Matrix& vecs) {
  for (std::size_t j = 0; j < vecs.cols(); ++j) {
    std::size_t imax = 0;
    double amax = 0.0;
    for (std::size_t i = 0; i < vecs.rows(); ++i) {
      double a = std::abs(vecs(i, j));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (vecs(imax, j) < 0.0)
      for (std::size_t i = 0; i < vecs.rows(); ++i) vecs(i, j) = -vecs(i, j);
  }
}

} // namespace

EigResult sym_eig(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("sym_eig: non-square");
  const std::size_t n = a.rows();
  Matrix m = a;
  Matrix v = Matrix::identity(n);

  auto offdiag = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += m(i, j) * m(i, j);
    return s;
  };

  const double scale = std::max(1.0, m.max_abs());
  const double tol = 1e-30 * scale * scale * double(n) * double(n);
  for (int sweep = 0; sweep < 100 && offdiag() > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double mip = m(i, p), miq = m(i, q);
          m(i, p) = c * mip - s * miq;
          m(i, q) = s * mip + c * miq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double mpi = m(p, i), mqi = m(q, i);
          m(p, i) = c * mpi - s * mqi;
          m(q, i) = s * mpi + c * mqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return m(i, i) > m(j, j); });

  EigResult r;
  r.values.resize(n);
  r.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    r.values[j] = m(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) r.vectors(i, j) = v(i, order[j]);
  }
  fix_column_signs(r.vectors);
  return r;
}

SvdResult svd(const Matrix& a) {
  const bool transpose = a.rows() < a.cols();
  Matrix w = transpose ? a.transposed() : a; // p >= q
  const std::size_t p = w.rows(), q = w.cols();

  Matrix v = Matrix::identity(q);

  // One-sided Jacobi: orthogonalize the columns of w.
  const double eps = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < q; ++i) {
      for (std::size_t j = i + 1; j < q; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
          alpha += w(k, i) * w(k, i);
          beta += w(k, j) * w(k, j);
          gamma += w(k, i) * w(k, j);
        }
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = c * t;
        for (std::size_t k = 0; k < p; ++k) {
          const double wi = w(k, i), wj = w(k, j);
          w(k, i) = c * wi - s * wj;
          w(k, j) = s * wi + c * wj;
        }
        for (std::size_t k = 0; k < q; ++k) {
          const double vi = v(k, i), vj = v(k, j);
          v(k, i) = c * vi - s * vj;
          v(k, j) = s * vi + c * vj;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(q);
  for (std::size_t j = 0; j < q; ++j) {
    double nrm = 0.0;
    for (std::size_t k = 0; k < p; ++k) nrm += w(k, j) * w(k, j);
    sigma[j] = std::sqrt(nrm);
  }

  std::vector<std::size_t> order(q);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  SvdResult r;
  r.s.resize(q);
  Matrix u(p, q), vv(q, q);
  for (std::size_t j = 0; j < q; ++j) {
    const std::size_t src = order[j];
    r.s[j] = sigma[src];
    const double inv = sigma[src] > 0.0 ? 1.0 / sigma[src] : 0.0;
    for (std::size_t k = 0; k < p; ++k) u(k, j) = w(k, src) * inv;
    for (std::size_t k = 0; k < q; ++k) vv(k, j) = v(k, src);
  }

  if (transpose) {
    r.u = std::move(vv);
    r.v = std::move(u);
  } else {
    r.u = std::move(u);
    r.v = std::move(vv);
  }
  return r;
}

std::optional<Matrix> cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("cholesky: non-square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return std::nullopt;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const Matrix& l, const std::vector<double>& b) {
  const std::size_t n = l.rows();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

Matrix cholesky_solve(const Matrix& l, const Matrix& b) {
  Matrix x(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    x.set_col(j, cholesky_solve(l, b.col(j)));
  return x;
}

EigResult generalized_eig(const Matrix& a, const Matrix& b) {
  auto l = cholesky(b);
  if (!l) throw std::runtime_error("generalized_eig: b not positive definite");
  const std::size_t n = a.rows();

  // c = l^-1 a l^-T
  Matrix c(n, n);
  // First solve L Z = A (column-wise forward substitution), then C = Z L^-T,
  // i.e. solve L C^T = Z^T.
  Matrix z(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> col = a.col(j);
    for (std::size_t i = 0; i < n; ++i) {
      double s = col[i];
      for (std::size_t k = 0; k < i; ++k) s -= (*l)(i, k) * z(k, j);
      z(i, j) = s / (*l)(i, i);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = z(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= (*l)(j, k) * c(i, k);
      c(i, j) = s / (*l)(j, j);
    }
  }
  // Symmetrize against rounding drift.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (c(i, j) + c(j, i));
      c(i, j) = c(j, i) = m;
    }

  EigResult e = sym_eig(c);

  // Back-transform: v = l^-T y
  Matrix vecs(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> y = e.vectors.col(j);
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= (*l)(k, ii) * x[k];
      x[ii] = s / (*l)(ii, ii);
    }
    vecs.set_col(j, x);
  }
  e.vectors = std::move(vecs);
  fix_column_signs(e.vectors);
  return e;
}

} // namespace nnopls

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vpgraph/error.hpp"
#include "vpgraph/rng.hpp"
#include "vpgraph/spectral.hpp"

namespace vpgraph {

namespace {

// Householder reduction to tridiagonal form (after the EISPACK tred2 routine).
// On exit v holds the orthogonal transform, d the diagonal, e the
// subdiagonal in e[1..n-1].
void tridiagonalize(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = v.rows();
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e), accumulating into v (EISPACK tql2).
void tridiagonal_ql(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = v.rows();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::ldexp(1.0, -52);
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 200) throw NumericalError("tridiagonal QL did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          const std::size_t i = ii;
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (std::size_t k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] = d[l] + f;
    e[l] = 0.0;
  }

  // Sort ascending.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t k = i;
    double p = d[i];
    for (std::size_t j = i + 1; j < n; ++j)
      if (d[j] < p) {
        k = j;
        p = d[j];
      }
    if (k != i) {
      d[k] = d[i];
      d[i] = p;
      for (std::size_t j = 0; j < n; ++j) std::swap(v(j, i), v(j, k));
    }
  }
}

double column_dot(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, i) * b(r, j);
  return s;
}

// Orthonormalizes the columns of q in place (classical Gram-Schmidt applied
// twice). Columns that collapse are replaced with fresh random directions.
void orthonormalize(Matrix& q, Rng& rng) {
  const std::size_t n = q.rows();
  const std::size_t p = q.cols();
  for (std::size_t j = 0; j < p; ++j) {
    double original = std::sqrt(column_dot(q, j, q, j));
    for (int attempt = 0; attempt < 4; ++attempt) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < j; ++i) {
          const double c = column_dot(q, i, q, j);
          for (std::size_t r = 0; r < n; ++r) q(r, j) -= c * q(r, i);
        }
      }
      const double norm = std::sqrt(column_dot(q, j, q, j));
      if (norm > 1e-10 * std::max(original, 1e-300) && norm > 1e-280) {
        for (std::size_t r = 0; r < n; ++r) q(r, j) /= norm;
        break;
      }
      for (std::size_t r = 0; r < n; ++r) q(r, j) = uniform01(rng) - 0.5;
      original = std::sqrt(column_dot(q, j, q, j));
      if (attempt == 3) throw NumericalError("orthonormalization failed: subspace larger than operator rank space");
    }
  }
}

}  // namespace

DenseEigen symmetric_eigen_dense(const Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("symmetric_eigen_dense: matrix not square");
  DenseEigen out;
  if (n == 0) return out;
  out.vectors = a;
  out.values.assign(n, 0.0);
  if (n == 1) {
    out.values[0] = a(0, 0);
    out.vectors(0, 0) = 1.0;
    return out;
  }
  std::vector<double> e(n, 0.0);
  tridiagonalize(out.vectors, out.values, e);
  tridiagonal_ql(out.vectors, out.values, e);
  return out;
}

SymmetricOperator as_operator(const SparseMatrix& m) {
  const SparseMatrix* ptr = &m;
  return {m.rows(), [ptr](const Matrix& in, Matrix& out) { out = ptr->multiply(in); }};
}

SymmetricOperator matrix_power_operator(const SparseMatrix& m, unsigned power) {
  const SparseMatrix* ptr = &m;
  return {m.rows(), [ptr, power](const Matrix& in, Matrix& out) {
            out = in;
            for (unsigned k = 0; k < power; ++k) out = ptr->multiply(out);
          }};
}

std::vector<EigenPair> top_eigenpairs(const SparseMatrix& m, std::size_t count, const EigenOptions& opts) {
  if (m.rows() != m.cols() || !m.is_symmetric()) throw InputError("top_eigenpairs: matrix is not symmetric");
  return top_eigenpairs(as_operator(m), count, opts);
}

std::vector<EigenPair> top_eigenpairs(const SymmetricOperator& op, std::size_t count, const EigenOptions& opts) {
  const std::size_t n = op.n;
  if (count < 1 || count > n) throw ConfigError("top_eigenpairs: need 1 <= m <= n");
  if (!(opts.tol > 0.0)) throw ConfigError("top_eigenpairs: tol must be positive");
  const std::size_t p = std::min(n, count + opts.oversample);

  Rng rng = make_rng(opts.seed, "eigensolver");
  Matrix q(n, p);
  for (auto& x : q.data()) x = uniform01(rng) - 0.5;
  orthonormalize(q, rng);

  Matrix y;
  double worst = 0.0;
  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    op.apply(q, y);
    if (y.rows() != n || y.cols() != p) throw std::logic_error("operator returned wrong block shape");

    Matrix h = matmul_tn(q, y);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) {
        const double s = 0.5 * (h(i, j) + h(j, i));
        h(i, j) = s;
        h(j, i) = s;
      }
    DenseEigen eig = symmetric_eigen_dense(h);

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(eig.values[a]) > std::abs(eig.values[b]);
    });
    Matrix u(p, p);
    std::vector<double> ritz(p);
    for (std::size_t c = 0; c < p; ++c) {
      ritz[c] = eig.values[order[c]];
      for (std::size_t r = 0; r < p; ++r) u(r, c) = eig.vectors(r, order[c]);
    }
    Matrix v = matmul(q, u);
    Matrix av = matmul(y, u);

    worst = 0.0;
    for (std::size_t c = 0; c < count; ++c) {
      double res = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = av(r, c) - ritz[c] * v(r, c);
        res += d * d;
      }
      worst = std::max(worst, std::sqrt(res) / std::max(1.0, std::abs(ritz[c])));
    }
    if (worst <= opts.tol) {
      std::vector<EigenPair> out(count);
      for (std::size_t c = 0; c < count; ++c) {
        out[c].value = ritz[c];
        out[c].vector.resize(n);
        double norm = 0.0;
        for (std::size_t r = 0; r < n; ++r) norm += v(r, c) * v(r, c);
        norm = std::sqrt(norm);
        for (std::size_t r = 0; r < n; ++r) out[c].vector[r] = v(r, c) / norm;
      }
      return out;
    }
    q = std::move(av);
    orthonormalize(q, rng);
  }
  throw NumericalError("top_eigenpairs: no convergence after " + std::to_string(opts.max_iter) +
                           " iterations (last relative residual " + std::to_string(worst) + ")",
                       worst);
}

}  // namespace vpgraph

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vpgraph/error.hpp"
#include "vpgraph/spectral.hpp"

namespace vpgraph {

namespace {

double magnitude_ratio(double a, double b) {
  if (b == 0.0) return a == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  return std::abs(a) / std::abs(b);
}

}  // namespace

SeparationReport separation_report(const SymmetricOperator& op, const EigenOptions& opts) {
  const std::size_t m = std::min<std::size_t>(3, op.n);
  const auto pairs = top_eigenpairs(op, m, opts);
  SeparationReport rep;
  rep.lambda1 = pairs[0].value;
  rep.lambda2 = m > 1 ? pairs[1].value : 0.0;
  rep.lambda3 = m > 2 ? pairs[2].value : 0.0;
  rep.gap12 = magnitude_ratio(rep.lambda1, rep.lambda2);
  rep.gap23 = magnitude_ratio(rep.lambda2, rep.lambda3);
  return rep;
}

SeparationReport separation_report(const SparseMatrix& m, const EigenOptions& opts) {
  if (!m.is_symmetric()) throw InputError("separation_report: matrix is not symmetric");
  return separation_report(as_operator(m), opts);
}

SeparationReport separation_report(const PowerOperator& op, const EigenOptions& opts) {
  auto rep = separation_report(op.matrix, opts);
  rep.theta_l1 = op.theta.l1();
  rep.r = op.theta.order();
  return rep;
}

std::vector<int> recover_communities(const SymmetricOperator& op, const EigenOptions& opts) {
  const auto pairs = top_eigenpairs(op, 2, opts);
  std::vector<double> v = pairs[1].vector;
  // A degenerate leading pair leaves the second vector arbitrary within a
  // plane; take the direction in that plane orthogonal to the constant vector.
  const double l1 = std::abs(pairs[0].value), l2 = std::abs(pairs[1].value);
  if (l1 - l2 <= 10.0 * opts.tol * std::max(1.0, l1)) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < op.n; ++i) {
      s0 += pairs[0].vector[i];
      s1 += pairs[1].vector[i];
    }
    if (s0 != 0.0 || s1 != 0.0)
      for (std::size_t i = 0; i < op.n; ++i) v[i] = s0 * pairs[1].vector[i] - s1 * pairs[0].vector[i];
  }
  std::vector<int> labels(op.n);
  for (std::size_t i = 0; i < op.n; ++i) labels[i] = v[i] < 0.0 ? -1 : 1;
  return labels;
}

std::vector<int> recover_communities(const SparseMatrix& m, const EigenOptions& opts) {
  if (!m.is_symmetric()) throw InputError("recover_communities: matrix is not symmetric");
  return recover_communities(as_operator(m), opts);
}

double community_overlap(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("community_overlap: size mismatch");
  long long dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<long long>(a[i]) * b[i];
  return std::abs(static_cast<double>(dot)) / static_cast<double>(a.size());
}

double community_agreement(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("community_agreement: size mismatch");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  const double f = static_cast<double>(same) / static_cast<double>(a.size());
  return std::max(f, 1.0 - f);
}

SparseMatrix sbm_expected_matrix(const std::vector<int>& sigma, double a_intra, double a_inter) {
  const std::size_t n = sigma.size();
  const double nd = static_cast<double>(n);
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d(i, j) = (sigma[i] == sigma[j] ? a_intra : a_inter) / nd;
  return SparseMatrix::from_dense(d);
}

namespace {

void count_paths(const Graph& g, NodeId u, unsigned remaining, std::vector<char>& on_path,
                 std::vector<std::uint64_t>& row) {
  for (NodeId w : g.neighbors(u)) {
    if (on_path[w]) continue;
    if (remaining == 1) {
      ++row[w];
      continue;
    }
    on_path[w] = 1;
    count_paths(g, w, remaining - 1, on_path, row);
    on_path[w] = 0;
  }
}

}  // namespace

std::vector<std::vector<std::uint64_t>> self_avoiding_count_matrix(const Graph& g, unsigned k,
                                                                   std::size_t node_cap) {
  const std::size_t n = g.num_nodes();
  if (n > node_cap)
    throw ConfigError("self_avoiding_count_matrix: " + std::to_string(n) + " nodes exceeds oracle cap " +
                      std::to_string(node_cap));
  if (k > kSelfAvoidingMaxLength) throw ConfigError("self_avoiding_count_matrix: path length above 6");
  std::vector<std::vector<std::uint64_t>> out(n, std::vector<std::uint64_t>(n, 0));
  if (k == 0) return out;
  std::vector<char> on_path(n, 0);
  for (NodeId i = 0; i < n; ++i) {
    on_path[i] = 1;
    count_paths(g, i, k, on_path, out[i]);
    on_path[i] = 0;
  }
  return out;
}

Matrix least_squares(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  if (b.rows() != n) throw std::invalid_argument("least_squares: row mismatch");
  if (n < d) throw std::invalid_argument("least_squares: underdetermined system");
  Matrix r = a;
  Matrix y = b;
  const std::size_t k = y.cols();
  std::vector<double> diag(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += r(i, j) * r(i, j);
    norm = std::sqrt(norm);
    if (norm == 0.0) throw NumericalError("least_squares: rank-deficient feature matrix");
    const double alpha = r(j, j) > 0 ? -norm : norm;
    // Householder vector stored in r(j.., j).
    r(j, j) -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < n; ++i) vnorm2 += r(i, j) * r(i, j);
    for (std::size_t c = j + 1; c < d; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < n; ++i) s += r(i, j) * r(i, c);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = j; i < n; ++i) r(i, c) -= s * r(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < n; ++i) s += r(i, j) * y(i, c);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = j; i < n; ++i) y(i, c) -= s * r(i, j);
    }
    diag[j] = alpha;
  }
  Matrix x(d, k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t jj = d; jj-- > 0;) {
      double s = y(jj, c);
      for (std::size_t t = jj + 1; t < d; ++t) s -= r(jj, t) * x(t, c);
      x(jj, c) = s / diag[jj];
    }
  }
  return x;
}

Prop5Weights prop5_weights(const std::vector<double>& phi1, const std::vector<double>& phi2, double lambda1,
                           double lambda2, const Matrix& features) {
  const std::size_t n = features.rows();
  if (phi1.size() != n || phi2.size() != n) throw std::invalid_argument("prop5_weights: eigenvector length != n");
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw NumericalError("prop5_weights: eigenvalues must be positive");
  if (lambda2 < 1e-8) throw NumericalError("prop5_weights: lambda2 below 1e-8 (ill-conditioned)");

  Matrix target(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    target(i, 0) = phi1[i];
    target(i, 1) = phi2[i];
  }
  Prop5Weights out;
  out.w1 = least_squares(features, target);
  const Matrix fit = matmul(features, out.w1);
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 2; ++c) res += (fit(i, c) - target(i, c)) * (fit(i, c) - target(i, c));
  out.residual = std::sqrt(res);

  out.w2 = Matrix(2, 2);
  const double l12 = lambda1 * lambda2;
  const double l22 = lambda2 * lambda2;
  out.w2(0, 0) = -1.0 / l12;
  out.w2(0, 1) = 1.0 / l12;
  out.w2(1, 0) = 2.0 / l22;
  out.w2(1, 1) = -2.0 / l22;
  return out;
}

}  // namespace vpgraph

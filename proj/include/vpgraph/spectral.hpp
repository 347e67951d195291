#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vpgraph/graph.hpp"
#include "vpgraph/matrix.hpp"
#include "vpgraph/powering.hpp"

namespace vpgraph {

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;  // unit 2-norm
};

struct EigenOptions {
  double tol = 1e-8;
  std::size_t max_iter = 5000;
  std::uint64_t seed = 0;
  // Extra subspace columns beyond the m requested.
  std::size_t oversample = 16;
};

// Applies a symmetric operator to every column of a dense n x p block.
struct SymmetricOperator {
  std::size_t n = 0;
  std::function<void(const Matrix& in, Matrix& out)> apply;
};

SymmetricOperator as_operator(const SparseMatrix& m);
// m applied `power` times.
SymmetricOperator matrix_power_operator(const SparseMatrix& m, unsigned power);

// Leading m eigenpairs by |value|, descending. Subspace iteration with
// Gram-Schmidt orthonormalization and a Rayleigh-Ritz projection every step.
// Converged when ||Mv - lambda v|| <= tol * max(1, |lambda|) for all m pairs.
// Throws NumericalError (carrying the last worst residual) after max_iter, and
// InputError for a non-symmetric sparse input.
std::vector<EigenPair> top_eigenpairs(const SparseMatrix& m, std::size_t count, const EigenOptions& opts = {});
std::vector<EigenPair> top_eigenpairs(const SymmetricOperator& op, std::size_t count, const EigenOptions& opts = {});

// Full eigendecomposition of a small dense symmetric matrix (Householder
// tridiagonalization + implicit QL). Values ascending; vectors are columns.
struct DenseEigen {
  std::vector<double> values;
  Matrix vectors;
};
DenseEigen symmetric_eigen_dense(const Matrix& a);

struct SeparationReport {
  double lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0;  // signed, |l1| >= |l2| >= |l3|
  double gap12 = 0.0;                                  // |l1|/|l2|; inf or NaN when |l2| = 0
  double gap23 = 0.0;
  double theta_l1 = 0.0;
  unsigned r = 0;
};

SeparationReport separation_report(const SymmetricOperator& op, const EigenOptions& opts = {});
SeparationReport separation_report(const SparseMatrix& m, const EigenOptions& opts = {});
// Records ||theta||_1 and r of the operator.
SeparationReport separation_report(const PowerOperator& op, const EigenOptions& opts = {});

// Sign of the second-by-magnitude eigenvector; zero entries map to +1.
std::vector<int> recover_communities(const SymmetricOperator& op, const EigenOptions& opts = {});
std::vector<int> recover_communities(const SparseMatrix& m, const EigenOptions& opts = {});

// |<a, b>| / n for +-1 vectors.
double community_overlap(const std::vector<int>& a, const std::vector<int>& b);
// max(agree, 1 - agree): fraction correctly split up to a global flip.
double community_agreement(const std::vector<int>& a, const std::vector<int>& b);

// Dense E[A] of a two-community SBM given community signs: a_intra/n within,
// a_inter/n across, diagonal included (exactly rank 2).
SparseMatrix sbm_expected_matrix(const std::vector<int>& sigma, double a_intra, double a_inter);

inline constexpr std::size_t kSelfAvoidingNodeCap = 64;
inline constexpr unsigned kSelfAvoidingMaxLength = 6;

// [A^[k]]_ij = number of self-avoiding paths with exactly k edges from i to j
// (diagonal 0). Exhaustive DFS; refuses graphs above the node cap or k above 6.
std::vector<std::vector<std::uint64_t>> self_avoiding_count_matrix(const Graph& g, unsigned k,
                                                                   std::size_t node_cap = kSelfAvoidingNodeCap);

struct Prop5Weights {
  Matrix w1;  // d x 2, least squares solution of X W1 = [phi1 phi2]
  Matrix w2;  // 2 x 2
  double residual = 0.0;  // ||X W1 - [phi1 phi2]||_F
};

// Two-layer weights that turn the leading eigenpairs of an operator into class
// scores. W2 = [[-1/(l1 l2), 1/(l1 l2)], [2/l2^2, -2/l2^2]]. Throws
// NumericalError when l2 < 1e-8 or either eigenvalue is not positive.
Prop5Weights prop5_weights(const std::vector<double>& phi1, const std::vector<double>& phi2, double lambda1,
                           double lambda2, const Matrix& features);

// Least-squares solve of min ||A x - B||_F by Householder QR; A is n x d, n >= d.
Matrix least_squares(const Matrix& a, const Matrix& b);

}  // namespace vpgraph

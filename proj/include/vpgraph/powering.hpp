#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "vpgraph/graph.hpp"
#include "vpgraph/matrix.hpp"

namespace vpgraph {

// The exact-distance adjacency stack A_0..A_r of one graph, stored as a single
// compressed row structure over all off-diagonal pairs at distance 1..r. Each
// entry carries its distance and a "kept" flag; the flags define the pruned
// stack after sparsify(). A_0 is the identity and is never stored.
class DistanceAdjacencyFamily {
 public:
  DistanceAdjacencyFamily() = default;

  std::size_t num_nodes() const { return n_; }
  std::uint16_t order() const { return r_; }
  bool is_pruned() const { return pruned_; }

  std::size_t num_entries() const { return cols_.size(); }
  std::span<const NodeId> row_cols(NodeId i) const {
    return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const std::uint16_t> row_dist(NodeId i) const {
    return {dist_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const std::uint8_t> row_kept(NodeId i) const {
    return {kept_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  // A_k (pruned = false) or the sparsified A_k (pruned = true) as a 0/1 matrix.
  // k = 0 gives the identity either way.
  SparseMatrix adjacency(std::uint16_t k, bool pruned = false) const;
  // Number of ordered (i, j) pairs in the support of A_k / pruned A_k.
  std::size_t support_size(std::uint16_t k, bool pruned = false) const;

  // Copy with the given per-entry kept flags (distance-1 entries are forced
  // to kept); the copy reports is_pruned().
  DistanceAdjacencyFamily with_kept(std::vector<std::uint8_t> kept) const;

  friend DistanceAdjacencyFamily distance_adjacency_family(const Graph& g, std::uint16_t r);

 private:
  std::size_t n_ = 0;
  std::uint16_t r_ = 0;
  bool pruned_ = false;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<NodeId> cols_;
  std::vector<std::uint16_t> dist_;
  std::vector<std::uint8_t> kept_;
};

// One bounded BFS per node. r >= 1.
DistanceAdjacencyFamily distance_adjacency_family(const Graph& g, std::uint16_t r);

// Connects every pair at distance <= k.
Graph powered_graph(const Graph& g, std::uint16_t k);

enum class Aloofness { kCosine, kEuclidean };

inline constexpr double kKeepAll = std::numeric_limits<double>::infinity();

// Candidate and kept far-edge counts per degree decile (decile 0 = lowest
// original degree). Counts are per nominating node.
struct SparsifyStats {
  std::vector<std::size_t> candidates_by_decile = std::vector<std::size_t>(10, 0);
  std::vector<std::size_t> kept_by_decile = std::vector<std::size_t>(10, 0);
  std::size_t far_candidates = 0;
  std::size_t far_kept = 0;
};

// Keeps every distance-1 entry. Each node ranks its far (distance >= 2)
// candidates by ascending aloofness to its own feature row (ties: smaller id)
// and nominates the first ceil(budget_factor * degree) of them; a far pair
// survives when either endpoint nominates it. budget_factor = kKeepAll keeps
// everything. `graph` supplies the original degrees.
DistanceAdjacencyFamily sparsify(const DistanceAdjacencyFamily& family, const Graph& graph,
                                 const SparseMatrix& features, Aloofness phi, double budget_factor,
                                 SparsifyStats* stats = nullptr);

double aloofness(const SparseMatrix& features, NodeId i, NodeId j, Aloofness phi);

class ThetaVector {
 public:
  ThetaVector() = default;
  explicit ThetaVector(std::vector<double> values);

  // theta_0 = 0, theta_1 = 1, theta_k = far_init for k >= 2.
  static ThetaVector vpn_default(std::uint16_t r, double far_init = 1e-3);
  static ThetaVector ones(std::uint16_t r);

  std::size_t size() const { return values_.size(); }
  std::uint16_t order() const { return static_cast<std::uint16_t>(values_.size() - 1); }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double l1() const;

  bool operator==(const ThetaVector&) const = default;

 private:
  std::vector<double> values_;
};

// sum_k theta_k * (pruned) A_k. `family` is referenced, not owned.
struct PowerOperator {
  SparseMatrix matrix;
  ThetaVector theta;
  const DistanceAdjacencyFamily* family = nullptr;
};

// Uses the pruned entries when the family has been sparsified. Every stored
// pair (plus the diagonal) is a structural entry, even when its weight is 0.
PowerOperator assemble_power_operator(const DistanceAdjacencyFamily& family, const ThetaVector& theta);

// D^{-1/2} (I + M) D^{-1/2} with D_ii = 1 + degree of i in `original`.
SparseMatrix vpn_convolution(const PowerOperator& op, const Graph& original);

// D~^{-1/2} (I + A) D~^{-1/2}, D~_ii = 1 + degree(i).
SparseMatrix vanilla_gcn_convolution(const Graph& g);

// counts[d] for d < bin_cap; counts[bin_cap] collects every degree >= bin_cap.
std::vector<std::size_t> degree_histogram(const Graph& g, std::size_t bin_cap);

// Fixed-pattern form of the VPN operator for training: the normalized value of
// every stored entry is scale * (delta_ij + theta_k), so re-assembly for new
// theta is one pass and d(operator)/d(theta_k) is the normalized k-slice.
class VpnOperatorBuilder {
 public:
  VpnOperatorBuilder(const DistanceAdjacencyFamily& family, const Graph& original);

  std::uint16_t order() const { return r_; }
  SparseMatrix assemble(const ThetaVector& theta) const;

  // For the bilinear form L = sum_ij A_ij <left_i, right_j>, returns
  // dL/dtheta_k for k = 0..r.
  std::vector<double> theta_gradient(const Matrix& left, const Matrix& right) const;

 private:
  std::uint16_t r_;
  SparseMatrix pattern_;                 // values hold the normalization scale
  std::vector<std::uint16_t> distance_;  // per stored entry, 0 on the diagonal
};

}  // namespace vpgraph

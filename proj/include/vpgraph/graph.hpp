#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vpgraph/matrix.hpp"

namespace vpgraph {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Immutable simple undirected graph in compressed sorted-neighbor form.
class Graph {
 public:
  Graph() : offsets_{0} {}
  explicit Graph(std::size_t n) : n_(n), offsets_(n + 1, 0) {}

  // Builds from an undirected edge list; self-loops and duplicates (in either
  // orientation) are dropped. Ids must be < n.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges, std::size_t* dropped = nullptr);

  std::size_t num_nodes() const { return n_; }
  std::size_t num_edges() const { return adj_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {adj_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }
  bool has_edge(NodeId i, NodeId j) const;

  // Canonical edge list: (i, j) with i < j, lexicographically sorted.
  std::vector<Edge> edge_list() const;
  double mean_degree() const;

  // Symmetry, sortedness, no self-loops, no duplicates.
  bool check_invariants() const;

  // Adjacency matrix with unit weights.
  SparseMatrix adjacency() const;

  bool operator==(const Graph& other) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> adj_;
};

inline constexpr std::int32_t kUnlabeled = -1;

struct Splits {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
};

struct NodeData {
  SparseMatrix features;             // n x d
  std::vector<std::int32_t> labels;  // class id or kUnlabeled
  std::size_t num_classes = 0;
  Splits splits;
  std::string name;

  // Disjoint splits within [0, n) and every train node labeled.
  void validate(std::size_t n) const;
};

struct Dataset {
  Graph graph;
  NodeData data;
  std::size_t dropped_edge_lines = 0;  // self-loops and duplicates skipped on load
};

// Reads the plain-text bundle directory (edges.txt, features.txt, labels.txt,
// splits.txt, meta.txt).
Dataset load_graph_text(const std::string& dir);

// Writes a bundle that load_graph_text reads back.
void write_graph_text(const std::string& dir, const Graph& g, const NodeData& data);

class SbmParams {
 public:
  // Throws ConfigError when a/n falls outside [0, 1], k < 1, or n not divisible
  // into k equal communities.
  SbmParams(std::size_t n, std::size_t k, double a_intra, double a_inter, std::uint64_t seed);

  std::size_t n() const { return n_; }
  std::size_t k() const { return k_; }
  double a_intra() const { return a_intra_; }
  double a_inter() const { return a_inter_; }
  std::uint64_t seed() const { return seed_; }
  double p_intra() const { return a_intra_ / static_cast<double>(n_); }
  double p_inter() const { return a_inter_ / static_cast<double>(n_); }
  double xi1() const { return (a_intra_ + a_inter_) / 2.0; }
  double xi2() const { return (a_intra_ - a_inter_) / 2.0; }
  // xi2^2 / xi1; weak recovery is possible above 1.
  double snr() const { return xi1() > 0 ? xi2() * xi2() / xi1() : 0.0; }

 private:
  std::size_t n_;
  std::size_t k_;
  double a_intra_;
  double a_inter_;
  std::uint64_t seed_;
};

struct SbmSample {
  Graph graph;
  std::vector<std::int32_t> community;  // 0..k-1
  // +1 / -1 per node for k = 2 (community 0 -> +1).
  std::vector<int> sigma() const;
};

SbmSample sbm_generate(const SbmParams& params);

inline constexpr std::uint16_t kUnreachable = std::numeric_limits<std::uint16_t>::max();

// Unweighted shortest-path distances from `source` truncated at r; nodes
// farther than r are kUnreachable. Only nodes within distance r are visited.
std::vector<std::uint16_t> bounded_bfs(const Graph& g, NodeId source, std::uint16_t r);

// Same, seeded from several sources at distance 0.
std::vector<std::uint16_t> bounded_bfs_multi(const Graph& g, std::span<const NodeId> sources, std::uint16_t r);

// Reusable scratch for many bounded BFS calls on one graph. visit() returns the
// reached nodes in BFS order with their distances.
class BfsScratch {
 public:
  explicit BfsScratch(std::size_t n) : dist_(n, kUnreachable) {}
  struct Reached {
    std::span<const NodeId> nodes;
    const std::vector<std::uint16_t>& dist;
  };
  Reached visit(const Graph& g, NodeId source, std::uint16_t r);

 private:
  std::vector<std::uint16_t> dist_;
  std::vector<NodeId> queue_;
};

// Edge (i, j) maps to (perm[i], perm[j]). Throws InputError if perm is not a
// bijection on [0, n).
Graph permute_graph(const Graph& g, std::span<const NodeId> perm);
std::vector<NodeId> inverse_permutation(std::span<const NodeId> perm);

// Small fixed graphs used across tests and examples.
Graph path_graph(std::size_t n);
Graph cycle_graph(std::size_t n);
Graph complete_graph(std::size_t n);
Graph star_graph(std::size_t leaves);
// G(n, p) with every pair drawn once.
Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed);

}  // namespace vpgraph

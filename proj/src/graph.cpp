#include "vpgraph/graph.hpp"

#include <algorithm>
#include <numeric>

#include "vpgraph/error.hpp"
#include "vpgraph/rng.hpp"

namespace vpgraph {

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges, std::size_t* dropped) {
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  std::size_t skipped = 0;
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw InputError("edge endpoint out of range: " + std::to_string(std::max(a, b)));
    if (a == b) {
      ++skipped;
      continue;
    }
    canon.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(canon.begin(), canon.end());
  const auto last = std::unique(canon.begin(), canon.end());
  skipped += static_cast<std::size_t>(canon.end() - last);
  canon.erase(last, canon.end());
  if (dropped) *dropped = skipped;

  Graph g(n);
  for (auto [a, b] : canon) {
    ++g.offsets_[a + 1];
    ++g.offsets_[b + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.adj_.resize(g.offsets_[n]);
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (auto [a, b] : canon) {
    g.adj_[cursor[a]++] = b;
    g.adj_[cursor[b]++] = a;
  }
  for (std::size_t i = 0; i < n; ++i) std::sort(g.adj_.begin() + g.offsets_[i], g.adj_.begin() + g.offsets_[i + 1]);
  return g;
}

bool Graph::has_edge(NodeId i, NodeId j) const {
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId i = 0; i < n_; ++i)
    for (NodeId j : neighbors(i))
      if (i < j) out.emplace_back(i, j);
  return out;
}

double Graph::mean_degree() const {
  return n_ == 0 ? 0.0 : static_cast<double>(adj_.size()) / static_cast<double>(n_);
}

bool Graph::check_invariants() const {
  if (offsets_.size() != n_ + 1 || offsets_.back() != adj_.size()) return false;
  for (NodeId i = 0; i < n_; ++i) {
    auto nb = neighbors(i);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (nb[k] >= n_ || nb[k] == i) return false;
      if (k > 0 && nb[k - 1] >= nb[k]) return false;
      if (!has_edge(nb[k], i)) return false;
    }
  }
  return true;
}

SparseMatrix Graph::adjacency() const {
  std::vector<std::uint32_t> cols(adj_.begin(), adj_.end());
  return SparseMatrix(n_, n_, offsets_, std::move(cols), std::vector<double>(adj_.size(), 1.0));
}

void NodeData::validate(std::size_t n) const {
  if (features.rows() != n)
    throw InputError("feature rows (" + std::to_string(features.rows()) + ") != n (" + std::to_string(n) + ")");
  if (labels.size() != n) throw InputError("label vector length != n");
  for (auto l : labels)
    if (l != kUnlabeled && (l < 0 || static_cast<std::size_t>(l) >= num_classes))
      throw InputError("label outside declared class count: " + std::to_string(l));
  std::vector<char> seen(n, 0);
  auto mark = [&](const std::vector<NodeId>& idx, const char* which) {
    for (auto i : idx) {
      if (i >= n) throw InputError(std::string(which) + " index out of range: " + std::to_string(i));
      if (seen[i]) throw InputError(std::string(which) + " index overlaps another split: " + std::to_string(i));
      seen[i] = 1;
    }
  };
  mark(splits.train, "train");
  mark(splits.val, "val");
  mark(splits.test, "test");
  for (auto i : splits.train)
    if (labels[i] == kUnlabeled) throw InputError("train node without label: " + std::to_string(i));
}

SbmParams::SbmParams(std::size_t n, std::size_t k, double a_intra, double a_inter, std::uint64_t seed)
    : n_(n), k_(k), a_intra_(a_intra), a_inter_(a_inter), seed_(seed) {
  if (n == 0 || k == 0) throw ConfigError("SBM: n and k must be positive");
  if (n % k != 0) throw ConfigError("SBM: n must split evenly into k communities");
  const double nd = static_cast<double>(n);
  auto ok = [nd](double a) { return a >= 0.0 && a / nd <= 1.0; };
  if (!ok(a_intra) || !ok(a_inter)) throw ConfigError("SBM: connection probability a/n outside [0, 1]");
}

std::vector<int> SbmSample::sigma() const {
  std::vector<int> s(community.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = community[i] == 0 ? 1 : -1;
  return s;
}

SbmSample sbm_generate(const SbmParams& params) {
  const std::size_t n = params.n();
  Rng rng = make_rng(params.seed(), "sbm");

  // Balanced random partition: shuffle block labels.
  std::vector<std::int32_t> community(n);
  for (std::size_t i = 0; i < n; ++i) community[i] = static_cast<std::int32_t>(i / (n / params.k()));
  for (std::size_t i = n; i > 1; --i) std::swap(community[i - 1], community[uniform_index(rng, i)]);

  const double p_in = params.p_intra();
  const double p_out = params.p_inter();
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double p = community[i] == community[j] ? p_in : p_out;
      if (uniform01(rng) < p) edges.emplace_back(i, j);
    }
  }
  return {Graph::from_edges(n, edges), std::move(community)};
}

BfsScratch::Reached BfsScratch::visit(const Graph& g, NodeId source, std::uint16_t r) {
  for (NodeId v : queue_) dist_[v] = kUnreachable;
  queue_.clear();
  dist_[source] = 0;
  queue_.push_back(source);
  for (std::size_t head = 0; head < queue_.size(); ++head) {
    const NodeId u = queue_[head];
    const std::uint16_t du = dist_[u];
    if (du >= r) continue;
    for (NodeId w : g.neighbors(u)) {
      if (dist_[w] != kUnreachable) continue;
      dist_[w] = static_cast<std::uint16_t>(du + 1);
      queue_.push_back(w);
    }
  }
  return {queue_, dist_};
}

std::vector<std::uint16_t> bounded_bfs(const Graph& g, NodeId source, std::uint16_t r) {
  const NodeId src[] = {source};
  return bounded_bfs_multi(g, src, r);
}

std::vector<std::uint16_t> bounded_bfs_multi(const Graph& g, std::span<const NodeId> sources, std::uint16_t r) {
  std::vector<std::uint16_t> dist(g.num_nodes(), kUnreachable);
  std::vector<NodeId> queue;
  for (NodeId s : sources) {
    if (s >= g.num_nodes()) throw InputError("BFS source out of range");
    if (dist[s] == 0) continue;
    dist[s] = 0;
    queue.push_back(s);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId u = queue[head];
    if (dist[u] >= r) continue;
    for (NodeId w : g.neighbors(u)) {
      if (dist[w] != kUnreachable) continue;
      dist[w] = static_cast<std::uint16_t>(dist[u] + 1);
      queue.push_back(w);
    }
  }
  return dist;
}

std::vector<NodeId> inverse_permutation(std::span<const NodeId> perm) {
  std::vector<NodeId> inv(perm.size(), 0);
  std::vector<char> seen(perm.size(), 0);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= perm.size() || seen[perm[i]]) throw InputError("permutation is not a bijection");
    seen[perm[i]] = 1;
    inv[perm[i]] = static_cast<NodeId>(i);
  }
  return inv;
}

Graph permute_graph(const Graph& g, std::span<const NodeId> perm) {
  if (perm.size() != g.num_nodes()) throw InputError("permutation length != n");
  inverse_permutation(perm);  // validates bijectivity
  std::vector<Edge> edges;
  edges.reserve(g.num_edges());
  for (auto [a, b] : g.edge_list()) edges.emplace_back(perm[a], perm[b]);
  return Graph::from_edges(g.num_nodes(), edges);
}

Graph path_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph::from_edges(n, e);
}

Graph cycle_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) e.emplace_back(i, static_cast<NodeId>((i + 1) % n));
  return Graph::from_edges(n, e);
}

Graph complete_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

Graph star_graph(std::size_t leaves) {
  std::vector<Edge> e;
  for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return Graph::from_edges(leaves + 1, e);
}

Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  Rng rng = make_rng(seed, "erdos_renyi");
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) e.emplace_back(i, j);
  return Graph::from_edges(n, e);
}

}  // namespace vpgraph

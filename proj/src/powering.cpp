#include "vpgraph/powering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vpgraph/error.hpp"

namespace vpgraph {

DistanceAdjacencyFamily distance_adjacency_family(const Graph& g, std::uint16_t r) {
  if (r < 1) throw ConfigError("power order r must be >= 1");
  if (r == kUnreachable) throw ConfigError("power order too large");
  DistanceAdjacencyFamily fam;
  fam.n_ = g.num_nodes();
  fam.r_ = r;
  fam.row_ptr_.assign(fam.n_ + 1, 0);

  BfsScratch scratch(fam.n_);
  std::vector<std::pair<NodeId, std::uint16_t>> row;
  for (NodeId i = 0; i < fam.n_; ++i) {
    auto reached = scratch.visit(g, i, r);
    row.clear();
    for (NodeId v : reached.nodes)
      if (v != i) row.emplace_back(v, reached.dist[v]);
    std::sort(row.begin(), row.end());
    for (auto [v, d] : row) {
      fam.cols_.push_back(v);
      fam.dist_.push_back(d);
    }
    fam.row_ptr_[i + 1] = fam.cols_.size();
  }
  fam.kept_.assign(fam.cols_.size(), 1);
  return fam;
}

SparseMatrix DistanceAdjacencyFamily::adjacency(std::uint16_t k, bool pruned) const {
  if (k > r_) throw std::invalid_argument("adjacency: k exceeds family order");
  if (k == 0) return SparseMatrix::identity(n_);
  std::vector<std::size_t> rp(n_ + 1, 0);
  std::vector<std::uint32_t> ci;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      if (dist_[p] == k && (!pruned || kept_[p])) ci.push_back(cols_[p]);
    rp[i + 1] = ci.size();
  }
  const std::size_t nnz = ci.size();
  return SparseMatrix(n_, n_, std::move(rp), std::move(ci), std::vector<double>(nnz, 1.0));
}

std::size_t DistanceAdjacencyFamily::support_size(std::uint16_t k, bool pruned) const {
  if (k == 0) return n_;
  std::size_t c = 0;
  for (std::size_t p = 0; p < dist_.size(); ++p)
    if (dist_[p] == k && (!pruned || kept_[p])) ++c;
  return c;
}

DistanceAdjacencyFamily DistanceAdjacencyFamily::with_kept(std::vector<std::uint8_t> kept) const {
  if (kept.size() != cols_.size()) throw std::invalid_argument("with_kept: mask length mismatch");
  DistanceAdjacencyFamily out = *this;
  for (std::size_t p = 0; p < kept.size(); ++p)
    if (dist_[p] == 1) kept[p] = 1;
  out.kept_ = std::move(kept);
  out.pruned_ = true;
  return out;
}

Graph powered_graph(const Graph& g, std::uint16_t k) {
  if (k < 1) throw ConfigError("powered_graph: k must be >= 1");
  const auto fam = distance_adjacency_family(g, k);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < fam.num_nodes(); ++i)
    for (NodeId j : fam.row_cols(i))
      if (i < j) edges.emplace_back(i, j);
  return Graph::from_edges(g.num_nodes(), edges);
}

double aloofness(const SparseMatrix& features, NodeId i, NodeId j, Aloofness phi) {
  auto ci = features.row_cols(i);
  auto vi = features.row_values(i);
  auto cj = features.row_cols(j);
  auto vj = features.row_values(j);
  double dot = 0.0, ni = 0.0, nj = 0.0, sq = 0.0;
  std::size_t a = 0, b = 0;
  while (a < ci.size() || b < cj.size()) {
    if (b == cj.size() || (a < ci.size() && ci[a] < cj[b])) {
      ni += vi[a] * vi[a];
      sq += vi[a] * vi[a];
      ++a;
    } else if (a == ci.size() || cj[b] < ci[a]) {
      nj += vj[b] * vj[b];
      sq += vj[b] * vj[b];
      ++b;
    } else {
      dot += vi[a] * vj[b];
      ni += vi[a] * vi[a];
      nj += vj[b] * vj[b];
      const double d = vi[a] - vj[b];
      sq += d * d;
      ++a;
      ++b;
    }
  }
  if (phi == Aloofness::kEuclidean) return std::sqrt(sq);
  // Cosine similarity is undefined for a zero row; treat it as maximally aloof.
  if (ni == 0.0 || nj == 0.0) return 2.0;
  return 1.0 - dot / (std::sqrt(ni) * std::sqrt(nj));
}

DistanceAdjacencyFamily sparsify(const DistanceAdjacencyFamily& family, const Graph& graph,
                                 const SparseMatrix& features, Aloofness phi, double budget_factor,
                                 SparsifyStats* stats) {
  const std::size_t n = family.num_nodes();
  if (features.rows() != n) throw InputError("sparsify: feature rows != n");
  if (graph.num_nodes() != n) throw InputError("sparsify: graph size != family size");
  if (!(budget_factor >= 0.0)) throw ConfigError("sparsify: budget_factor must be >= 0");

  std::vector<std::uint8_t> nominated(family.num_entries(), 0);
  std::vector<std::size_t> row_start(n + 1, 0);
  for (NodeId i = 0; i < n; ++i) row_start[i + 1] = row_start[i] + family.row_cols(i).size();

  // Degree deciles by rank, for the audit counts.
  std::vector<std::size_t> decile(n, 0);
  {
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](NodeId a, NodeId b) { return graph.degree(a) < graph.degree(b); });
    for (std::size_t rank = 0; rank < n; ++rank) decile[order[rank]] = std::min<std::size_t>(9, rank * 10 / n);
  }
  SparsifyStats local;

  struct Candidate {
    double score;
    NodeId node;
    std::size_t slot;
  };
  std::vector<Candidate> cand;
  for (NodeId i = 0; i < n; ++i) {
    auto cols = family.row_cols(i);
    auto dist = family.row_dist(i);
    cand.clear();
    for (std::size_t p = 0; p < cols.size(); ++p)
      if (dist[p] >= 2) cand.push_back({0.0, cols[p], row_start[i] + p});
    local.candidates_by_decile[decile[i]] += cand.size();
    local.far_candidates += cand.size();

    std::size_t budget = cand.size();
    if (std::isfinite(budget_factor)) {
      const double want = std::ceil(budget_factor * static_cast<double>(graph.degree(i)));
      budget = std::min(cand.size(), static_cast<std::size_t>(want));
    }
    if (budget == 0) continue;
    if (budget < cand.size()) {
      for (auto& c : cand) c.score = aloofness(features, i, c.node, phi);
      std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
        return a.score != b.score ? a.score < b.score : a.node < b.node;
      });
    }
    for (std::size_t t = 0; t < budget; ++t) nominated[cand[t].slot] = 1;
    local.kept_by_decile[decile[i]] += budget;
  }

  // Survive if nominated from either side: mirror the flags.
  std::vector<std::uint8_t> kept(family.num_entries(), 0);
  for (NodeId i = 0; i < n; ++i) {
    auto cols = family.row_cols(i);
    auto dist = family.row_dist(i);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const std::size_t slot = row_start[i] + p;
      if (dist[p] == 1) {
        kept[slot] = 1;
        continue;
      }
      if (!nominated[slot]) continue;
      kept[slot] = 1;
      const NodeId j = cols[p];
      auto jcols = family.row_cols(j);
      const auto it = std::lower_bound(jcols.begin(), jcols.end(), i);
      kept[row_start[j] + static_cast<std::size_t>(it - jcols.begin())] = 1;
    }
  }
  for (NodeId i = 0; i < n; ++i) {
    auto dist = family.row_dist(i);
    for (std::size_t p = 0; p < dist.size(); ++p)
      if (dist[p] >= 2 && kept[row_start[i] + p]) ++local.far_kept;
  }
  if (stats) *stats = local;
  return family.with_kept(std::move(kept));
}

ThetaVector::ThetaVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ConfigError("theta must have at least one entry");
  for (double v : values_)
    if (!std::isfinite(v)) throw ConfigError("theta entries must be finite");
}

ThetaVector ThetaVector::vpn_default(std::uint16_t r, double far_init) {
  std::vector<double> v(static_cast<std::size_t>(r) + 1, far_init);
  v[0] = 0.0;
  if (r >= 1) v[1] = 1.0;
  return ThetaVector(std::move(v));
}

ThetaVector ThetaVector::ones(std::uint16_t r) {
  return ThetaVector(std::vector<double>(static_cast<std::size_t>(r) + 1, 1.0));
}

double ThetaVector::l1() const {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s;
}

PowerOperator assemble_power_operator(const DistanceAdjacencyFamily& family, const ThetaVector& theta) {
  if (theta.size() != static_cast<std::size_t>(family.order()) + 1)
    throw ConfigError("theta length " + std::to_string(theta.size()) + " != r + 1 = " +
                      std::to_string(family.order() + 1));
  const std::size_t n = family.num_nodes();
  const bool pruned = family.is_pruned();
  std::vector<std::size_t> rp(n + 1, 0);
  std::vector<std::uint32_t> ci;
  std::vector<double> v;
  ci.reserve(family.num_entries() + n);
  v.reserve(family.num_entries() + n);
  for (NodeId i = 0; i < n; ++i) {
    auto cols = family.row_cols(i);
    auto dist = family.row_dist(i);
    auto kept = family.row_kept(i);
    bool diag_done = false;
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (!diag_done && cols[p] > i) {
        ci.push_back(i);
        v.push_back(theta[0]);
        diag_done = true;
      }
      if (pruned && !kept[p]) continue;
      ci.push_back(cols[p]);
      v.push_back(theta[dist[p]]);
    }
    if (!diag_done) {
      ci.push_back(i);
      v.push_back(theta[0]);
    }
    rp[i + 1] = ci.size();
  }
  return {SparseMatrix(n, n, std::move(rp), std::move(ci), std::move(v)), theta, &family};
}

namespace {

std::vector<double> inv_sqrt_renormalized_degree(const Graph& g) {
  std::vector<double> s(g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) s[i] = 1.0 / std::sqrt(1.0 + static_cast<double>(g.degree(i)));
  return s;
}

}  // namespace

SparseMatrix vpn_convolution(const PowerOperator& op, const Graph& original) {
  const std::size_t n = op.matrix.rows();
  if (original.num_nodes() != n) throw InputError("vpn_convolution: operator and graph sizes differ");
  const auto s = inv_sqrt_renormalized_degree(original);
  std::vector<double> vals = op.matrix.values();
  const auto& rp = op.matrix.row_ptr();
  const auto& ci = op.matrix.col_idx();
  std::vector<Triplet> extra;
  for (std::size_t i = 0; i < n; ++i) {
    bool diag = false;
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
      const std::size_t j = ci[p];
      const double delta = i == j ? 1.0 : 0.0;
      diag = diag || i == j;
      vals[p] = (delta + vals[p]) * (s[i] * s[j]);
    }
    if (!diag) extra.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 1.0 * (s[i] * s[i])});
  }
  SparseMatrix out(n, n, rp, ci, std::move(vals));
  if (extra.empty()) return out;
  std::vector<Triplet> all = std::move(extra);
  for (std::size_t i = 0; i < n; ++i) {
    auto cols = out.row_cols(i);
    auto v = out.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      all.push_back({static_cast<std::uint32_t>(i), cols[k], v[k]});
  }
  return SparseMatrix::from_triplets(n, n, std::move(all));
}

SparseMatrix vanilla_gcn_convolution(const Graph& g) {
  const std::size_t n = g.num_nodes();
  const auto s = inv_sqrt_renormalized_degree(g);
  std::vector<std::size_t> rp(n + 1, 0);
  std::vector<std::uint32_t> ci;
  std::vector<double> v;
  ci.reserve(2 * g.num_edges() + n);
  v.reserve(2 * g.num_edges() + n);
  for (NodeId i = 0; i < n; ++i) {
    bool diag_done = false;
    for (NodeId j : g.neighbors(i)) {
      if (!diag_done && j > i) {
        ci.push_back(i);
        v.push_back((1.0 + 0.0) * (s[i] * s[i]));
        diag_done = true;
      }
      ci.push_back(j);
      v.push_back((0.0 + 1.0) * (s[i] * s[j]));
    }
    if (!diag_done) {
      ci.push_back(i);
      v.push_back((1.0 + 0.0) * (s[i] * s[i]));
    }
    rp[i + 1] = ci.size();
  }
  return SparseMatrix(n, n, std::move(rp), std::move(ci), std::move(v));
}

std::vector<std::size_t> degree_histogram(const Graph& g, std::size_t bin_cap) {
  if (bin_cap < 1) throw ConfigError("degree_histogram: bin_cap must be >= 1");
  std::vector<std::size_t> counts(bin_cap + 1, 0);
  for (NodeId i = 0; i < g.num_nodes(); ++i) ++counts[std::min(g.degree(i), bin_cap)];
  return counts;
}

VpnOperatorBuilder::VpnOperatorBuilder(const DistanceAdjacencyFamily& family, const Graph& original)
    : r_(family.order()) {
  const std::size_t n = family.num_nodes();
  if (original.num_nodes() != n) throw InputError("VpnOperatorBuilder: family and graph sizes differ");
  const auto s = inv_sqrt_renormalized_degree(original);
  const bool pruned = family.is_pruned();
  std::vector<std::size_t> rp(n + 1, 0);
  std::vector<std::uint32_t> ci;
  std::vector<double> scale;
  for (NodeId i = 0; i < n; ++i) {
    auto cols = family.row_cols(i);
    auto dist = family.row_dist(i);
    auto kept = family.row_kept(i);
    bool diag_done = false;
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (!diag_done && cols[p] > i) {
        ci.push_back(i);
        scale.push_back(s[i] * s[i]);
        distance_.push_back(0);
        diag_done = true;
      }
      if (pruned && !kept[p]) continue;
      ci.push_back(cols[p]);
      scale.push_back(s[i] * s[cols[p]]);
      distance_.push_back(dist[p]);
    }
    if (!diag_done) {
      ci.push_back(i);
      scale.push_back(s[i] * s[i]);
      distance_.push_back(0);
    }
    rp[i + 1] = ci.size();
  }
  pattern_ = SparseMatrix(n, n, std::move(rp), std::move(ci), std::move(scale));
}

SparseMatrix VpnOperatorBuilder::assemble(const ThetaVector& theta) const {
  if (theta.size() != static_cast<std::size_t>(r_) + 1) throw ConfigError("VpnOperatorBuilder: theta length != r + 1");
  SparseMatrix out = pattern_;
  auto& vals = out.values();
  const auto& rp = out.row_ptr();
  const auto& ci = out.col_idx();
  const auto& scale = pattern_.values();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
      const double delta = ci[p] == i ? 1.0 : 0.0;
      vals[p] = (delta + theta[distance_[p]]) * scale[p];
    }
  }
  return out;
}

std::vector<double> VpnOperatorBuilder::theta_gradient(const Matrix& left, const Matrix& right) const {
  if (left.rows() != pattern_.rows() || right.rows() != pattern_.rows() || left.cols() != right.cols())
    throw std::invalid_argument("theta_gradient: shape mismatch");
  std::vector<double> g(static_cast<std::size_t>(r_) + 1, 0.0);
  const auto& rp = pattern_.row_ptr();
  const auto& ci = pattern_.col_idx();
  const auto& scale = pattern_.values();
  const std::size_t w = left.cols();
  for (std::size_t i = 0; i < pattern_.rows(); ++i) {
    const double* li = left.row(i).data();
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p) {
      const double* rj = right.row(ci[p]).data();
      double dot = 0.0;
      for (std::size_t c = 0; c < w; ++c) dot += li[c] * rj[c];
      g[distance_[p]] += scale[p] * dot;
    }
  }
  return g;
}

}  // namespace vpgraph

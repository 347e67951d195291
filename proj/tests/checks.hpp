#pragma once

// Randomized property checks shared by the unit tests and the acceptance
// runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vpgraph/nn.hpp"
#include "vpgraph/powering.hpp"
#include "vpgraph/rng.hpp"

namespace checks {

using namespace vpgraph;

struct SmallInstance {
  Graph graph;
  SparseMatrix features;
  std::vector<std::int32_t> labels;
  std::vector<NodeId> train;
};

inline SmallInstance small_instance(std::uint64_t seed, std::size_t n = 7, std::size_t d = 3, std::size_t c = 2,
                                    double p = 0.4) {
  Rng rng = make_rng(seed, "instance");
  SmallInstance s;
  s.graph = erdos_renyi(n, p, seed);
  std::vector<Triplet> t;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < d; ++j) t.push_back({i, j, 2.0 * uniform01(rng) - 1.0});
  s.features = SparseMatrix::from_triplets(n, d, t);
  s.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.labels[i] = static_cast<std::int32_t>(uniform_index(rng, c));
  for (NodeId i = 0; i < n; ++i)
    if (i % 3 != 2) s.train.push_back(i);
  return s;
}

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

// Central differences for every entry of W1, W2 and theta of a VPN model
// (dropout active with a replayed mask stream, both decay settings covered by
// `decay_all`). The operator is re-assembled from theta for each probe.
inline GradCheck gradient_check_vpn(std::uint64_t seed, bool decay_all = false, double eps = 1e-5) {
  auto inst = small_instance(seed);
  const std::uint16_t r = 2 + static_cast<std::uint16_t>(seed % 2);
  auto fam = distance_adjacency_family(inst.graph, r);
  VpnOperatorBuilder builder(fam, inst.graph);

  HyperParams hp = default_hyper(OperatorMode::kVpn, r);
  hp.hidden = 4;
  hp.seed = seed;
  hp.decay_all_layers = decay_all;
  hp.weight_decay = 5e-3;
  GcnModel model = init_model(OperatorMode::kVpn, hp, inst.features.cols(), 2);
  Rng trng = make_rng(seed, "theta");
  for (auto& v : model.theta->values()) v = 2.0 * uniform01(trng) - 1.0;

  const Rng mask_stream = make_rng(seed, "dropout");
  auto eval = [&](const GcnModel& m, bool grads) {
    Rng rng = mask_stream;
    const auto op = builder.assemble(*m.theta);
    auto lg = loss_and_grads(m, op, &builder, inst.features, inst.labels, inst.train, &rng);
    if (!grads) lg.dw1 = lg.dw2 = Matrix();
    return lg;
  };
  const LossGrads g = eval(model, true);

  GradCheck out;
  auto probe = [&](double& param, double analytic, const std::string& name) {
    const double saved = param;
    param = saved + eps;
    const double up = eval(model, false).loss;
    param = saved - eps;
    const double down = eval(model, false).loss;
    param = saved;
    const double numeric = (up - down) / (2 * eps);
    const double rel = oracle::rel_error(analytic, numeric);
    ++out.checked;
    if (rel > out.max_rel) {
      out.max_rel = rel;
      out.worst = name + " analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
    }
  };
  for (std::size_t k = 0; k < model.w1.data().size(); ++k) probe(model.w1.data()[k], g.dw1.data()[k], "W1");
  for (std::size_t k = 0; k < model.w2.data().size(); ++k) probe(model.w2.data()[k], g.dw2.data()[k], "W2");
  for (std::size_t k = 0; k < model.theta->size(); ++k)
    probe(model.theta->values()[k], g.dtheta[k], "theta" + std::to_string(k));
  return out;
}

struct FieldTrial {
  bool ran = false;       // a node beyond the scope existed
  bool unchanged = true;  // probe logits bitwise equal
  std::string detail;
};

// Builds a random graph and operator (vanilla for r = 1, sparsified VPN for
// r >= 2), perturbs the features of one node farther than 2r from a probe
// node, and compares the probe's logits with dropout disabled.
inline FieldTrial receptive_field_trial(std::uint64_t seed) {
  Rng rng = make_rng(seed, "field");
  const std::size_t n = 12 + uniform_index(rng, 29);
  const double p = (1.2 + 1.8 * uniform01(rng)) / static_cast<double>(n);
  const auto r = static_cast<std::uint16_t>(1 + uniform_index(rng, 3));
  auto inst = small_instance(seed, n, 4, 3, p);
  const unsigned layers = 2;

  FieldTrial out;
  const NodeId v = static_cast<NodeId>(uniform_index(rng, n));
  const auto dist = bounded_bfs(inst.graph, v, static_cast<std::uint16_t>(layers * r));
  std::vector<NodeId> far;
  for (NodeId u = 0; u < n; ++u)
    if (dist[u] == kUnreachable) far.push_back(u);
  if (far.empty()) return out;
  out.ran = true;
  const NodeId u = far[uniform_index(rng, far.size())];

  const OperatorMode mode = r == 1 ? OperatorMode::kVanilla : OperatorMode::kVpn;
  HyperParams hp = default_hyper(mode, r);
  hp.hidden = 5;
  hp.seed = seed;
  GcnModel model = init_model(mode, hp, 4, 3);
  SparseMatrix op;
  if (r == 1) {
    op = vanilla_gcn_convolution(inst.graph);
  } else {
    auto bundle = build_operators(inst.graph, inst.features, mode, r);
    for (auto& t : model.theta->values()) t = 2.0 * uniform01(rng) - 1.0;
    op = bundle.inference_operator(model);
  }

  const auto before = forward(model, op, inst.features, nullptr).logits;
  SparseMatrix x = inst.features;
  for (std::size_t k = x.row_ptr()[u]; k < x.row_ptr()[u + 1]; ++k) x.values()[k] += 10.0 * uniform01(rng) - 5.0;
  const auto after = forward(model, op, x, nullptr).logits;
  for (std::size_t j = 0; j < before.cols(); ++j)
    if (before(v, j) != after(v, j)) out.unchanged = false;
  // The perturbation must actually reach the perturbed node itself.
  bool moved = false;
  for (std::size_t j = 0; j < before.cols(); ++j) moved |= before(u, j) != after(u, j);
  if (!out.unchanged || !moved)
    out.detail = "seed " + std::to_string(seed) + " n=" + std::to_string(n) + " r=" + std::to_string(r) +
                 " v=" + std::to_string(v) + " u=" + std::to_string(u) + (moved ? "" : " (perturbation inert)");
  return out;
}

}  // namespace checks

#include <algorithm>
#include <stdexcept>

#include "vpgraph/error.hpp"
#include "vpgraph/nn.hpp"

namespace vpgraph {

SparseMatrix OperatorBundle::inference_operator(const GcnModel& model) const {
  if (mode == OperatorMode::kVpn) {
    if (!vpn || !model.theta) throw InputError("VPN inference needs theta and an operator builder");
    return vpn->assemble(*model.theta);
  }
  return base;
}

OperatorBundle build_operators(const Graph& g, const SparseMatrix& features, OperatorMode mode, std::uint16_t r,
                               const OperatorOptions& opts) {
  OperatorBundle b;
  b.mode = mode;
  switch (mode) {
    case OperatorMode::kVanilla:
      b.base = vanilla_gcn_convolution(g);
      break;
    case OperatorMode::kRgcn: {
      if (r < 1) throw ConfigError("rgcn: r must be >= 1");
      b.base = vanilla_gcn_convolution(g);
      if (r >= 2) {
        // One family of order r gives every G^(k), k <= r.
        const auto fam = distance_adjacency_family(g, r);
        for (std::uint16_t k = 2; k <= r; ++k) {
          std::vector<Edge> edges;
          for (NodeId i = 0; i < fam.num_nodes(); ++i) {
            auto cols = fam.row_cols(i);
            auto dist = fam.row_dist(i);
            for (std::size_t p = 0; p < cols.size(); ++p)
              if (dist[p] <= k && i < cols[p]) edges.emplace_back(i, cols[p]);
          }
          b.powered.push_back(vanilla_gcn_convolution(Graph::from_edges(g.num_nodes(), edges)));
        }
      }
      break;
    }
    case OperatorMode::kVpn: {
      const auto fam = distance_adjacency_family(g, r);
      const auto pruned = sparsify(fam, g, features, opts.phi, opts.budget_factor, &b.sparsify_stats);
      b.vpn = std::make_shared<const VpnOperatorBuilder>(pruned, g);
      break;
    }
  }
  return b;
}

std::vector<std::int32_t> predict(const GcnModel& model, const SparseMatrix& op, const SparseMatrix& features) {
  const auto c = forward(model, op, features, nullptr);
  std::vector<std::int32_t> pred(c.logits.rows());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto z = c.logits.row(i);
    pred[i] = static_cast<std::int32_t>(std::max_element(z.begin(), z.end()) - z.begin());
  }
  return pred;
}

double accuracy(std::span<const std::int32_t> predictions, std::span<const std::int32_t> labels,
                std::span<const NodeId> idx) {
  std::size_t total = 0, correct = 0;
  for (NodeId i : idx) {
    if (labels[i] == kUnlabeled) continue;
    ++total;
    correct += predictions[i] == labels[i];
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

TrainResult train(const NodeData& data, const OperatorBundle& ops, OperatorMode mode, const HyperParams& hyper) {
  hyper.validate(mode);
  if (ops.mode != mode) throw ConfigError("train: operator bundle built for a different mode");
  if (mode == OperatorMode::kRgcn && ops.powered.size() != hyper.alpha.size())
    throw ConfigError("train: rgcn operator family and alpha lengths differ");
  if (mode == OperatorMode::kVpn && ops.vpn->order() != hyper.r)
    throw ConfigError("train: VPN operator order != hyper.r");

  const SparseMatrix& x = data.features;
  TrainResult res;
  res.model = init_model(mode, hyper, x.cols(), data.num_classes);
  GcnModel& model = res.model;
  Rng dropout_rng = make_rng(hyper.seed, "dropout");

  std::vector<const SparseMatrix*> rgcn_ops;
  if (mode == OperatorMode::kRgcn) {
    rgcn_ops.push_back(&ops.base);
    for (const auto& m : ops.powered) rgcn_ops.push_back(&m);
  }

  AdamState s1, s2, st;
  res.train_loss.reserve(hyper.epochs);
  res.val_acc.reserve(hyper.epochs);
  SparseMatrix op = ops.inference_operator(model);
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    LossGrads g;
    switch (mode) {
      case OperatorMode::kVanilla:
        g = loss_and_grads(model, op, nullptr, x, data.labels, data.splits.train, &dropout_rng);
        break;
      case OperatorMode::kVpn:
        g = loss_and_grads(model, op, ops.vpn.get(), x, data.labels, data.splits.train, &dropout_rng);
        break;
      case OperatorMode::kRgcn:
        g = rgcn_loss(model, rgcn_ops, hyper.alpha, x, data.labels, data.splits.train, &dropout_rng);
        break;
    }
    adam_step(model.w1.data(), g.dw1.data(), s1, hyper.lr);
    adam_step(model.w2.data(), g.dw2.data(), s2, hyper.lr);
    if (model.theta) {
      adam_step(model.theta->values(), g.dtheta, st, hyper.theta_lr);
      op = ops.inference_operator(model);
    }
    res.train_loss.push_back(g.loss);
    const auto pred = predict(model, op, x);
    res.val_acc.push_back(accuracy(pred, data.labels, data.splits.val));
  }
  const auto pred = predict(model, op, x);
  res.final_val_acc = res.val_acc.back();
  res.test_acc = accuracy(pred, data.labels, data.splits.test);
  return res;
}

Matrix hidden_embeddings(const GcnModel& model, const SparseMatrix& op, const SparseMatrix& features) {
  return forward(model, op, features, nullptr).h1;
}

}  // namespace vpgraph

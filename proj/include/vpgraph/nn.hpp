#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpgraph/graph.hpp"
#include "vpgraph/matrix.hpp"
#include "vpgraph/powering.hpp"
#include "vpgraph/rng.hpp"

namespace vpgraph {

enum class OperatorMode { kVanilla, kVpn, kRgcn };

std::string to_string(OperatorMode mode);
OperatorMode parse_mode(const std::string& s);

struct HyperParams {
  std::size_t hidden = 16;
  double dropout = 0.5;
  double weight_decay = 5e-4;
  double lr = 0.01;
  double theta_lr = 1e-5;
  std::size_t epochs = 200;
  std::uint16_t r = 1;
  // r-GCN weights for the powered graphs k = 2..r (size r - 1).
  std::vector<double> alpha;
  std::uint64_t seed = 0;
  bool decay_all_layers = false;
  bool dropout_both_layers = true;
  double theta_far_init = 1e-3;

  void validate(OperatorMode mode) const;
};

// Protocol defaults per mode: rgcn r = 4 with alpha_r = 0.5, vpn r = 3.
HyperParams default_hyper(OperatorMode mode, std::uint16_t r = 0);

struct GcnModel {
  Matrix w1;  // d x h
  Matrix w2;  // h x c
  std::optional<ThetaVector> theta;
  OperatorMode mode = OperatorMode::kVanilla;
  HyperParams hyper;
};

// Uniform on [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].
Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng);
Matrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

GcnModel init_model(OperatorMode mode, const HyperParams& hyper, std::size_t in_dim, std::size_t num_classes);

// Divides every feature row by its sum (rows summing to 0 are left as is).
SparseMatrix row_normalize(const SparseMatrix& features);

struct ForwardCache {
  SparseMatrix x_dropped;   // dropout(X)
  Matrix xw;                // dropout(X) W1
  Matrix pre1;              // A dropout(X) W1
  Matrix h1;                // ReLU(pre1)
  Matrix h1_scale;          // dropout multiplier per entry of h1 (0 or 1/(1-p)); empty when no dropout
  Matrix h1_dropped;        // dropout(h1)
  Matrix hw;                // dropout(h1) W2
  Matrix logits;            // A dropout(h1) W2
};

// H1 = ReLU(A drop(X) W1); logits = A drop(H1) W2. Dropout (inverted scaling)
// runs only when dropout_rng is non-null.
ForwardCache forward(const GcnModel& model, const SparseMatrix& op, const SparseMatrix& features, Rng* dropout_rng);

// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

struct LossGrads {
  double loss = 0.0;       // data loss + decay
  double data_loss = 0.0;  // cross-entropy part(s)
  Matrix dw1;
  Matrix dw2;
  std::vector<double> dtheta;  // empty unless the model carries theta
};

// Mean cross-entropy over train_idx plus weight_decay * ||W1||^2 / 2. In VPN
// mode `vpn` must be the builder that produced `op` and theta gradients are
// returned.
LossGrads loss_and_grads(const GcnModel& model, const SparseMatrix& op, const VpnOperatorBuilder* vpn,
                         const SparseMatrix& features, std::span<const std::int32_t> labels,
                         std::span<const NodeId> train_idx, Rng* dropout_rng);

// l(W; G) + sum_{k=2..r} alpha_k l(W; G^(k)) with shared weights. ops[0] is
// the operator of G and ops[j] the operator of G^(j+1); alpha[j-1] weights
// ops[j]. Terms with alpha = 0 are skipped and draw no dropout masks.
LossGrads rgcn_loss(const GcnModel& model, std::span<const SparseMatrix* const> ops, std::span<const double> alpha,
                    const SparseMatrix& features, std::span<const std::int32_t> labels,
                    std::span<const NodeId> train_idx, Rng* dropout_rng);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update of params in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

// Prebuilt inference/training operators for one graph.
struct OperatorBundle {
  OperatorMode mode = OperatorMode::kVanilla;
  SparseMatrix base;                 // vanilla operator of G (vanilla, rgcn)
  std::vector<SparseMatrix> powered;  // vanilla operators of G^(2..r) (rgcn)
  std::shared_ptr<const VpnOperatorBuilder> vpn;
  SparsifyStats sparsify_stats;

  // The operator the network uses at inference.
  SparseMatrix inference_operator(const GcnModel& model) const;
};

struct OperatorOptions {
  double budget_factor = 1.0;
  Aloofness phi = Aloofness::kCosine;
};

// vanilla: baseline operator; vpn: sparsified family of order r with VPN
// normalization; rgcn: baseline operators of G, G^(2), ..., G^(r).
OperatorBundle build_operators(const Graph& g, const SparseMatrix& features, OperatorMode mode, std::uint16_t r,
                               const OperatorOptions& opts = {});

std::vector<std::int32_t> predict(const GcnModel& model, const SparseMatrix& op, const SparseMatrix& features);
// Fraction of labeled nodes in idx predicted correctly; unlabeled nodes are
// skipped. Returns 0 when idx has no labeled node.
double accuracy(std::span<const std::int32_t> predictions, std::span<const std::int32_t> labels,
                std::span<const NodeId> idx);

struct TrainResult {
  GcnModel model;
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_acc;     // per epoch, after the update
  double test_acc = 0.0;
  double final_val_acc = 0.0;
};

// Full-batch training for hyper.epochs epochs; returns the last-epoch model
// and its test accuracy. Deterministic under hyper.seed.
TrainResult train(const NodeData& data, const OperatorBundle& ops, OperatorMode mode, const HyperParams& hyper);

// Hidden representation ReLU(A X W1) without dropout.
Matrix hidden_embeddings(const GcnModel& model, const SparseMatrix& op, const SparseMatrix& features);

}  // namespace vpgraph

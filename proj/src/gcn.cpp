#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vpgraph/error.hpp"
#include "vpgraph/nn.hpp"

namespace vpgraph {

std::string to_string(OperatorMode mode) {
  switch (mode) {
    case OperatorMode::kVanilla:
      return "vanilla";
    case OperatorMode::kVpn:
      return "vpn";
    case OperatorMode::kRgcn:
      return "rgcn";
  }
  return "unknown";
}

OperatorMode parse_mode(const std::string& s) {
  if (s == "vanilla" || s == "gcn") return OperatorMode::kVanilla;
  if (s == "vpn") return OperatorMode::kVpn;
  if (s == "rgcn" || s == "r-gcn") return OperatorMode::kRgcn;
  throw ConfigError("unknown mode '" + s + "' (expected vanilla, vpn or rgcn)");
}

void HyperParams::validate(OperatorMode mode) const {
  if (hidden == 0) throw ConfigError("hidden must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(lr > 0.0) || !(theta_lr >= 0.0)) throw ConfigError("learning rates must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (r < 1) throw ConfigError("r must be >= 1");
  for (double a : alpha)
    if (!(a >= 0.0)) throw ConfigError("alpha_k must be >= 0");
  if (mode == OperatorMode::kRgcn && alpha.size() + 1 != r)
    throw ConfigError("rgcn needs r - 1 = " + std::to_string(r - 1) + " alpha values, got " +
                      std::to_string(alpha.size()));
}

HyperParams default_hyper(OperatorMode mode, std::uint16_t r) {
  HyperParams h;
  switch (mode) {
    case OperatorMode::kVanilla:
      h.r = 1;
      break;
    case OperatorMode::kVpn:
      h.r = r ? r : 3;
      break;
    case OperatorMode::kRgcn:
      h.r = r ? r : 4;
      h.alpha.assign(h.r - 1, 0.0);
      if (!h.alpha.empty()) h.alpha.back() = 0.5;
      break;
  }
  return h;
}

Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw ConfigError("glorot_init: dimensions must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (auto& x : w.data()) x = (2.0 * uniform01(rng) - 1.0) * bound;
  return w;
}

Matrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng = make_rng(seed, "init");
  return glorot_init(rows, cols, rng);
}

GcnModel init_model(OperatorMode mode, const HyperParams& hyper, std::size_t in_dim, std::size_t num_classes) {
  GcnModel m;
  m.mode = mode;
  m.hyper = hyper;
  Rng rng = make_rng(hyper.seed, "init");
  m.w1 = glorot_init(in_dim, hyper.hidden, rng);
  m.w2 = glorot_init(hyper.hidden, num_classes, rng);
  if (mode == OperatorMode::kVpn) m.theta = ThetaVector::vpn_default(hyper.r, hyper.theta_far_init);
  return m;
}

SparseMatrix row_normalize(const SparseMatrix& features) {
  SparseMatrix out = features;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto v = out.row_values(i);
    double s = 0.0;
    for (double x : v) s += x;
    if (s == 0.0) continue;
    for (double& x : v) x /= s;
  }
  return out;
}

namespace {

SparseMatrix dropout_sparse(const SparseMatrix& x, double p, Rng& rng) {
  SparseMatrix out = x;
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& v : out.values()) v = uniform01(rng) < p ? 0.0 : v * keep_scale;
  return out;
}

void check_shapes(const GcnModel& model, const SparseMatrix& op, const SparseMatrix& features) {
  if (op.rows() != op.cols() || op.rows() != features.rows())
    throw InputError("forward: operator is " + std::to_string(op.rows()) + "x" + std::to_string(op.cols()) +
                     " but features have " + std::to_string(features.rows()) + " rows");
  if (features.cols() != model.w1.rows()) throw InputError("forward: feature dimension != W1 rows");
  if (model.w1.cols() != model.w2.rows()) throw InputError("forward: W1 cols != W2 rows");
}

}  // namespace

ForwardCache forward(const GcnModel& model, const SparseMatrix& op, const SparseMatrix& features, Rng* dropout_rng) {
  check_shapes(model, op, features);
  const double p = model.hyper.dropout;
  const bool drop = dropout_rng != nullptr && p > 0.0;
  ForwardCache c;
  c.x_dropped = drop ? dropout_sparse(features, p, *dropout_rng) : features;
  c.xw = c.x_dropped.multiply(model.w1);
  c.pre1 = op.multiply(c.xw);
  c.h1 = c.pre1;
  for (double& v : c.h1.data()) v = v > 0.0 ? v : 0.0;
  if (drop && model.hyper.dropout_both_layers) {
    c.h1_scale = Matrix(c.h1.rows(), c.h1.cols());
    c.h1_dropped = c.h1;
    const double keep_scale = 1.0 / (1.0 - p);
    auto& s = c.h1_scale.data();
    auto& hd = c.h1_dropped.data();
    for (std::size_t k = 0; k < hd.size(); ++k) {
      s[k] = uniform01(*dropout_rng) < p ? 0.0 : keep_scale;
      hd[k] *= s[k];
    }
  } else {
    c.h1_dropped = c.h1;
  }
  c.hw = matmul(c.h1_dropped, model.w2);
  c.logits = op.multiply(c.hw);
  return c;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto z = logits.row(i);
    auto out = p.row(i);
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      out[j] = std::exp(z[j] - mx);
      s += out[j];
    }
    for (double& v : out) v /= s;
  }
  return p;
}

namespace {

struct DataTerm {
  double loss = 0.0;
  Matrix dw1;
  Matrix dw2;
  std::vector<double> dtheta;
};

// Cross-entropy term and its gradients, scaled by `weight`.
DataTerm data_term(const GcnModel& model, const SparseMatrix& op, const VpnOperatorBuilder* vpn,
                   const SparseMatrix& features, std::span<const std::int32_t> labels,
                   std::span<const NodeId> train_idx, Rng* dropout_rng, double weight) {
  const ForwardCache c = forward(model, op, features, dropout_rng);
  const std::size_t n = c.logits.rows();
  const std::size_t classes = c.logits.cols();
  const double inv_count = 1.0 / static_cast<double>(train_idx.size());

  DataTerm t;
  Matrix dz(n, classes);
  for (NodeId i : train_idx) {
    const std::int32_t y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw InputError("training node without a valid label");
    auto z = c.logits.row(i);
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    t.loss += (lse - z[y]) * inv_count;
    auto g = dz.row(i);
    for (std::size_t j = 0; j < classes; ++j) g[j] = std::exp(z[j] - lse) * inv_count * weight;
    g[y] -= inv_count * weight;
  }
  t.loss *= weight;

  // logits = A (H1d W2)
  const Matrix d_hw = op.transpose_multiply(dz);
  if (vpn) t.dtheta = vpn->theta_gradient(dz, c.hw);
  t.dw2 = matmul_tn(c.h1_dropped, d_hw);
  Matrix d_pre1 = matmul_nt(d_hw, model.w2);
  if (!c.h1_scale.empty()) {
    auto& d = d_pre1.data();
    const auto& s = c.h1_scale.data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] *= s[k];
  }
  {
    auto& d = d_pre1.data();
    const auto& pre = c.pre1.data();
    for (std::size_t k = 0; k < d.size(); ++k)
      if (!(pre[k] > 0.0)) d[k] = 0.0;
  }
  // pre1 = A (Xd W1)
  const Matrix d_xw = op.transpose_multiply(d_pre1);
  if (vpn) {
    const auto g1 = vpn->theta_gradient(d_pre1, c.xw);
    for (std::size_t k = 0; k < g1.size(); ++k) t.dtheta[k] += g1[k];
  }
  t.dw1 = c.x_dropped.transpose_multiply(d_xw);
  return t;
}

void add_decay(const GcnModel& model, LossGrads& out) {
  const double wd = model.hyper.weight_decay;
  if (wd == 0.0) return;
  out.loss += 0.5 * wd * model.w1.frobenius_sq();
  for (std::size_t k = 0; k < out.dw1.data().size(); ++k) out.dw1.data()[k] += wd * model.w1.data()[k];
  if (model.hyper.decay_all_layers) {
    out.loss += 0.5 * wd * model.w2.frobenius_sq();
    for (std::size_t k = 0; k < out.dw2.data().size(); ++k) out.dw2.data()[k] += wd * model.w2.data()[k];
  }
}

}  // namespace

LossGrads loss_and_grads(const GcnModel& model, const SparseMatrix& op, const VpnOperatorBuilder* vpn,
                         const SparseMatrix& features, std::span<const std::int32_t> labels,
                         std::span<const NodeId> train_idx, Rng* dropout_rng) {
  if (train_idx.empty()) throw InputError("loss_and_grads: empty training set");
  if (labels.size() != features.rows()) throw InputError("loss_and_grads: label count != n");
  if (model.mode == OperatorMode::kVpn && (!vpn || !model.theta))
    throw InputError("loss_and_grads: VPN mode needs theta and its operator builder");
  DataTerm t = data_term(model, op, model.mode == OperatorMode::kVpn ? vpn : nullptr, features, labels, train_idx,
                         dropout_rng, 1.0);
  LossGrads out;
  out.data_loss = t.loss;
  out.loss = t.loss;
  out.dw1 = std::move(t.dw1);
  out.dw2 = std::move(t.dw2);
  out.dtheta = std::move(t.dtheta);
  add_decay(model, out);
  return out;
}

LossGrads rgcn_loss(const GcnModel& model, std::span<const SparseMatrix* const> ops, std::span<const double> alpha,
                    const SparseMatrix& features, std::span<const std::int32_t> labels,
                    std::span<const NodeId> train_idx, Rng* dropout_rng) {
  if (ops.empty()) throw ConfigError("rgcn_loss: no operators");
  if (alpha.size() + 1 != ops.size())
    throw ConfigError("rgcn_loss: " + std::to_string(ops.size() - 1) + " powered operators but " +
                      std::to_string(alpha.size()) + " alpha values");
  if (train_idx.empty()) throw InputError("rgcn_loss: empty training set");
  if (labels.size() != features.rows()) throw InputError("rgcn_loss: label count != n");

  DataTerm base = data_term(model, *ops[0], nullptr, features, labels, train_idx, dropout_rng, 1.0);
  LossGrads out;
  out.data_loss = base.loss;
  out.dw1 = std::move(base.dw1);
  out.dw2 = std::move(base.dw2);
  for (std::size_t j = 1; j < ops.size(); ++j) {
    const double a = alpha[j - 1];
    if (a == 0.0) continue;
    DataTerm t = data_term(model, *ops[j], nullptr, features, labels, train_idx, dropout_rng, a);
    out.data_loss += t.loss;
    for (std::size_t k = 0; k < out.dw1.data().size(); ++k) out.dw1.data()[k] += t.dw1.data()[k];
    for (std::size_t k = 0; k < out.dw2.data().size(); ++k) out.dw2.data()[k] += t.dw2.data()[k];
  }
  out.loss = out.data_loss;
  add_decay(model, out);
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state size mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

}  // namespace vpgraph

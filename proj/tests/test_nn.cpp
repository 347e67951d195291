#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "checks.hpp"
#include "vpgraph/error.hpp"
#include "vpgraph/nn.hpp"

using namespace vpgraph;

namespace {

// Straight-line dense recomputation of the two-layer forward pass.
Matrix reference_logits(const Matrix& a, const Matrix& x, const Matrix& w1, const Matrix& w2) {
  const std::size_t n = a.rows(), d = x.cols(), h = w1.cols(), c = w2.cols();
  std::vector<double> xw(n * h, 0.0), h1(n * h, 0.0), hw(n * c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < h; ++k)
      for (std::size_t j = 0; j < d; ++j) xw[i * h + k] += x(i, j) * w1(j, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < h; ++k) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * xw[j * h + k];
      h1[i * h + k] = std::max(0.0, s);
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t j = 0; j < h; ++j) hw[i * c + k] += h1[i * h + j] * w2(j, k);
  Matrix out(n, c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t j = 0; j < n; ++j) out(i, k) += a(i, j) * hw[j * c + k];
  return out;
}

NodeData toy_data(const checks::SmallInstance& inst, std::size_t classes) {
  NodeData d;
  d.features = inst.features;
  d.labels = inst.labels;
  d.num_classes = classes;
  d.splits.train = inst.train;
  for (NodeId i = 0; i < inst.labels.size(); ++i)
    if (i % 3 == 2) (i % 2 ? d.splits.val : d.splits.test).push_back(i);
  return d;
}

}  // namespace

TEST(Glorot, BoundsDeterminismVariance) {
  auto one = glorot_init(1, 1, 5);
  EXPECT_LE(std::abs(one(0, 0)), std::sqrt(3.0));
  EXPECT_EQ(glorot_init(8, 3, 7), glorot_init(8, 3, 7));
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto w = glorot_init(100, 100, s);
    double mean = 0, sq = 0;
    for (double v : w.data()) {
      mean += v;
      sq += v * v;
      EXPECT_LE(std::abs(v), std::sqrt(6.0 / 200));
    }
    mean /= 10000;
    const double var = sq / 10000 - mean * mean;
    EXPECT_NEAR(var, 0.01, 0.001);
  }
}

TEST(Forward, IdentityPipeline) {
  GcnModel m;
  m.w1 = Matrix::identity(3);
  m.w2 = Matrix::identity(3);
  auto x = SparseMatrix::from_triplets(4, 3, {{0, 0, 1}, {1, 2, 0.5}, {3, 1, 2}});
  auto c = forward(m, SparseMatrix::identity(4), x, nullptr);
  EXPECT_EQ(c.logits, x.to_dense());
}

TEST(Forward, ZeroFeaturesGiveLogC) {
  GcnModel m;
  m.hyper.weight_decay = 0;
  m.w1 = glorot_init(3, 4, 1);
  m.w2 = glorot_init(4, 5, 2);
  auto g = erdos_renyi(6, 0.5, 1);
  std::vector<std::int32_t> labels{0, 1, 2, 3, 4, 0};
  std::vector<NodeId> train{0, 1, 2, 3};
  auto lg = loss_and_grads(m, vanilla_gcn_convolution(g), nullptr, SparseMatrix(6, 3), labels, train, nullptr);
  EXPECT_NEAR(lg.loss, std::log(5.0), 1e-15);
  auto p = softmax_rows(forward(m, vanilla_gcn_convolution(g), SparseMatrix(6, 3), nullptr).logits);
  for (double v : p.data()) EXPECT_NEAR(v, 0.2, 1e-15);

  m.hyper.weight_decay = 0.1;
  lg = loss_and_grads(m, vanilla_gcn_convolution(g), nullptr, SparseMatrix(6, 3), labels, train, nullptr);
  EXPECT_NEAR(lg.loss, std::log(5.0) + 0.05 * m.w1.frobenius_sq(), 1e-14);
  EXPECT_THROW(loss_and_grads(m, vanilla_gcn_convolution(g), nullptr, SparseMatrix(6, 3), labels, {}, nullptr),
               InputError);
}

TEST(Forward, MatchesStraightLineRecomputation) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto inst = checks::small_instance(seed, 7, 3, 2);
    GcnModel m;
    m.w1 = glorot_init(3, 4, seed);
    m.w2 = glorot_init(4, 2, seed + 100);
    auto op = vanilla_gcn_convolution(inst.graph);
    auto got = forward(m, op, inst.features, nullptr).logits;
    auto ref = reference_logits(op.to_dense(), inst.features.to_dense(), m.w1, m.w2);
    for (std::size_t k = 0; k < got.data().size(); ++k) EXPECT_NEAR(got.data()[k], ref.data()[k], 1e-14);
  }
}

TEST(Forward, SoftmaxRowsSumToOne) {
  auto inst = checks::small_instance(3, 20, 5, 4, 0.2);
  GcnModel m;
  m.w1 = glorot_init(5, 6, 1);
  m.w2 = glorot_init(6, 4, 2);
  auto p = softmax_rows(forward(m, vanilla_gcn_convolution(inst.graph), inst.features, nullptr).logits);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0;
    for (double v : p.row(i)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Forward, PermutationEquivariant) {
  auto inst = checks::small_instance(8, 15, 4, 3, 0.25);
  std::vector<NodeId> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(2));
  std::vector<Triplet> t;
  for (std::uint32_t i = 0; i < 15; ++i) {
    auto c = inst.features.row_cols(i);
    auto v = inst.features.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) t.push_back({perm[i], c[k], v[k]});
  }
  auto px = SparseMatrix::from_triplets(15, 4, t);
  GcnModel m;
  m.w1 = glorot_init(4, 5, 3);
  m.w2 = glorot_init(5, 3, 4);
  auto a = forward(m, vanilla_gcn_convolution(inst.graph), inst.features, nullptr).logits;
  auto b = forward(m, vanilla_gcn_convolution(permute_graph(inst.graph, perm)), px, nullptr).logits;
  for (std::size_t i = 0; i < 15; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a(i, j), b(perm[i], j), 1e-13);
}

TEST(Gradients, FiniteDifferencesVpn) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto res = checks::gradient_check_vpn(seed, seed % 2 == 1);
    EXPECT_LE(res.max_rel, 1e-5) << "seed " << seed << ": " << res.worst;
    EXPECT_GT(res.checked, 20u);
  }
}

TEST(Gradients, ThetaAtZeroSingleFarEdge) {
  // P3 has exactly one far pair (0, 2).
  auto g = path_graph(3);
  auto fam = distance_adjacency_family(g, 2);
  VpnOperatorBuilder b(fam, g);
  HyperParams hp = default_hyper(OperatorMode::kVpn, 2);
  hp.hidden = 3;
  hp.weight_decay = 0;
  GcnModel m = init_model(OperatorMode::kVpn, hp, 2, 2);
  m.theta = ThetaVector({0, 0, 0});
  auto x = SparseMatrix::from_triplets(3, 2, {{0, 0, 1}, {1, 1, 1}, {2, 0, 0.5}, {2, 1, -1}});
  std::vector<std::int32_t> y{0, 1, 1};
  std::vector<NodeId> train{0, 2};
  auto g0 = loss_and_grads(m, b.assemble(*m.theta), &b, x, y, train, nullptr);
  const double eps = 1e-5;
  auto loss_at = [&](double t2) {
    GcnModel mm = m;
    (*mm.theta)[2] = t2;
    return loss_and_grads(mm, b.assemble(*mm.theta), &b, x, y, train, nullptr).loss;
  };
  const double fd = (loss_at(eps) - loss_at(-eps)) / (2 * eps);
  EXPECT_NEAR(g0.dtheta[2], fd, 1e-6);
}

TEST(Rgcn, ZeroAlphaReducesToSingleGraph) {
  auto inst = checks::small_instance(4, 12, 3, 2, 0.3);
  HyperParams hp = default_hyper(OperatorMode::kRgcn, 3);
  hp.alpha = {0, 0};
  hp.hidden = 4;
  GcnModel m = init_model(OperatorMode::kRgcn, hp, 3, 2);
  auto bundle = build_operators(inst.graph, inst.features, OperatorMode::kRgcn, 3);
  std::vector<const SparseMatrix*> ops{&bundle.base, &bundle.powered[0], &bundle.powered[1]};
  Rng r1(5), r2(5);
  auto a = rgcn_loss(m, ops, hp.alpha, inst.features, inst.labels, inst.train, &r1);
  auto b = loss_and_grads(m, bundle.base, nullptr, inst.features, inst.labels, inst.train, &r2);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.dw1, b.dw1);
  EXPECT_EQ(a.dw2, b.dw2);
  EXPECT_EQ(r1(), r2());
  std::vector<double> short_alpha{0.5};
  EXPECT_THROW(rgcn_loss(m, ops, short_alpha, inst.features, inst.labels, inst.train, nullptr), ConfigError);
}

TEST(Rgcn, TermwiseRecomputation) {
  auto inst = checks::small_instance(6, 14, 3, 2, 0.25);
  HyperParams hp = default_hyper(OperatorMode::kRgcn, 4);
  hp.hidden = 4;
  ASSERT_EQ(hp.alpha, (std::vector<double>{0, 0, 0.5}));
  GcnModel m = init_model(OperatorMode::kRgcn, hp, 3, 2);
  auto bundle = build_operators(inst.graph, inst.features, OperatorMode::kRgcn, 4);
  std::vector<const SparseMatrix*> ops{&bundle.base, &bundle.powered[0], &bundle.powered[1], &bundle.powered[2]};
  auto total = rgcn_loss(m, ops, hp.alpha, inst.features, inst.labels, inst.train, nullptr);
  GcnModel nodecay = m;
  nodecay.hyper.weight_decay = 0;
  auto l1 = loss_and_grads(nodecay, bundle.base, nullptr, inst.features, inst.labels, inst.train, nullptr);
  auto l4 = loss_and_grads(nodecay, bundle.powered[2], nullptr, inst.features, inst.labels, inst.train, nullptr);
  EXPECT_NEAR(total.data_loss, l1.loss + 0.5 * l4.loss, 1e-14);
  EXPECT_EQ(bundle.powered[2], vanilla_gcn_convolution(powered_graph(inst.graph, 4)));
}

TEST(Rgcn, CompleteGraphIsIdempotent) {
  auto inst = checks::small_instance(2, 6, 3, 2);
  inst.graph = complete_graph(6);
  HyperParams hp = default_hyper(OperatorMode::kRgcn, 3);
  hp.alpha = {0.3, 0.5};
  hp.hidden = 4;
  hp.weight_decay = 0;
  GcnModel m = init_model(OperatorMode::kRgcn, hp, 3, 2);
  auto bundle = build_operators(inst.graph, inst.features, OperatorMode::kRgcn, 3);
  std::vector<const SparseMatrix*> ops{&bundle.base, &bundle.powered[0], &bundle.powered[1]};
  auto total = rgcn_loss(m, ops, hp.alpha, inst.features, inst.labels, inst.train, nullptr);
  auto single = loss_and_grads(m, bundle.base, nullptr, inst.features, inst.labels, inst.train, nullptr);
  EXPECT_NEAR(total.loss, 1.8 * single.loss, 1e-14);
}

TEST(Adam, ZeroGradientAndFirstStep) {
  std::vector<double> p{1.0, -2.0, 3.0};
  AdamState s;
  std::vector<double> zero(3, 0.0);
  adam_step(p, zero, s, 0.01);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));

  std::vector<double> q{0.5, 0.5, 0.5}, g{0.3, -4.0, 1e-3};
  AdamState t;
  adam_step(q, g, t, 0.01);
  // First step: m_hat = g, v_hat = g^2, so the update is -lr g / (|g| + eps).
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(q[k], 0.5 - 0.01 * g[k] / (std::abs(g[k]) + 1e-8), 1e-16);
}

TEST(Train, DeterministicAndHistoryLength) {
  auto inst = checks::small_instance(10, 30, 6, 3, 0.12);
  auto data = toy_data(inst, 3);
  for (auto mode : {OperatorMode::kVanilla, OperatorMode::kVpn, OperatorMode::kRgcn}) {
    HyperParams hp = default_hyper(mode, mode == OperatorMode::kVpn ? 2 : 3);
    hp.epochs = 15;
    hp.seed = 3;
    auto ops = build_operators(inst.graph, data.features, mode, hp.r);
    auto a = train(data, ops, mode, hp);
    auto b = train(data, ops, mode, hp);
    EXPECT_EQ(a.train_loss.size(), 15u);
    EXPECT_EQ(a.val_acc.size(), 15u);
    EXPECT_EQ(a.train_loss, b.train_loss);
    EXPECT_EQ(a.model.w1, b.model.w1);
    EXPECT_EQ(a.test_acc, b.test_acc);
    EXPECT_EQ(a.model.theta.has_value(), mode == OperatorMode::kVpn);
  }
}

TEST(Train, RgcnZeroAlphaMatchesVanillaBitwise) {
  auto inst = checks::small_instance(11, 30, 6, 3, 0.12);
  auto data = toy_data(inst, 3);
  HyperParams hv = default_hyper(OperatorMode::kVanilla);
  hv.epochs = 20;
  hv.seed = 8;
  HyperParams hr = default_hyper(OperatorMode::kRgcn, 3);
  hr.alpha = {0, 0};
  hr.epochs = 20;
  hr.seed = 8;
  auto v = train(data, build_operators(inst.graph, data.features, OperatorMode::kVanilla, 1), OperatorMode::kVanilla, hv);
  auto r = train(data, build_operators(inst.graph, data.features, OperatorMode::kRgcn, 3), OperatorMode::kRgcn, hr);
  EXPECT_EQ(v.train_loss, r.train_loss);
  EXPECT_EQ(v.model.w1, r.model.w1);
  EXPECT_EQ(v.model.w2, r.model.w2);
}

TEST(Train, LossDecreases) {
  auto inst = checks::small_instance(12, 40, 8, 2, 0.1);
  auto data = toy_data(inst, 2);
  HyperParams hp = default_hyper(OperatorMode::kVanilla);
  hp.dropout = 0;
  hp.epochs = 100;
  auto res = train(data, build_operators(inst.graph, data.features, OperatorMode::kVanilla, 1), OperatorMode::kVanilla, hp);
  EXPECT_LT(res.train_loss.back(), res.train_loss.front());
}

TEST(ReceptiveField, RandomTrials) {
  int ran = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto t = checks::receptive_field_trial(s);
    ran += t.ran;
    EXPECT_TRUE(t.unchanged) << t.detail;
  }
  EXPECT_GT(ran, 100);
}

TEST(Accuracy, SkipsUnlabeled) {
  std::vector<std::int32_t> pred{0, 1, 1, 0}, labels{0, kUnlabeled, 0, 0};
  std::vector<NodeId> idx{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(accuracy(pred, labels, idx), 2.0 / 3.0);
  std::vector<NodeId> none{1};
  EXPECT_EQ(accuracy(pred, labels, none), 0.0);
}

#include "vpgraph/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vpgraph/error.hpp"
#include "vpgraph/rng.hpp"

namespace vpgraph {

namespace {

// Uniform sampling without replacement of absent cross-class pairs. Small
// universes are enumerated up front; large ones use rejection against the
// graph and the pairs already drawn.
class InsertionPool {
 public:
  InsertionPool(const Graph& g, std::span<const std::int32_t> labels) : g_(g) {
    for (NodeId i = 0; i < g.num_nodes(); ++i)
      if (labels[i] != kUnlabeled) labeled_.push_back(i);
    labels_.assign(labels.begin(), labels.end());

    std::vector<std::size_t> class_size;
    for (NodeId i : labeled_) {
      const auto c = static_cast<std::size_t>(labels[i]);
      if (class_size.size() <= c) class_size.resize(c + 1, 0);
      ++class_size[c];
    }
    std::size_t same = 0, total = labeled_.size() * (labeled_.size() - (labeled_.empty() ? 0 : 1)) / 2;
    for (auto s : class_size) same += s * (s == 0 ? 0 : s - 1) / 2;
    std::size_t existing_cross = 0;
    for (auto [a, b] : g.edge_list())
      if (labels[a] != kUnlabeled && labels[b] != kUnlabeled && labels[a] != labels[b]) ++existing_cross;
    remaining_ = total - same - existing_cross;

    if (labeled_.size() <= 2048) {
      enumerated_ = true;
      for (std::size_t x = 0; x < labeled_.size(); ++x)
        for (std::size_t y = x + 1; y < labeled_.size(); ++y) {
          const NodeId a = labeled_[x], b = labeled_[y];
          if (labels[a] != labels[b] && !g.has_edge(a, b)) candidates_.emplace_back(a, b);
        }
    }
  }

  std::size_t remaining() const { return remaining_; }

  Edge draw(Rng& rng) {
    --remaining_;
    if (enumerated_) {
      const std::size_t left = candidates_.size() - used_;
      const std::size_t k = used_ + uniform_index(rng, left);
      std::swap(candidates_[used_], candidates_[k]);
      return candidates_[used_++];
    }
    for (;;) {
      NodeId a = labeled_[uniform_index(rng, labeled_.size())];
      NodeId b = labeled_[uniform_index(rng, labeled_.size())];
      if (a == b || labels_[a] == labels_[b]) continue;
      if (a > b) std::swap(a, b);
      if (g_.has_edge(a, b) || drawn_.count({a, b})) continue;
      drawn_.insert({a, b});
      return {a, b};
    }
  }

 private:
  const Graph& g_;
  std::vector<NodeId> labeled_;
  std::vector<std::int32_t> labels_;
  std::size_t remaining_ = 0;
  bool enumerated_ = false;
  std::vector<Edge> candidates_;
  std::size_t used_ = 0;
  std::set<Edge> drawn_;
};

}  // namespace

AttackResult dice_attack(const Graph& g, std::span<const std::int32_t> labels, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("attack rate must be in [0, 1]");
  if (labels.size() != g.num_nodes()) throw InputError("dice_attack: label count != n");
  const std::size_t budget =
      static_cast<std::size_t>(std::llround(rate * static_cast<double>(g.num_edges())));

  AttackResult out;
  out.edit.rate = rate;
  out.edit.seed = seed;
  Rng rng = make_rng(seed, "attack");

  std::vector<Edge> intra;
  for (auto [a, b] : g.edge_list())
    if (labels[a] != kUnlabeled && labels[a] == labels[b]) intra.emplace_back(a, b);
  std::size_t removed = 0;
  InsertionPool insert_pool(g, labels);

  for (std::size_t e = 0; e < budget; ++e) {
    const bool remove_left = removed < intra.size();
    const bool insert_left = insert_pool.remaining() > 0;
    if (!remove_left && !insert_left)
      throw AttackBudgetError("dice_attack: both edit pools exhausted after " + std::to_string(e) + " of " +
                                  std::to_string(budget) + " edits",
                              e, budget);
    bool remove = uniform01(rng) < 0.5;
    if (remove && !remove_left) remove = false;
    if (!remove && !insert_left) remove = true;
    if (remove) {
      const std::size_t k = removed + uniform_index(rng, intra.size() - removed);
      std::swap(intra[removed], intra[k]);
      out.edit.removed.push_back(intra[removed++]);
      out.edit.coin_log.push_back('R');
    } else {
      out.edit.added.push_back(insert_pool.draw(rng));
      out.edit.coin_log.push_back('A');
    }
  }

  std::vector<Edge> removed_sorted = out.edit.removed;
  std::sort(removed_sorted.begin(), removed_sorted.end());
  std::vector<Edge> edges;
  edges.reserve(g.num_edges() + out.edit.added.size());
  for (const auto& e : g.edge_list())
    if (!std::binary_search(removed_sorted.begin(), removed_sorted.end(), e)) edges.push_back(e);
  edges.insert(edges.end(), out.edit.added.begin(), out.edit.added.end());
  out.perturbed = Graph::from_edges(g.num_nodes(), edges);
  return out;
}

std::string validate_attack(const Graph& original, const Graph& perturbed, std::span<const std::int32_t> labels,
                            const AttackEdit& edit) {
  const auto budget = static_cast<std::size_t>(std::llround(edit.rate * static_cast<double>(original.num_edges())));
  if (edit.size() != budget)
    return "edit count " + std::to_string(edit.size()) + " != budget " + std::to_string(budget);
  if (edit.coin_log.size() != edit.size()) return "coin log length != edit count";
  std::set<Edge> seen;
  for (auto [a, b] : edit.removed) {
    if (!original.has_edge(a, b)) return "removed pair was not an edge";
    if (labels[a] == kUnlabeled || labels[a] != labels[b]) return "removed edge is not intra-class";
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) return "pair edited twice";
  }
  for (auto [a, b] : edit.added) {
    if (a == b) return "added self-loop";
    if (original.has_edge(a, b)) return "added pair already an edge";
    if (labels[a] == kUnlabeled || labels[b] == kUnlabeled || labels[a] == labels[b])
      return "added pair is not inter-class";
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) return "pair edited twice";
  }
  if (!perturbed.check_invariants()) return "perturbed graph is not simple and undirected";
  if (perturbed.num_edges() != original.num_edges() - edit.removed.size() + edit.added.size())
    return "perturbed edge count mismatch";
  for (auto [a, b] : edit.removed)
    if (perturbed.has_edge(a, b)) return "removed edge still present";
  for (auto [a, b] : edit.added)
    if (!perturbed.has_edge(a, b)) return "added edge missing";
  return {};
}

std::vector<NodeId> attacked_node_set(const Graph& original, const AttackEdit& edit, unsigned layers, unsigned r) {
  if (layers < 1 || r < 1) throw ConfigError("attacked_node_set: layers and r must be >= 1");
  std::vector<NodeId> sources;
  for (auto [a, b] : edit.removed) {
    sources.push_back(a);
    sources.push_back(b);
  }
  for (auto [a, b] : edit.added) {
    sources.push_back(a);
    sources.push_back(b);
  }
  if (sources.empty()) return {};
  const unsigned radius = std::min<unsigned>(layers * r, kUnreachable - 1);
  const auto dist = bounded_bfs_multi(original, sources, static_cast<std::uint16_t>(radius));
  std::vector<NodeId> out;
  for (NodeId i = 0; i < dist.size(); ++i)
    if (dist[i] != kUnreachable) out.push_back(i);
  return out;
}

std::optional<double> attack_deterioration(std::span<const std::int32_t> pred_pre,
                                           std::span<const std::int32_t> pred_post,
                                           std::span<const std::int32_t> labels, std::span<const NodeId> attacked,
                                           std::span<const NodeId> eval_idx) {
  std::vector<NodeId> eval(eval_idx.begin(), eval_idx.end());
  std::sort(eval.begin(), eval.end());
  std::size_t total = 0, pre_ok = 0, post_ok = 0;
  for (NodeId v : attacked) {
    if (!std::binary_search(eval.begin(), eval.end(), v) || labels[v] == kUnlabeled) continue;
    ++total;
    pre_ok += pred_pre[v] == labels[v];
    post_ok += pred_post[v] == labels[v];
  }
  if (total == 0 || pre_ok == 0) return std::nullopt;
  const double acc_pre = static_cast<double>(pre_ok) / static_cast<double>(total);
  const double acc_post = static_cast<double>(post_ok) / static_cast<double>(total);
  return 100.0 * (1.0 - acc_post / acc_pre);
}

std::optional<double> attack_deterioration(const GcnModel& model, const OperatorBuilder& build,
                                           const Graph& clean, const Graph& perturbed, const NodeData& data,
                                           const AttackEdit& edit, unsigned layers, unsigned r) {
  const auto attacked = attacked_node_set(clean, edit, layers, r);
  const auto pre = predict(model, build(clean), data.features);
  const auto post = predict(model, build(perturbed), data.features);
  return attack_deterioration(pre, post, data.labels, attacked, data.splits.test);
}

OperatorBuilder operator_builder_for(const GcnModel& model, const SparseMatrix& features,
                                     const OperatorOptions& opts) {
  if (model.mode != OperatorMode::kVpn) return [](const Graph& g) { return vanilla_gcn_convolution(g); };
  if (!model.theta) throw InputError("VPN model without theta");
  const ThetaVector theta = *model.theta;
  return [theta, &features, opts](const Graph& g) {
    auto bundle = build_operators(g, features, OperatorMode::kVpn, theta.order(), opts);
    return bundle.vpn->assemble(theta);
  };
}

unsigned scope_order(const GcnModel& model) {
  return model.mode == OperatorMode::kVpn && model.theta ? model.theta->order() : 1u;
}

std::vector<RobustnessRecord> evasion_sweep(const Dataset& ds, const std::vector<TrainedModels>& trained,
                                            std::span<const double> rates, std::span<const std::uint64_t> attack_seeds,
                                            unsigned layers) {
  const auto vanilla = std::find_if(trained.begin(), trained.end(),
                                    [](const TrainedModels& t) { return t.mode == OperatorMode::kVanilla; });
  if (vanilla == trained.end()) throw ConfigError("evasion_sweep: a vanilla model set is required for merit");
  for (const auto& t : trained)
    if (t.models.empty()) throw ConfigError("evasion_sweep: no trained models for mode " + to_string(t.mode));

  const SparseMatrix& x = ds.data.features;
  // Clean predictions, reused by every cell for deterioration.
  std::vector<std::vector<std::vector<std::int32_t>>> clean_pred(trained.size());
  std::vector<std::vector<SparseMatrix>> clean_ops(trained.size());
  for (std::size_t t = 0; t < trained.size(); ++t) {
    for (const auto& model : trained[t].models) {
      const auto op = operator_builder_for(model, x, trained[t].options)(ds.graph);
      clean_pred[t].push_back(predict(model, op, x));
    }
  }

  std::vector<RobustnessRecord> records;
  for (double rate : rates) {
    for (std::uint64_t aseed : attack_seeds) {
      const auto attack = dice_attack(ds.graph, ds.data.labels, rate, aseed);
      RobustnessRecord rec;
      rec.rate = rate;
      rec.attack_seed = aseed;
      rec.edits = attack.edit.size();
      for (std::size_t t = 0; t < trained.size(); ++t) {
        ModeOutcome out;
        out.mode = trained[t].mode;
        double det_sum = 0.0;
        std::size_t det_count = 0;
        for (std::size_t s = 0; s < trained[t].models.size(); ++s) {
          const auto& model = trained[t].models[s];
          const auto build = operator_builder_for(model, x, trained[t].options);
          const auto pred = predict(model, build(attack.perturbed), x);
          out.acc_post.push_back(100.0 * accuracy(pred, ds.data.labels, ds.data.splits.test));
          const auto attacked = attacked_node_set(ds.graph, attack.edit, layers, scope_order(model));
          out.n_attacked = attacked.size();
          const auto det = attack_deterioration(clean_pred[t][s], pred, ds.data.labels, attacked, ds.data.splits.test);
          if (det) {
            det_sum += *det;
            ++det_count;
          }
        }
        double sum = 0.0;
        for (double a : out.acc_post) sum += a;
        out.acc_post_mean = sum / static_cast<double>(out.acc_post.size());
        if (det_count > 0) out.deterioration = det_sum / static_cast<double>(det_count);
        rec.outcomes.push_back(std::move(out));
      }
      const double base = rec.outcomes[static_cast<std::size_t>(vanilla - trained.begin())].acc_post_mean;
      for (auto& o : rec.outcomes) o.merit = robustness_merit(o.acc_post_mean, base);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

}  // namespace vpgraph

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "vpgraph/graph.hpp"
#include "vpgraph/nn.hpp"

namespace vpgraph {

struct AttackEdit {
  std::vector<Edge> removed;  // intra-class edges deleted, (i < j)
  std::vector<Edge> added;    // inter-class pairs inserted, (i < j)
  std::string coin_log;       // one 'R' or 'A' per edit, in order
  double rate = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return removed.size() + added.size(); }
  bool empty() const { return removed.empty() && added.empty(); }
};

// Raised when both pools run dry before the budget is spent.
class AttackBudgetError : public std::runtime_error {
 public:
  AttackBudgetError(const std::string& what, std::size_t achieved, std::size_t budget)
      : std::runtime_error(what), achieved_(achieved), budget_(budget) {}
  std::size_t achieved() const { return achieved_; }
  std::size_t budget() const { return budget_; }

 private:
  std::size_t achieved_;
  std::size_t budget_;
};

struct AttackResult {
  Graph perturbed;
  AttackEdit edit;
};

// DICE: round(rate * |E|) edits; each edit flips a fair coin between deleting
// a random same-class edge and inserting a random absent cross-class pair
// (falling back to the other pool when one is empty). Nodes without a label
// are never touched.
AttackResult dice_attack(const Graph& g, std::span<const std::int32_t> labels, double rate, std::uint64_t seed);

// Class, budget and simplicity checks of an edit against its source graph.
// Returns an empty string when valid, otherwise the first violation.
std::string validate_attack(const Graph& original, const Graph& perturbed, std::span<const std::int32_t> labels,
                            const AttackEdit& edit);

// Nodes within original-graph distance layers * r of any edit endpoint, sorted.
std::vector<NodeId> attacked_node_set(const Graph& original, const AttackEdit& edit, unsigned layers, unsigned r);

// Post-attack accuracy difference in percentage points.
inline double robustness_merit(double acc_post_model, double acc_post_vanilla) {
  return acc_post_model - acc_post_vanilla;
}

// 100 * (1 - acc_post / acc_pre) over labeled nodes in attacked ∩ eval_idx.
// nullopt when that set is empty or acc_pre is 0.
std::optional<double> attack_deterioration(std::span<const std::int32_t> pred_pre,
                                           std::span<const std::int32_t> pred_post,
                                           std::span<const std::int32_t> labels, std::span<const NodeId> attacked,
                                           std::span<const NodeId> eval_idx);

using OperatorBuilder = std::function<SparseMatrix(const Graph&)>;

// Runs the frozen model on the operator of the clean and of the perturbed
// graph and compares accuracy on the theoretically affected test nodes.
std::optional<double> attack_deterioration(const GcnModel& model, const OperatorBuilder& build,
                                           const Graph& clean, const Graph& perturbed, const NodeData& data,
                                           const AttackEdit& edit, unsigned layers, unsigned r);

// Operator builder for a trained model's mode (VPN rebuilds and sparsifies the
// family on the given graph and applies the trained theta).
OperatorBuilder operator_builder_for(const GcnModel& model, const SparseMatrix& features,
                                     const OperatorOptions& opts);

// Operator order that sets the receptive field: r for VPN, 1 otherwise.
unsigned scope_order(const GcnModel& model);

struct TrainedModels {
  OperatorMode mode = OperatorMode::kVanilla;
  OperatorOptions options;
  std::vector<GcnModel> models;  // one per training seed
};

struct ModeOutcome {
  OperatorMode mode = OperatorMode::kVanilla;
  std::vector<double> acc_post;        // percent, per training seed
  double acc_post_mean = 0.0;          // percent
  double merit = 0.0;                  // vs vanilla mean, percentage points
  std::optional<double> deterioration;  // percent, mean over seeds where defined
  std::size_t n_attacked = 0;
};

struct RobustnessRecord {
  double rate = 0.0;
  std::uint64_t attack_seed = 0;
  std::size_t edits = 0;
  std::vector<ModeOutcome> outcomes;  // same order as the input models
};

// Evasion setting: models are trained on the clean graph; for every rate and
// attack seed the graph is attacked once, operators are rebuilt on it, and
// every frozen model is evaluated on the test split. Requires a vanilla entry
// for the merit baseline.
std::vector<RobustnessRecord> evasion_sweep(const Dataset& ds, const std::vector<TrainedModels>& trained,
                                            std::span<const double> rates, std::span<const std::uint64_t> attack_seeds,
                                            unsigned layers = 2);

}  // namespace vpgraph

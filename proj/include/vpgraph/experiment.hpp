#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vpgraph/adversarial.hpp"
#include "vpgraph/graph.hpp"
#include "vpgraph/nn.hpp"

namespace vpgraph {

// Flat "section.key" -> value map. Accepts the key=value text format with
// [section] headers, or a manifest.json written by a previous run.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap parse_config_text(const std::string& text);

struct ExperimentConfig {
  // [data]
  std::string source = "bundle";  // bundle | sbm
  std::string path;
  bool normalize_features = true;
  // [sbm]
  std::size_t sbm_n = 2000;
  std::size_t sbm_k = 2;
  double sbm_a_intra = 14;
  double sbm_a_inter = 2;
  double sbm_feature_noise = 0.3;
  std::vector<std::uint16_t> sbm_r_list{1, 2, 3};
  double eig_tol = 1e-8;
  std::size_t eig_max_iter = 5000;
  // [model]
  OperatorMode mode = OperatorMode::kVanilla;
  std::optional<std::uint16_t> r;  // overrides the per-mode default
  HyperParams hyper;               // mode-independent fields; r/alpha resolved per mode
  std::optional<std::vector<double>> alpha;
  OperatorOptions op_options;
  // [power]
  std::size_t hist_cap = 50;
  // [train]
  std::optional<std::size_t> top_k;  // default: half of the runs
  bool embeddings = true;
  // [attack]
  std::vector<double> rates{0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
  std::vector<std::uint64_t> attack_seeds{0, 1, 2};
  std::vector<OperatorMode> attack_modes{OperatorMode::kVanilla, OperatorMode::kVpn, OperatorMode::kRgcn};
  bool train_inline = true;
  std::string weights_dir;
  unsigned layers = 2;
  // [run]
  std::vector<std::uint64_t> seeds{0};
  std::string out = "out";

  ConfigMap resolved;  // every key with its effective value

  // Hyperparameters for one mode: per-mode r and alpha defaults unless set.
  HyperParams hyper_for(OperatorMode m, std::uint64_t seed) const;
};

// Applies defaults, validates every value and rejects unknown keys
// (ConfigError).
ExperimentConfig resolve_config(const ConfigMap& kv);

// "3", "0..99" (inclusive) or "1,5,9".
std::vector<std::uint64_t> parse_seed_list(const std::string& s);
std::vector<double> parse_double_list(const std::string& s);

// Bundle from disk, or a synthetic SBM dataset with noisy community features.
Dataset load_dataset(const ExperimentConfig& cfg, std::uint64_t seed = 0);
Dataset synthetic_sbm_dataset(std::size_t n, std::size_t k, double a_intra, double a_inter, double feature_noise,
                              std::uint64_t seed);

struct SeedRun {
  std::uint64_t seed = 0;
  TrainResult result;
};

struct SweepSummary {
  std::size_t runs = 0;
  std::size_t top_k = 0;
  double mean_top = 0, std_top = 0;  // percent
  double mean_all = 0, std_all = 0;  // percent
  std::vector<std::uint64_t> top_seeds;
};

// Ranks runs by final validation accuracy (ties: smaller seed first) and
// aggregates test accuracy over the best top_k.
SweepSummary summarize_sweep(const std::vector<SeedRun>& runs, std::size_t top_k);

// Trains one model per seed on a prebuilt operator bundle.
std::vector<SeedRun> train_sweep(const Dataset& ds, const OperatorBundle& ops, OperatorMode mode,
                                 const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds);

// Text tensor dump: a "name rows cols" header line before each tensor's rows.
void write_weights(const std::string& path, const GcnModel& model);
GcnModel read_weights(const std::string& path);

// Git blob hash: sha1("blob <len>\0" + content), lowercase hex.
std::string git_blob_sha1(const std::string& content);

// Subcommands. Each writes manifest.json plus its outputs under cfg.out and
// returns normally on success; failures throw.
void cmd_power(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg);
void cmd_attack(const ExperimentConfig& cfg);
void cmd_sbm_bench(const ExperimentConfig& cfg);

}  // namespace vpgraph

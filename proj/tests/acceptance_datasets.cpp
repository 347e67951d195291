// Acceptance runner for the citation-dataset criteria (1, 2 and 8). Reads
// bundles from $VPGRAPH_DATA_DIR/{citeseer,cora,pubmed} (default: data/ in
// the source tree). Exits 77 when a bundle is missing so ctest reports the
// test as skipped; the criterion lines still print FAIL with the reason.

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vpgraph/adversarial.hpp"
#include "vpgraph/experiment.hpp"

using namespace vpgraph;
namespace fs = std::filesystem;

namespace {

struct Reference {
  const char* name;
  double vanilla;
  std::uint16_t r_rgcn;  // r-GCN order; VPN uses one less
};
const Reference kDatasets[] = {{"citeseer", 70.3, 4}, {"cora", 81.5, 4}, {"pubmed", 79.0, 3}};

// Post-attack accuracy at rates 10..30%: GCN, r-GCN, VPN.
const std::map<std::string, std::vector<std::array<double, 3>>> kPostAttack = {
    {"citeseer", {{66.3, 68.9, 68.2}, {63.4, 67.6, 66.5}, {62.8, 66.0, 65.1}, {60.8, 64.5, 63.8}, {57.5, 62.7, 61.1}}},
    {"cora", {{76.7, 77.0, 76.9}, {74.3, 74.6, 74.8}, {72.5, 73.3, 73.1}, {70.2, 71.6, 71.3}, {69.9, 72.5, 71.9}}}};
const std::vector<double> kRates{0.10, 0.15, 0.20, 0.25, 0.30};

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

ExperimentConfig config_for(const fs::path& dir, OperatorMode mode, std::uint16_t r) {
  ConfigMap kv{{"data.source", "bundle"}, {"data.path", dir.string()}, {"model.mode", to_string(mode)}};
  if (mode != OperatorMode::kVanilla) kv["model.r"] = std::to_string(r);
  return resolve_config(kv);
}

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::uint64_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

std::uint16_t order_for(const Reference& row, OperatorMode m) {
  return m == OperatorMode::kRgcn ? row.r_rgcn : m == OperatorMode::kVpn ? row.r_rgcn - 1 : 1;
}

}  // namespace

int main() {
  const char* env = std::getenv("VPGRAPH_DATA_DIR");
  const fs::path root = env ? fs::path(env) : fs::path(VPGRAPH_SOURCE_DIR) / "data";
  std::vector<std::string> missing;
  for (const auto& row : kDatasets)
    if (!fs::exists(root / row.name / "edges.txt")) missing.push_back((root / row.name).string());
  if (!missing.empty()) {
    std::string why = "dataset bundle not found:";
    for (const auto& m : missing) why += " " + m;
    for (int id : {1, 2, 8}) report(id, false, why);
    return 77;
  }

  const OperatorMode modes[] = {OperatorMode::kVanilla, OperatorMode::kRgcn, OperatorMode::kVpn};

  // Criterion 1 (and the VPN runs reused by criterion 8).
  bool c1 = true;
  std::string d1;
  std::vector<SeedRun> citeseer_vpn;
  for (const auto& row : kDatasets) {
    std::map<OperatorMode, double> mean;
    for (auto mode : modes) {
      const auto cfg = config_for(root / row.name, mode, order_for(row, mode));
      const Dataset ds = load_dataset(cfg);
      const auto ops = build_operators(ds.graph, ds.data.features, mode, order_for(row, mode), cfg.op_options);
      auto runs = train_sweep(ds, ops, mode, cfg, seed_range(100));
      mean[mode] = summarize_sweep(runs, 50).mean_top;
      if (mode == OperatorMode::kVpn && std::string(row.name) == "citeseer") citeseer_vpn = std::move(runs);
    }
    const bool ok = std::abs(mean[OperatorMode::kVanilla] - row.vanilla) <= 1.5 &&
                    mean[OperatorMode::kRgcn] > mean[OperatorMode::kVanilla] &&
                    mean[OperatorMode::kVpn] > mean[OperatorMode::kVanilla];
    c1 &= ok;
    d1 += std::string(row.name) + ": vanilla " + fmt(mean[OperatorMode::kVanilla]) + " (target " + fmt(row.vanilla) +
          " +-1.5), rgcn " + fmt(mean[OperatorMode::kRgcn]) + ", vpn " + fmt(mean[OperatorMode::kVpn]) + "; ";
  }
  report(1, c1, d1);

  // Criterion 2: DICE evasion merit on Citeseer and Cora.
  bool c2 = true;
  std::string d2;
  for (const auto& row : kDatasets) {
    if (!kPostAttack.count(row.name)) continue;
    const auto base = config_for(root / row.name, OperatorMode::kVanilla, 1);
    const Dataset ds = load_dataset(base);
    std::vector<TrainedModels> trained;
    for (auto mode : modes) {
      const auto cfg = config_for(root / row.name, mode, order_for(row, mode));
      const auto ops = build_operators(ds.graph, ds.data.features, mode, order_for(row, mode), cfg.op_options);
      TrainedModels tm;
      tm.mode = mode;
      tm.options = cfg.op_options;
      for (auto& run : train_sweep(ds, ops, mode, cfg, seed_range(20))) tm.models.push_back(std::move(run.result.model));
      trained.push_back(std::move(tm));
    }
    const std::vector<std::uint64_t> attack_seeds{0, 1, 2};
    const auto records = evasion_sweep(ds, trained, kRates, attack_seeds);
    const auto& ref = kPostAttack.at(row.name);
    for (std::size_t ri = 0; ri < kRates.size(); ++ri) {
      double merit[3] = {0, 0, 0};
      int cnt = 0;
      for (const auto& rec : records)
        if (rec.rate == kRates[ri]) {
          ++cnt;
          for (std::size_t m = 0; m < 3; ++m) merit[m] += rec.outcomes[m].merit;
        }
      for (double& v : merit) v /= cnt;
      for (std::size_t m = 1; m < 3; ++m) {
        const double expected = ref[ri][m] - ref[ri][0];
        const bool ok = merit[m] > 0 && std::abs(merit[m] - expected) <= 2.0;
        c2 &= ok;
        if (!ok)
          d2 += std::string(row.name) + " " + to_string(modes[m]) + " @" + fmt(100 * kRates[ri]) + "%: merit " +
                fmt(merit[m]) + " (reference " + fmt(expected) + "); ";
      }
      if (std::string(row.name) == "citeseer" && ri + 1 == kRates.size()) {
        c2 &= merit[1] >= 3.0;
        d2 += "citeseer rgcn merit @30% " + fmt(merit[1]) + " (need >= 3); ";
      }
    }
  }
  report(2, c2, d2);

  // Criterion 8: learned theta_2, theta_3 on Citeseer VPN runs.
  std::size_t agree = 0;
  for (const auto& run : citeseer_vpn) {
    const auto& t = run.result.model.theta->values();
    agree += t.size() > 3 && t[2] > 0 && t[3] > 0 && t[2] >= t[3];
  }
  report(8, 2 * agree > citeseer_vpn.size(),
         std::to_string(agree) + "/" + std::to_string(citeseer_vpn.size()) +
             " Citeseer VPN seeds with theta_2 >= theta_3 > 0 (need a majority)");
  return failures == 0 ? 0 : 1;
}

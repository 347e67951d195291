#include "vpgraph/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vpgraph/error.hpp"
#include "vpgraph/io.hpp"
#include "vpgraph/spectral.hpp"

namespace vpgraph {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const ConfigMap& default_keys() {
  static const ConfigMap defaults = {
      {"run.seeds", "0"},
      {"run.out", "out"},
      {"data.source", "bundle"},
      {"data.path", ""},
      {"data.seed", "0"},
      {"data.normalize_features", "true"},
      {"sbm.n", "2000"},
      {"sbm.k", "2"},
      {"sbm.a_intra", "14"},
      {"sbm.a_inter", "2"},
      {"sbm.feature_noise", "0.3"},
      {"sbm.r_list", "1,2,3"},
      {"sbm.tol", "1e-8"},
      {"sbm.max_iter", "5000"},
      {"model.mode", "vanilla"},
      {"model.r", ""},
      {"model.hidden", "16"},
      {"model.dropout", "0.5"},
      {"model.weight_decay", "5e-4"},
      {"model.lr", "0.01"},
      {"model.theta_lr", "1e-5"},
      {"model.epochs", "200"},
      {"model.alpha", ""},
      {"model.decay_all_layers", "false"},
      {"model.dropout_both_layers", "true"},
      {"model.theta_far_init", "1e-3"},
      {"model.budget_factor", "1.0"},
      {"model.phi", "cosine"},
      {"power.hist_cap", "50"},
      {"train.top_k", ""},
      {"train.embeddings", "true"},
      {"attack.rates", "0.05,0.10,0.15,0.20,0.25,0.30"},
      {"attack.seeds", "0,1,2"},
      {"attack.modes", "vanilla,vpn,rgcn"},
      {"attack.train_inline", "true"},
      {"attack.weights_dir", ""},
      {"attack.layers", "2"},
  };
  return defaults;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf") return kKeepAll;
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return d;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key + ": not a non-negative integer: '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": integer out of range: '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::uint16_t to_order(const std::string& key, const std::string& v) {
  const auto r = to_uint(key, v);
  if (r < 1) throw ConfigError(key + ": power order r must be >= 1");
  if (r > 64) throw ConfigError(key + ": power order r above 64 is not supported");
  return static_cast<std::uint16_t>(r);
}

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

void write_json(const fs::path& path, const json& j) {
  atomic_write(path.string(), j.dump(2) + "\n");
}

std::string seed_file(const std::string& stem, std::uint64_t seed, const std::string& ext) {
  return stem + "_" + std::to_string(seed) + ext;
}

// Manifest with the resolved config and git-style hashes of every input.
void write_manifest(const ExperimentConfig& cfg, const std::string& command, const std::vector<fs::path>& inputs) {
  json files = json::object();
  std::string joined;
  std::vector<fs::path> sorted = inputs;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& p : sorted) {
    const auto h = git_blob_sha1(read_file(p.string()));
    files[p.string()] = h;
    joined += h + "  " + p.string() + "\n";
  }
  json cfg_json = json::object();
  for (const auto& [k, v] : cfg.resolved) cfg_json[k] = v;
  json m = {{"command", command},
            {"config", cfg_json},
            {"inputs", files},
            {"inputs_hash", git_blob_sha1(joined)}};
  write_json(fs::path(cfg.out) / "manifest.json", m);
}

std::vector<fs::path> dataset_inputs(const ExperimentConfig& cfg) {
  if (cfg.source != "bundle") return {};
  std::vector<fs::path> out;
  for (const char* f : {"edges.txt", "features.txt", "labels.txt", "splits.txt", "meta.txt"})
    out.push_back(fs::path(cfg.path) / f);
  return out;
}

std::string dataset_name(const ExperimentConfig& cfg, const Dataset& ds) {
  return ds.data.name.empty() ? cfg.source : ds.data.name;
}

json theta_json(const GcnModel& m) {
  if (!m.theta) return nullptr;
  return m.theta->values();
}

void write_histogram(const fs::path& path, const std::vector<std::size_t>& hist) {
  std::ostringstream ss;
  ss << "degree,count\n";
  for (std::size_t d = 0; d < hist.size(); ++d)
    ss << (d + 1 == hist.size() ? ">=" : "") << d << ',' << hist[d] << '\n';
  atomic_write(path.string(), ss.str());
}

SparseMatrix normalized_adjacency(const Graph& g) {
  std::vector<double> s(g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) s[i] = g.degree(i) ? 1.0 / std::sqrt(double(g.degree(i))) : 0.0;
  std::vector<Triplet> t;
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    for (NodeId j : g.neighbors(i)) t.push_back({i, j, s[i] * s[j]});
  return SparseMatrix::from_triplets(g.num_nodes(), g.num_nodes(), std::move(t));
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap kv;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("manifest: invalid JSON: ") + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("manifest: missing 'config' object");
    for (const auto& [k, v] : j["config"].items()) {
      if (!v.is_string()) throw ConfigError("manifest: config value for '" + k + "' is not a string");
      kv[k] = v.get<std::string>();
    }
    return kv;
  }
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    kv[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const auto lo = to_uint("seeds", trim(s.substr(0, dots)));
    const auto hi = to_uint("seeds", trim(s.substr(dots + 2)));
    if (hi < lo) throw ConfigError("seeds: empty range '" + s + "'");
    if (hi - lo > 1000000) throw ConfigError("seeds: range too large");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  for (const auto& tok : split(s, ',')) out.push_back(to_uint("seeds", tok));
  if (out.empty()) throw ConfigError("seeds: empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) out.push_back(to_double("list", tok));
  return out;
}

HyperParams ExperimentConfig::hyper_for(OperatorMode m, std::uint64_t seed) const {
  HyperParams h = hyper;
  h.seed = seed;
  const HyperParams d = default_hyper(m, m == OperatorMode::kVanilla ? 0 : r.value_or(0));
  h.r = d.r;
  h.alpha = m == OperatorMode::kRgcn ? alpha.value_or(d.alpha) : std::vector<double>{};
  return h;
}

ExperimentConfig resolve_config(const ConfigMap& kv) {
  ConfigMap all = default_keys();
  for (const auto& [k, v] : kv) {
    if (!all.count(k)) throw ConfigError("unknown config key '" + k + "'");
    all[k] = v;
  }
  ExperimentConfig c;
  c.resolved = all;
  auto get = [&](const std::string& k) -> const std::string& { return all.at(k); };

  c.seeds = parse_seed_list(get("run.seeds"));
  c.out = get("run.out");
  if (c.out.empty()) throw ConfigError("run.out must not be empty");

  c.source = get("data.source");
  if (c.source != "bundle" && c.source != "sbm") throw ConfigError("data.source must be 'bundle' or 'sbm'");
  c.path = get("data.path");
  c.normalize_features = to_bool("data.normalize_features", get("data.normalize_features"));

  c.sbm_n = to_uint("sbm.n", get("sbm.n"));
  c.sbm_k = to_uint("sbm.k", get("sbm.k"));
  c.sbm_a_intra = to_double("sbm.a_intra", get("sbm.a_intra"));
  c.sbm_a_inter = to_double("sbm.a_inter", get("sbm.a_inter"));
  SbmParams(c.sbm_n, c.sbm_k, c.sbm_a_intra, c.sbm_a_inter, 0);  // validates
  c.sbm_feature_noise = to_double("sbm.feature_noise", get("sbm.feature_noise"));
  if (!(c.sbm_feature_noise >= 0 && c.sbm_feature_noise <= 1)) throw ConfigError("sbm.feature_noise must be in [0, 1]");
  c.sbm_r_list.clear();
  for (const auto& tok : split(get("sbm.r_list"), ',')) c.sbm_r_list.push_back(to_order("sbm.r_list", tok));
  if (c.sbm_r_list.empty()) throw ConfigError("sbm.r_list must not be empty");
  c.eig_tol = to_double("sbm.tol", get("sbm.tol"));
  if (!(c.eig_tol > 0)) throw ConfigError("sbm.tol must be positive");
  c.eig_max_iter = to_uint("sbm.max_iter", get("sbm.max_iter"));

  c.mode = parse_mode(get("model.mode"));
  if (!get("model.r").empty()) c.r = to_order("model.r", get("model.r"));
  c.hyper.hidden = to_uint("model.hidden", get("model.hidden"));
  c.hyper.dropout = to_double("model.dropout", get("model.dropout"));
  c.hyper.weight_decay = to_double("model.weight_decay", get("model.weight_decay"));
  c.hyper.lr = to_double("model.lr", get("model.lr"));
  c.hyper.theta_lr = to_double("model.theta_lr", get("model.theta_lr"));
  c.hyper.epochs = to_uint("model.epochs", get("model.epochs"));
  if (!get("model.alpha").empty()) c.alpha = parse_double_list(get("model.alpha"));
  c.hyper.decay_all_layers = to_bool("model.decay_all_layers", get("model.decay_all_layers"));
  c.hyper.dropout_both_layers = to_bool("model.dropout_both_layers", get("model.dropout_both_layers"));
  c.hyper.theta_far_init = to_double("model.theta_far_init", get("model.theta_far_init"));
  c.op_options.budget_factor = to_double("model.budget_factor", get("model.budget_factor"));
  if (!(c.op_options.budget_factor >= 0)) throw ConfigError("model.budget_factor must be >= 0 (or inf)");
  const auto& phi = get("model.phi");
  if (phi == "cosine") c.op_options.phi = Aloofness::kCosine;
  else if (phi == "euclidean") c.op_options.phi = Aloofness::kEuclidean;
  else throw ConfigError("model.phi must be 'cosine' or 'euclidean'");

  c.hist_cap = to_uint("power.hist_cap", get("power.hist_cap"));
  if (c.hist_cap < 1) throw ConfigError("power.hist_cap must be >= 1");
  if (!get("train.top_k").empty()) {
    c.top_k = to_uint("train.top_k", get("train.top_k"));
    if (*c.top_k < 1 || *c.top_k > c.seeds.size()) throw ConfigError("train.top_k must be in [1, number of seeds]");
  }
  c.embeddings = to_bool("train.embeddings", get("train.embeddings"));

  c.rates = parse_double_list(get("attack.rates"));
  if (c.rates.empty()) throw ConfigError("attack.rates must not be empty");
  for (double r : c.rates)
    if (!(r >= 0 && r <= 1)) throw ConfigError("attack.rates entries must be in [0, 1]");
  c.attack_seeds = parse_seed_list(get("attack.seeds"));
  c.attack_modes.clear();
  for (const auto& tok : split(get("attack.modes"), ',')) c.attack_modes.push_back(parse_mode(tok));
  if (std::find(c.attack_modes.begin(), c.attack_modes.end(), OperatorMode::kVanilla) == c.attack_modes.end())
    throw ConfigError("attack.modes must include vanilla (the merit baseline)");
  c.train_inline = to_bool("attack.train_inline", get("attack.train_inline"));
  c.weights_dir = get("attack.weights_dir");
  c.layers = static_cast<unsigned>(to_uint("attack.layers", get("attack.layers")));
  if (c.layers < 1) throw ConfigError("attack.layers must be >= 1");

  // Every mode this config can run must pass the training preconditions.
  std::vector<OperatorMode> modes = c.attack_modes;
  modes.push_back(c.mode);
  for (auto m : modes) c.hyper_for(m, 0).validate(m);
  return c;
}

Dataset synthetic_sbm_dataset(std::size_t n, std::size_t k, double a_intra, double a_inter, double feature_noise,
                              std::uint64_t seed) {
  const auto sample = sbm_generate(SbmParams(n, k, a_intra, a_inter, seed));
  Dataset ds;
  ds.graph = sample.graph;
  ds.data.name = "sbm";
  ds.data.num_classes = k;
  ds.data.labels.assign(sample.community.begin(), sample.community.end());

  // Column c < k marks a community (correct with probability 1 - noise);
  // columns k..k+15 are shared noise words.
  Rng rng = make_rng(seed, "features");
  const std::size_t noise_words = 16;
  std::vector<Triplet> t;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto c = static_cast<std::uint32_t>(ds.data.labels[i]);
    if (uniform01(rng) < feature_noise) c = static_cast<std::uint32_t>(uniform_index(rng, k));
    t.push_back({i, c, 1.0});
    for (int w = 0; w < 2; ++w) t.push_back({i, static_cast<std::uint32_t>(k + uniform_index(rng, noise_words)), 1.0});
  }
  ds.data.features = SparseMatrix::from_triplets(n, k + noise_words, std::move(t));

  Rng srng = make_rng(seed, "splits");
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), srng);
  std::vector<std::size_t> per_class(k, 0);
  std::vector<NodeId> rest;
  for (NodeId v : order) {
    auto& cnt = per_class[static_cast<std::size_t>(ds.data.labels[v])];
    if (cnt < 20) {
      ++cnt;
      ds.data.splits.train.push_back(v);
    } else {
      rest.push_back(v);
    }
  }
  const std::size_t n_val = std::min<std::size_t>(500, rest.size() / 3);
  const std::size_t n_test = std::min<std::size_t>(1000, rest.size() - n_val);
  ds.data.splits.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
  ds.data.splits.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val),
                             rest.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  for (auto* s : {&ds.data.splits.train, &ds.data.splits.val, &ds.data.splits.test}) std::sort(s->begin(), s->end());
  ds.data.validate(n);
  return ds;
}

Dataset load_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  Dataset ds;
  if (cfg.source == "bundle") {
    if (cfg.path.empty()) throw ConfigError("data.path is required for data.source = bundle");
    ds = load_graph_text(cfg.path);
  } else {
    ds = synthetic_sbm_dataset(cfg.sbm_n, cfg.sbm_k, cfg.sbm_a_intra, cfg.sbm_a_inter, cfg.sbm_feature_noise, seed);
  }
  if (cfg.normalize_features) ds.data.features = row_normalize(ds.data.features);
  return ds;
}

SweepSummary summarize_sweep(const std::vector<SeedRun>& runs, std::size_t top_k) {
  if (runs.empty()) throw ConfigError("summarize_sweep: no runs");
  if (top_k < 1 || top_k > runs.size()) throw ConfigError("summarize_sweep: top_k out of range");
  std::vector<const SeedRun*> order;
  for (const auto& r : runs) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const SeedRun* a, const SeedRun* b) {
    if (a->result.final_val_acc != b->result.final_val_acc) return a->result.final_val_acc > b->result.final_val_acc;
    return a->seed < b->seed;
  });
  SweepSummary s;
  s.runs = runs.size();
  s.top_k = top_k;
  std::vector<double> top, all;
  for (std::size_t i = 0; i < order.size(); ++i) {
    all.push_back(100.0 * order[i]->result.test_acc);
    if (i < top_k) {
      top.push_back(100.0 * order[i]->result.test_acc);
      s.top_seeds.push_back(order[i]->seed);
    }
  }
  s.mean_top = mean(top);
  s.std_top = stddev(top);
  s.mean_all = mean(all);
  s.std_all = stddev(all);
  return s;
}

std::vector<SeedRun> train_sweep(const Dataset& ds, const OperatorBundle& ops, OperatorMode mode,
                                 const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  std::vector<SeedRun> runs;
  runs.reserve(seeds.size());
  for (auto seed : seeds) runs.push_back({seed, train(ds.data, ops, mode, cfg.hyper_for(mode, seed))});
  return runs;
}

void write_weights(const std::string& path, const GcnModel& model) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  ss << "mode " << to_string(model.mode) << "\n";
  auto dump = [&](const char* name, const Matrix& m) {
    ss << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) ss << (j ? " " : "") << m(i, j);
      ss << '\n';
    }
  };
  dump("W1", model.w1);
  dump("W2", model.w2);
  if (model.theta) {
    Matrix t(1, model.theta->size());
    for (std::size_t k = 0; k < model.theta->size(); ++k) t(0, k) = (*model.theta)[k];
    dump("theta", t);
  }
  atomic_write(path, ss.str());
}

GcnModel read_weights(const std::string& path) {
  std::istringstream in(read_file(path));
  GcnModel m;
  std::string tag, mode;
  if (!(in >> tag >> mode) || tag != "mode") throw InputError(path + ": expected 'mode' header");
  m.mode = parse_mode(mode);
  std::string name;
  std::size_t rows = 0, cols = 0;
  while (in >> name >> rows >> cols) {
    Matrix t(rows, cols);
    for (auto& v : t.data())
      if (!(in >> v)) throw InputError(path + ": truncated tensor " + name);
    if (name == "W1") m.w1 = std::move(t);
    else if (name == "W2") m.w2 = std::move(t);
    else if (name == "theta") m.theta = ThetaVector(t.data());
    else throw InputError(path + ": unknown tensor " + name);
  }
  if (m.w1.empty() || m.w2.empty()) throw InputError(path + ": missing W1 or W2");
  if ((m.mode == OperatorMode::kVpn) != m.theta.has_value()) throw InputError(path + ": theta presence does not match mode");
  if (m.theta) m.hyper.r = m.theta->order();
  return m;
}

std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha1 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return ss.str();
}

void cmd_power(const ExperimentConfig& cfg) {
  const std::uint16_t r = cfg.r.value_or(4);
  const Dataset ds = load_dataset(cfg, cfg.seeds.front());
  const fs::path out(cfg.out);

  const auto fam = distance_adjacency_family(ds.graph, r);
  SparsifyStats stats;
  const auto pruned = sparsify(fam, ds.graph, ds.data.features, cfg.op_options.phi, cfg.op_options.budget_factor, &stats);

  json summary = {{"dataset", dataset_name(cfg, ds)},
                  {"n", ds.graph.num_nodes()},
                  {"edges", ds.graph.num_edges()},
                  {"r", r},
                  {"budget_factor", num(cfg.op_options.budget_factor)}};
  json per_k = json::array();
  for (std::uint16_t k = 0; k <= r; ++k) {
    write_triplets_file((out / "family" / ("A_" + std::to_string(k) + ".txt")).string(), fam.adjacency(k));
    write_triplets_file((out / "family" / ("Abar_" + std::to_string(k) + ".txt")).string(), pruned.adjacency(k, true));
    json entry = {{"k", k}, {"support", fam.support_size(k)}, {"support_pruned", pruned.support_size(k, true)}};
    if (k >= 1) {
      const Graph gk = powered_graph(ds.graph, k);
      write_histogram(out / "hist" / ("degree_G" + std::to_string(k) + ".csv"), degree_histogram(gk, cfg.hist_cap));
      entry["mean_degree_powered"] = gk.mean_degree();
    }
    per_k.push_back(entry);
  }
  // The sparsified powered neighbourhood the VPN operator actually uses.
  std::vector<Edge> kept;
  for (NodeId i = 0; i < pruned.num_nodes(); ++i) {
    auto cols = pruned.row_cols(i);
    auto keep = pruned.row_kept(i);
    for (std::size_t e = 0; e < cols.size(); ++e)
      if (keep[e] && i < cols[e]) kept.emplace_back(i, cols[e]);
  }
  const Graph sparse_graph = Graph::from_edges(ds.graph.num_nodes(), kept);
  write_histogram(out / "hist" / "degree_sparsified.csv", degree_histogram(sparse_graph, cfg.hist_cap));
  summary["mean_degree_sparsified"] = sparse_graph.mean_degree();
  summary["per_k"] = per_k;

  std::ostringstream dec;
  dec << "decile,candidates,kept\n";
  for (std::size_t d = 0; d < 10; ++d)
    dec << d << ',' << stats.candidates_by_decile[d] << ',' << stats.kept_by_decile[d] << '\n';
  atomic_write((out / "sparsify_deciles.csv").string(), dec.str());
  summary["far_candidates"] = stats.far_candidates;
  summary["far_kept"] = stats.far_kept;
  write_json(out / "power.json", summary);
  write_manifest(cfg, "power", dataset_inputs(cfg));
}

void cmd_train(const ExperimentConfig& cfg) {
  const Dataset ds = load_dataset(cfg, 0);
  const fs::path out(cfg.out);
  const OperatorMode mode = cfg.mode;
  const auto h0 = cfg.hyper_for(mode, 0);
  const auto ops = build_operators(ds.graph, ds.data.features, mode, h0.r, cfg.op_options);
  const std::string name = dataset_name(cfg, ds);

  std::vector<SeedRun> runs;
  for (auto seed : cfg.seeds) {
    SeedRun run{seed, train(ds.data, ops, mode, cfg.hyper_for(mode, seed))};
    const auto& res = run.result;
    json j = {{"mode", to_string(mode)},
              {"dataset", name},
              {"seed", seed},
              {"test_acc", res.test_acc},
              {"final_val_acc", res.final_val_acc},
              {"val_curve", res.val_acc},
              {"train_loss", res.train_loss},
              {"theta", theta_json(res.model)}};
    write_json(out / "runs" / seed_file("seed", seed, ".json"), j);
    write_weights((out / "weights" / to_string(mode) / seed_file("seed", seed, ".txt")).string(), res.model);
    if (cfg.embeddings) {
      const Matrix h = hidden_embeddings(res.model, ops.inference_operator(res.model), ds.data.features);
      std::ostringstream ss;
      ss << std::setprecision(9) << h.rows() << ' ' << h.cols() << '\n';
      for (std::size_t i = 0; i < h.rows(); ++i) {
        for (std::size_t c = 0; c < h.cols(); ++c) ss << (c ? " " : "") << h(i, c);
        ss << ' ' << ds.data.labels[i] << '\n';
      }
      atomic_write((out / "embeddings" / seed_file("seed", seed, ".txt")).string(), ss.str());
    }
    runs.push_back(std::move(run));
  }

  const std::size_t top_k = cfg.top_k.value_or(std::max<std::size_t>(1, runs.size() / 2));
  const auto s = summarize_sweep(runs, top_k);
  json summary = {{"mode", to_string(mode)},
                  {"dataset", name},
                  {"r", h0.r},
                  {"runs", s.runs},
                  {"top_k", s.top_k},
                  {"mean_test_acc_top", s.mean_top},
                  {"std_test_acc_top", s.std_top},
                  {"mean_test_acc_all", s.mean_all},
                  {"std_test_acc_all", s.std_all},
                  {"top_seeds", s.top_seeds}};
  if (mode == OperatorMode::kVpn) {
    json thetas = json::array();
    for (const auto& r : runs) thetas.push_back(theta_json(r.result.model));
    summary["theta"] = thetas;
  }
  write_json(out / "summary.json", summary);
  std::cout << name << " " << to_string(mode) << ": top " << s.top_k << "/" << s.runs << " mean test acc "
            << fmt(s.mean_top) << " +- " << fmt(s.std_top) << "\n";
  write_manifest(cfg, "train", dataset_inputs(cfg));
}

void cmd_attack(const ExperimentConfig& cfg) {
  const fs::path out(cfg.out);
  // Resolve weight sources before any computation.
  std::vector<fs::path> inputs = dataset_inputs(cfg);
  std::map<std::pair<OperatorMode, std::uint64_t>, fs::path> weight_files;
  for (auto mode : cfg.attack_modes)
    for (auto seed : cfg.seeds) {
      fs::path p;
      if (!cfg.weights_dir.empty()) p = fs::path(cfg.weights_dir) / to_string(mode) / seed_file("seed", seed, ".txt");
      if (!p.empty() && fs::exists(p)) {
        weight_files[{mode, seed}] = p;
        inputs.push_back(p);
      } else if (!cfg.train_inline) {
        throw ConfigError("attack: missing weights for mode " + to_string(mode) + " seed " + std::to_string(seed) +
                          (cfg.weights_dir.empty() ? " (attack.weights_dir not set)" : " at " + p.string()) +
                          " and attack.train_inline = false");
      }
    }

  const Dataset ds = load_dataset(cfg, 0);
  const std::string name = dataset_name(cfg, ds);
  std::vector<TrainedModels> trained;
  json clean = json::object();
  for (auto mode : cfg.attack_modes) {
    TrainedModels tm;
    tm.mode = mode;
    tm.options = cfg.op_options;
    std::optional<OperatorBundle> ops;
    std::vector<double> accs;
    for (auto seed : cfg.seeds) {
      const HyperParams h = cfg.hyper_for(mode, seed);
      GcnModel model;
      if (auto it = weight_files.find({mode, seed}); it != weight_files.end()) {
        model = read_weights(it->second.string());
        if (model.mode != mode) throw InputError(it->second.string() + ": weights are for a different mode");
        model.hyper = h;
      } else {
        if (!ops) ops = build_operators(ds.graph, ds.data.features, mode, h.r, cfg.op_options);
        model = train(ds.data, *ops, mode, h).model;
      }
      accs.push_back(100.0 * accuracy(predict(model, operator_builder_for(model, ds.data.features, cfg.op_options)(ds.graph),
                                              ds.data.features),
                                      ds.data.labels, ds.data.splits.test));
      tm.models.push_back(std::move(model));
    }
    clean[to_string(mode)] = {{"mean", mean(accs)}, {"std", stddev(accs)}};
    trained.push_back(std::move(tm));
  }

  const auto records = evasion_sweep(ds, trained, cfg.rates, cfg.attack_seeds, cfg.layers);

  std::ostringstream csv, runs_csv;
  csv << "dataset,mode,rate,seed,acc_post,merit,deterioration,n_attacked\n";
  runs_csv << "dataset,mode,rate,attack_seed,train_seed,acc_post\n";
  std::map<std::pair<double, OperatorMode>, std::vector<const ModeOutcome*>> cells;
  for (const auto& rec : records)
    for (const auto& o : rec.outcomes) {
      csv << name << ',' << to_string(o.mode) << ',' << fmt(rec.rate) << ',' << rec.attack_seed << ','
          << fmt(o.acc_post_mean) << ',' << fmt(o.merit) << ',' << (o.deterioration ? fmt(*o.deterioration) : "")
          << ',' << o.n_attacked << '\n';
      for (std::size_t s = 0; s < o.acc_post.size(); ++s)
        runs_csv << name << ',' << to_string(o.mode) << ',' << fmt(rec.rate) << ',' << rec.attack_seed << ','
                 << cfg.seeds[s] << ',' << fmt(o.acc_post[s]) << '\n';
      cells[{rec.rate, o.mode}].push_back(&o);
    }
  atomic_write((out / "attack.csv").string(), csv.str());
  atomic_write((out / "attack_runs.csv").string(), runs_csv.str());

  json table = json::array();
  for (double rate : cfg.rates) {
    json row = {{"rate", rate}};
    for (auto mode : cfg.attack_modes) {
      std::vector<double> acc, merit, det;
      for (const auto* o : cells[{rate, mode}]) {
        acc.push_back(o->acc_post_mean);
        merit.push_back(o->merit);
        if (o->deterioration) det.push_back(*o->deterioration);
      }
      row[to_string(mode)] = {{"acc_post_mean", mean(acc)},
                              {"acc_post_std", stddev(acc)},
                              {"merit_mean", mean(merit)},
                              {"merit_std", stddev(merit)},
                              {"deterioration_mean", det.empty() ? json(nullptr) : json(mean(det))},
                              {"scope", cfg.layers * (mode == OperatorMode::kVpn ? cfg.hyper_for(mode, 0).r : 1u)}};
    }
    table.push_back(row);
  }
  write_json(out / "attack_summary.json", {{"dataset", name},
                                           {"train_seeds", cfg.seeds},
                                           {"attack_seeds", cfg.attack_seeds},
                                           {"clean", clean},
                                           {"rates", table}});
  write_manifest(cfg, "attack", inputs);
}

void cmd_sbm_bench(const ExperimentConfig& cfg) {
  if (cfg.sbm_k != 2) throw ConfigError("sbm-bench: only two-community models are supported (sbm.k = 2)");
  const fs::path out(cfg.out);
  const SbmParams base(cfg.sbm_n, 2, cfg.sbm_a_intra, cfg.sbm_a_inter, 0);
  if (base.snr() <= 1.0)
    std::cerr << "warning: xi2^2/xi1 = " << base.snr() << " <= 1, below the weak-recovery threshold\n";
  const EigenOptions eo{.tol = cfg.eig_tol, .max_iter = cfg.eig_max_iter, .seed = 0};

  json records = json::array();
  std::ostringstream csv;
  csv << "r,seed,operator,lambda1,lambda2,lambda3,gap12,gap23,theta_l1,overlap,agreement,error\n";
  std::map<std::pair<std::string, unsigned>, std::vector<double>> gaps, overlaps;
  for (auto r : cfg.sbm_r_list) {
    for (auto seed : cfg.seeds) {
      const auto sample = sbm_generate(SbmParams(cfg.sbm_n, 2, cfg.sbm_a_intra, cfg.sbm_a_inter, seed));
      const auto sigma = sample.sigma();
      const auto fam = distance_adjacency_family(sample.graph, r);
      const auto vpo = assemble_power_operator(fam, ThetaVector::ones(r));
      const auto adj = sample.graph.adjacency();
      const auto norm = normalized_adjacency(sample.graph);
      struct Entry {
        std::string name;
        SymmetricOperator op;
        double theta_l1;
      };
      const std::vector<Entry> ops = {{"variable_power", as_operator(vpo.matrix), vpo.theta.l1()},
                                      {"adjacency", as_operator(adj), 1.0},
                                      {"adjacency_power", matrix_power_operator(adj, r), 1.0},
                                      {"normalized_adjacency", as_operator(norm), 1.0}};
      for (const auto& e : ops) {
        EigenOptions o = eo;
        o.seed = seed;
        json rec = {{"operator", e.name}, {"r", r}, {"seed", seed}, {"n", cfg.sbm_n}, {"theta_l1", e.theta_l1}};
        try {
          const auto rep = separation_report(e.op, o);
          const auto labels = recover_communities(e.op, o);
          const double ov = community_overlap(labels, sigma), ag = community_agreement(labels, sigma);
          rec.update({{"lambda1", rep.lambda1}, {"lambda2", rep.lambda2}, {"lambda3", rep.lambda3},
                      {"gap12", num(rep.gap12)}, {"gap23", num(rep.gap23)}, {"overlap", ov}, {"agreement", ag}});
          csv << r << ',' << seed << ',' << e.name << ',' << fmt(rep.lambda1) << ',' << fmt(rep.lambda2) << ','
              << fmt(rep.lambda3) << ',' << fmt(rep.gap12) << ',' << fmt(rep.gap23) << ',' << fmt(e.theta_l1) << ','
              << fmt(ov) << ',' << fmt(ag) << ",\n";
          gaps[{e.name, r}].push_back(rep.gap23);
          overlaps[{e.name, r}].push_back(ov);
        } catch (const NumericalError& err) {
          rec["error"] = err.what();
          rec["last_residual"] = err.last_residual();
          csv << r << ',' << seed << ',' << e.name << ",,,,,,," << ",," << "no convergence\n";
        }
        records.push_back(rec);
      }
    }
  }
  json summary = json::array();
  for (const auto& [key, g] : gaps)
    summary.push_back({{"operator", key.first},
                       {"r", key.second},
                       {"median_gap23", num(median(g))},
                       {"median_overlap", median(overlaps[key])},
                       {"cells", g.size()}});
  write_json(out / "sbm_bench.json", {{"xi1", base.xi1()},
                                      {"xi2", base.xi2()},
                                      {"snr", base.snr()},
                                      {"records", records},
                                      {"summary", summary}});
  atomic_write((out / "sbm_bench.csv").string(), csv.str());
  write_manifest(cfg, "sbm-bench", {});
}

}  // namespace vpgraph

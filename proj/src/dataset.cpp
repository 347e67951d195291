#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "vpgraph/error.hpp"
#include "vpgraph/graph.hpp"
#include "vpgraph/io.hpp"

namespace vpgraph {

namespace {

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("missing file: " + p.string());
  return in;
}

bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

std::size_t parse_index(const std::string& tok, std::size_t n, const std::string& where) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &used);
  } catch (const std::exception&) {
    throw InputError(where + ": not a decimal index: '" + tok + "'");
  }
  if (used != tok.size() || tok[0] == '-') throw InputError(where + ": not a decimal index: '" + tok + "'");
  if (v >= n) throw InputError(where + ": node index out of range: " + tok);
  return static_cast<std::size_t>(v);
}

std::map<std::string, std::string> read_meta(const std::filesystem::path& p) {
  auto in = open_or_throw(p);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (skip_line(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("meta.txt: expected key=value, got '" + line + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace

Dataset load_graph_text(const std::string& dir) {
  const std::filesystem::path root(dir);
  Dataset ds;

  auto meta = read_meta(root / "meta.txt");
  if (!meta.count("classes")) throw InputError("meta.txt: missing 'classes'");
  ds.data.num_classes = std::stoul(meta["classes"]);
  ds.data.name = meta.count("name") ? meta["name"] : root.filename().string();

  {
    auto in = open_or_throw(root / "features.txt");
    try {
      ds.data.features = read_triplets(in);
    } catch (const InputError& e) {
      throw InputError(std::string("features.txt: ") + e.what());
    }
  }
  const std::size_t n = ds.data.features.rows();

  {
    auto in = open_or_throw(root / "edges.txt");
    std::vector<Edge> edges;
    std::string line;
    while (std::getline(in, line)) {
      if (skip_line(line)) continue;
      std::istringstream ls(line);
      std::string a, b;
      if (!(ls >> a >> b)) throw InputError("edges.txt: malformed line '" + line + "'");
      edges.emplace_back(static_cast<NodeId>(parse_index(a, n, "edges.txt")),
                         static_cast<NodeId>(parse_index(b, n, "edges.txt")));
    }
    ds.graph = Graph::from_edges(n, edges, &ds.dropped_edge_lines);
    if (ds.dropped_edge_lines > 0)
      std::cerr << "warning: " << ds.dropped_edge_lines << " self-loop/duplicate edge lines dropped in "
                << (root / "edges.txt").string() << "\n";
  }

  ds.data.labels.assign(n, kUnlabeled);
  {
    auto in = open_or_throw(root / "labels.txt");
    std::string line;
    while (std::getline(in, line)) {
      if (skip_line(line)) continue;
      std::istringstream ls(line);
      std::string a;
      long long label = 0;
      if (!(ls >> a >> label)) throw InputError("labels.txt: malformed line '" + line + "'");
      const auto i = parse_index(a, n, "labels.txt");
      if (label < 0 || static_cast<std::size_t>(label) >= ds.data.num_classes)
        throw InputError("labels.txt: label outside declared class count: " + std::to_string(label));
      ds.data.labels[i] = static_cast<std::int32_t>(label);
    }
  }

  {
    auto in = open_or_throw(root / "splits.txt");
    std::vector<NodeId>* parts[] = {&ds.data.splits.train, &ds.data.splits.val, &ds.data.splits.test};
    std::string line;
    for (auto* part : parts) {
      if (!std::getline(in, line)) throw InputError("splits.txt: expected three lines");
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) part->push_back(static_cast<NodeId>(parse_index(tok, n, "splits.txt")));
    }
  }

  ds.data.validate(n);
  return ds;
}

void write_graph_text(const std::string& dir, const Graph& g, const NodeData& data) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  {
    std::ostringstream ss;
    for (auto [a, b] : g.edge_list()) ss << a << ' ' << b << '\n';
    atomic_write((root / "edges.txt").string(), ss.str());
  }
  write_triplets_file((root / "features.txt").string(), data.features);
  {
    std::ostringstream ss;
    for (std::size_t i = 0; i < data.labels.size(); ++i)
      if (data.labels[i] != kUnlabeled) ss << i << ' ' << data.labels[i] << '\n';
    atomic_write((root / "labels.txt").string(), ss.str());
  }
  {
    std::ostringstream ss;
    for (const auto* part : {&data.splits.train, &data.splits.val, &data.splits.test}) {
      for (std::size_t k = 0; k < part->size(); ++k) ss << (k ? " " : "") << (*part)[k];
      ss << '\n';
    }
    atomic_write((root / "splits.txt").string(), ss.str());
  }
  atomic_write((root / "meta.txt").string(),
               "classes=" + std::to_string(data.num_classes) + "\nname=" + data.name + "\n");
}

}  // namespace vpgraph

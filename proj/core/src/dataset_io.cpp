#include "chebnet/dataset_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace chebnet {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "chebnet.dataset.v1";

json graph_to_json(const Graph& g) {
  json j;
  j["id"] = g.id;
  j["n"] = g.n_nodes;
  json edges = json::array();
  json weights = json::array();
  bool any_weighted = false;
  for (std::size_t r = 0; r < g.adj.n; ++r)
    for (std::size_t k = g.adj.offsets[r]; k < g.adj.offsets[r + 1]; ++k) {
      const std::size_t c = g.adj.indices[k];
      if (c <= r) continue;  // store each undirected edge once
      edges.push_back(r);
      edges.push_back(c);
      weights.push_back(g.adj.values[k]);
      any_weighted |= g.adj.values[k] != 1.0;
    }
  j["edges"] = std::move(edges);
  if (any_weighted) j["weights"] = std::move(weights);
  if (!g.codes.empty()) j["codes"] = g.codes;
  if (g.features.rows > 0) {
    json rows = json::array();
    for (std::size_t r = 0; r < g.features.rows; ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < g.features.cols; ++c) row.push_back(g.features(r, c));
      rows.push_back(std::move(row));
    }
    j["features"] = std::move(rows);
  }
  if (!g.node_labels.empty()) j["labels"] = g.node_labels;
  if (g.graph_label) j["label"] = *g.graph_label;
  return j;
}

Graph graph_from_json(const json& j) {
  const auto n = j.at("n").get<std::size_t>();
  const auto& edges = j.at("edges");
  if (!edges.is_array() || edges.size() % 2 != 0)
    throw std::invalid_argument("'edges' must be a flat array of index pairs");
  std::vector<EdgeSpec> list(edges.size() / 2);
  for (std::size_t i = 0; i < list.size(); ++i) {
    list[i].u = edges[2 * i].get<std::size_t>();
    list[i].v = edges[2 * i + 1].get<std::size_t>();
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    if (w.size() != list.size())
      throw std::invalid_argument("'weights' length must match the edge count");
    for (std::size_t i = 0; i < list.size(); ++i) list[i].w = w[i].get<double>();
  }
  Graph g = build_graph(n, list);
  g.id = j.value("id", std::int64_t{0});
  if (j.contains("codes")) g.codes = j.at("codes").get<std::vector<int>>();
  if (j.contains("features")) {
    const auto& rows = j.at("features");
    if (rows.size() != n) throw std::invalid_argument("'features' must have one row per node");
    const std::size_t d = rows.empty() ? 0 : rows[0].size();
    g.features = Matrix(n, d);
    for (std::size_t r = 0; r < n; ++r) {
      if (rows[r].size() != d) throw std::invalid_argument("ragged 'features' rows");
      for (std::size_t c = 0; c < d; ++c) g.features(r, c) = rows[r][c].get<double>();
    }
  }
  if (j.contains("labels")) g.node_labels = j.at("labels").get<std::vector<int>>();
  if (j.contains("label")) g.graph_label = j.at("label").get<double>();
  validate_graph(g);
  return g;
}

}  // namespace

std::string dataset_to_string(const Dataset& ds) {
  std::ostringstream out;
  json header;
  header["schema"] = kSchema;
  header["task"] = to_string(ds.task);
  header["vocab"] = ds.vocab;
  header["n_graphs"] = ds.graphs.size();
  header["splits"] = {{"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}};
  out << header.dump() << "\n";
  for (const Graph& g : ds.graphs) out << graph_to_json(g).dump() << "\n";
  return out.str();
}

Dataset dataset_from_string(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& why) -> std::runtime_error {
    return std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + why);
  };

  Dataset ds;
  if (!std::getline(in, line)) {
    line_no = 1;
    throw fail("empty dataset file");
  }
  line_no = 1;
  json header;
  try {
    header = json::parse(line);
    if (header.value("schema", "") != kSchema)
      throw std::invalid_argument("unrecognized schema (expected " + std::string(kSchema) + ")");
    ds.task = task_from_string(header.at("task").get<std::string>());
    ds.vocab = header.at("vocab").get<std::size_t>();
    Splits s;
    s.train = header.at("splits").at("train").get<std::vector<std::size_t>>();
    s.val = header.at("splits").at("val").get<std::vector<std::size_t>>();
    s.test = header.at("splits").at("test").get<std::vector<std::size_t>>();
    ds.splits = std::move(s);
  } catch (const std::exception& e) {
    throw fail(e.what());
  }
  const auto declared = header.value("n_graphs", std::size_t{0});

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      Graph g = graph_from_json(json::parse(line));
      if (!g.codes.empty())
        for (const int c : g.codes)
          if (c < 0 || static_cast<std::size_t>(c) >= ds.vocab)
            throw std::invalid_argument("feature code " + std::to_string(c) +
                                        " inconsistent with vocab " + std::to_string(ds.vocab));
      ds.graphs.push_back(std::move(g));
    } catch (const std::exception& e) {
      throw fail(e.what());
    }
  }
  line_no += 1;
  if (declared != ds.graphs.size())
    throw fail("header declares " + std::to_string(declared) + " graphs, file has " +
               std::to_string(ds.graphs.size()));
  // re-validate split indices against the loaded graph count
  Splits s = std::move(ds.splits);
  ds.splits = {};
  set_splits(ds, std::move(s));
  return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << dataset_to_string(ds);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_string(buf.str(), path);
}

}  // namespace chebnet

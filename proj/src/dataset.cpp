#include "gjepa/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gjepa/error.hpp"
#include "gjepa/hash.hpp"

namespace gjepa {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::ifstream open_in(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DatasetError(Errc::io_error, file.string(), 0, "cannot open");
  return in;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_token(std::string_view tok, T& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && !tok.empty();
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write " + file.string());
  out << text;
  if (!out) fail(Errc::io_error, "short write to " + file.string());
}

std::vector<NodeId> node_array(const ordered_json& j, const fs::path& file, const char* key,
                               std::size_t n_nodes) {
  std::vector<NodeId> ids;
  if (!j.contains(key)) return ids;
  const auto& arr = j.at(key);
  if (!arr.is_array())
    throw DatasetError(Errc::parse_error, file.string(), 0, std::string(key) + " is not an array");
  for (const auto& v : arr) {
    if (!v.is_number_integer())
      throw DatasetError(Errc::parse_error, file.string(), 0,
                         std::string(key) + " holds a non-integer entry");
    const auto id = v.get<std::int64_t>();
    if (id < 0 || static_cast<std::size_t>(id) >= n_nodes)
      throw DatasetError(Errc::index_out_of_range, file.string(), 0,
                         std::string(key) + " entry " + std::to_string(id) + " outside [0, " +
                             std::to_string(n_nodes) + ")");
    ids.push_back(static_cast<NodeId>(id));
  }
  return ids;
}

}  // namespace

void validate_split(const Split& split, std::size_t n_nodes) {
  std::vector<int> owner(n_nodes, -1);
  const std::vector<NodeId>* sets[] = {&split.train, &split.val, &split.test};
  for (int s = 0; s < 3; ++s)
    for (NodeId v : *sets[s]) {
      if (v < 0 || static_cast<std::size_t>(v) >= n_nodes)
        fail(Errc::degenerate_split, "split node " + std::to_string(v) + " out of range");
      if (owner[v] != -1) fail(Errc::degenerate_split, "node " + std::to_string(v) + " appears twice in the split");
      owner[v] = s;
    }
  if (split.train.empty() || split.test.empty())
    fail(Errc::degenerate_split, "train and test sets must be nonempty");
}

std::size_t count_classes(const std::vector<int>& labels) {
  std::set<int> c;
  for (int l : labels)
    if (l >= 0) c.insert(l);
  return c.size();
}

std::vector<Edge> read_edges(const fs::path& file, std::size_t n_nodes) {
  auto in = open_in(file);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = strip(line);
    if (s.empty() || s.front() == '#') continue;
    const auto tok = split_ws(s);
    std::int64_t u = 0, v = 0;
    if (tok.size() != 2 || !parse_token(tok[0], u) || !parse_token(tok[1], v))
      throw DatasetError(Errc::parse_error, file.string(), lineno,
                         "expected two integer node ids, got '" + std::string(s) + "'");
    for (auto id : {u, v})
      if (id < 0 || static_cast<std::size_t>(id) >= n_nodes)
        throw DatasetError(Errc::index_out_of_range, file.string(), lineno,
                           "node id " + std::to_string(id) + " outside [0, " +
                               std::to_string(n_nodes) + ")");
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  return edges;
}

DenseMatrix read_features(const fs::path& file) {
  auto in = open_in(file);
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = strip(line);
    if (s.empty()) continue;
    std::size_t count = 0;
    std::string_view rest = s;
    while (true) {
      const auto comma = rest.find(',');
      const auto tok = strip(rest.substr(0, comma));
      double x = 0.0;
      if (!parse_token(tok, x))
        throw DatasetError(Errc::parse_error, file.string(), lineno,
                           "bad real '" + std::string(tok) + "' in column " + std::to_string(count + 1));
      values.push_back(x);
      ++count;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (rows == 0) cols = count;
    else if (count != cols)
      throw DatasetError(Errc::count_mismatch, file.string(), lineno,
                         std::to_string(count) + " columns, expected " + std::to_string(cols));
    ++rows;
  }
  return DenseMatrix(rows, cols, std::move(values));
}

std::vector<int> read_labels(const fs::path& file) {
  auto in = open_in(file);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = strip(line);
    if (s.empty()) continue;
    int l = 0;
    if (!parse_token(s, l) || l < -1)
      throw DatasetError(Errc::parse_error, file.string(), lineno,
                         "expected a label >= -1, got '" + std::string(s) + "'");
    labels.push_back(l);
  }
  return labels;
}

Split read_splits(const fs::path& file, std::size_t n_nodes) {
  auto in = open_in(file);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetError(Errc::parse_error, file.string(), 0, e.what());
  }
  if (!j.is_object()) throw DatasetError(Errc::parse_error, file.string(), 0, "expected an object");
  Split s;
  s.train = node_array(j, file, "train", n_nodes);
  s.val = node_array(j, file, "val", n_nodes);
  s.test = node_array(j, file, "test", n_nodes);
  try {
    validate_split(s, n_nodes);
  } catch (const Error& e) {
    throw DatasetError(e.code(), file.string(), 0, e.what());
  }
  return s;
}

DatasetManifest read_manifest(const fs::path& file) {
  auto in = open_in(file);
  DatasetManifest m;
  try {
    const auto j = ordered_json::parse(in);
    m.name = j.value("name", "");
    const auto& files = j.at("files");
    m.edges = files.at("edges").get<std::string>();
    m.features = files.at("features").get<std::string>();
    m.labels = files.value("labels", "");
    m.splits = files.value("splits", "");
    m.n_nodes = j.at("n_nodes").get<std::size_t>();
    m.n_edges = j.at("n_edges").get<std::size_t>();
    m.d = j.at("d").get<std::size_t>();
    m.classes = j.value("classes", std::size_t{0});
    if (j.contains("checksums"))
      for (const auto& [k, v] : j.at("checksums").items()) m.checksums[k] = v.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(Errc::parse_error, file.string(), 0, e.what());
  }
  return m;
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_file = dir / "manifest.json";
  Dataset ds;
  ds.manifest = read_manifest(manifest_file);
  const DatasetManifest& m = ds.manifest;

  auto checked = [&](const std::string& rel) {
    const fs::path file = dir / rel;
    if (!fs::is_regular_file(file))
      throw DatasetError(Errc::io_error, file.string(), 0, "missing dataset file");
    if (auto it = m.checksums.find(rel); it != m.checksums.end()) {
      const std::string actual = git_blob_hash_file(file);
      if (actual != it->second)
        throw DatasetError(Errc::checksum_mismatch, file.string(), 0,
                           "checksum " + actual + " != declared " + it->second);
    }
    return file;
  };
  auto mismatch = [&](const std::string& what, std::size_t got, std::size_t want) {
    throw DatasetError(Errc::count_mismatch, manifest_file.string(), 0,
                       what + ": files hold " + std::to_string(got) + ", manifest declares " +
                           std::to_string(want));
  };

  const fs::path feat_file = checked(m.features);
  DenseMatrix features = read_features(feat_file);
  if (features.rows() != m.n_nodes) mismatch("n_nodes", features.rows(), m.n_nodes);
  if (features.cols() != m.d) mismatch("d", features.cols(), m.d);
  if (!features.all_finite())
    throw DatasetError(Errc::parse_error, feat_file.string(), 0, "non-finite feature value");

  std::optional<std::vector<int>> labels;
  if (!m.labels.empty()) {
    const fs::path lab_file = checked(m.labels);
    labels = read_labels(lab_file);
    if (labels->size() != m.n_nodes)
      throw DatasetError(Errc::count_mismatch, lab_file.string(), 0,
                         std::to_string(labels->size()) + " labels for " +
                             std::to_string(m.n_nodes) + " nodes");
    if (const auto c = count_classes(*labels); c != m.classes) mismatch("classes", c, m.classes);
  }

  const auto edges = read_edges(checked(m.edges), m.n_nodes);
  ds.graph = CsrGraph::from_edges(m.n_nodes, edges, std::move(features), std::move(labels));
  if (ds.graph.n_edges() / 2 != m.n_edges) mismatch("n_edges", ds.graph.n_edges() / 2, m.n_edges);

  if (!m.splits.empty()) ds.split = read_splits(checked(m.splits), m.n_nodes);
  return ds;
}

DatasetManifest save_dataset(const fs::path& dir, const std::string& name, const CsrGraph& g,
                             const std::optional<Split>& split) {
  fs::create_directories(dir);
  DatasetManifest m;
  m.name = name;
  m.n_nodes = g.n_nodes();
  m.n_edges = g.n_edges() / 2;
  m.d = g.feature_dim();

  std::string text;
  for (const Edge& e : g.undirected_edges())
    text += std::to_string(e.u) + '\t' + std::to_string(e.v) + '\n';
  write_text(dir / m.edges, text);

  text.clear();
  const DenseMatrix& x = g.features();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (c) text += ',';
      text += fmt_double(x(r, c));
    }
    text += '\n';
  }
  write_text(dir / m.features, text);

  if (g.has_labels()) {
    text.clear();
    for (int l : *g.labels()) text += std::to_string(l) + '\n';
    write_text(dir / m.labels, text);
    m.classes = count_classes(*g.labels());
  } else {
    m.labels.clear();
  }

  if (split) {
    validate_split(*split, g.n_nodes());
    ordered_json j;
    j["train"] = split->train;
    j["val"] = split->val;
    j["test"] = split->test;
    write_text(dir / m.splits, j.dump() + '\n');
  } else {
    m.splits.clear();
  }

  ordered_json files;
  files["edges"] = m.edges;
  files["features"] = m.features;
  if (!m.labels.empty()) files["labels"] = m.labels;
  if (!m.splits.empty()) files["splits"] = m.splits;
  ordered_json sums;
  for (const auto& rel : {m.edges, m.features, m.labels, m.splits}) {
    if (rel.empty()) continue;
    m.checksums[rel] = git_blob_hash_file(dir / rel);
    sums[rel] = m.checksums[rel];
  }
  ordered_json j;
  j["name"] = m.name;
  j["files"] = files;
  j["n_nodes"] = m.n_nodes;
  j["n_edges"] = m.n_edges;
  j["d"] = m.d;
  j["classes"] = m.classes;
  j["checksums"] = sums;
  write_text(dir / "manifest.json", j.dump(2) + '\n');
  return m;
}

CsrGraph convert_linqs(const fs::path& content, const fs::path& cites,
                       std::vector<std::string>* class_names, std::size_t* skipped) {
  auto in = open_in(content);
  std::map<std::string, NodeId> index;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_class;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = strip(line);
    if (s.empty()) continue;
    const auto tok = split_ws(s);
    if (tok.size() < 3)
      throw DatasetError(Errc::parse_error, content.string(), lineno,
                         "expected id, attributes and class");
    std::vector<double> attrs;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
      double v = 0.0;
      if (!parse_token(tok[i], v))
        throw DatasetError(Errc::parse_error, content.string(), lineno,
                           "bad attribute '" + std::string(tok[i]) + "'");
      attrs.push_back(v);
    }
    if (!rows.empty() && attrs.size() != rows.front().size())
      throw DatasetError(Errc::count_mismatch, content.string(), lineno,
                         "attribute count differs from the first row");
    if (!index.emplace(std::string(tok.front()), static_cast<NodeId>(rows.size())).second)
      throw DatasetError(Errc::parse_error, content.string(), lineno,
                         "duplicate id '" + std::string(tok.front()) + "'");
    rows.push_back(std::move(attrs));
    row_class.emplace_back(tok.back());
  }
  if (rows.empty()) throw DatasetError(Errc::parse_error, content.string(), 0, "no nodes");

  std::vector<std::string> names(row_class);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::vector<int> labels;
  for (const auto& c : row_class)
    labels.push_back(static_cast<int>(std::lower_bound(names.begin(), names.end(), c) - names.begin()));

  DenseMatrix features(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), features.row(r).begin());

  auto cin = open_in(cites);
  std::vector<Edge> edges;
  std::size_t unknown = 0;
  lineno = 0;
  while (std::getline(cin, line)) {
    ++lineno;
    const auto s = strip(line);
    if (s.empty()) continue;
    const auto tok = split_ws(s);
    if (tok.size() != 2)
      throw DatasetError(Errc::parse_error, cites.string(), lineno, "expected two ids");
    auto a = index.find(std::string(tok[0]));
    auto b = index.find(std::string(tok[1]));
    if (a == index.end() || b == index.end()) {
      ++unknown;
      continue;
    }
    edges.push_back({a->second, b->second});
  }
  if (class_names) *class_names = names;
  if (skipped) *skipped = unknown;
  return CsrGraph::from_edges(rows.size(), edges, std::move(features), std::move(labels));
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace

Split per_class_split(const std::vector<int>& labels, std::size_t per_class, std::size_t val,
                      std::size_t test, Rng& rng) {
  std::vector<NodeId> order;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) order.push_back(static_cast<NodeId>(i));
  shuffle(order, rng);
  Split s;
  std::map<int, std::size_t> taken;
  std::vector<NodeId> rest;
  for (NodeId v : order) {
    if (taken[labels[v]] < per_class) {
      ++taken[labels[v]];
      s.train.push_back(v);
    } else {
      rest.push_back(v);
    }
  }
  if (rest.size() < val + test)
    fail(Errc::degenerate_split, "not enough labeled nodes for the requested val/test sizes");
  s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(val));
  s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(val),
                rest.begin() + static_cast<std::ptrdiff_t>(val + test));
  for (auto* set : {&s.train, &s.val, &s.test}) std::sort(set->begin(), set->end());
  validate_split(s, labels.size());
  return s;
}

Split random_split(const std::vector<int>& labels, double train_frac, double val_frac, Rng& rng) {
  if (!(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac < 1.0))
    fail(Errc::invalid_argument, "split fractions must satisfy 0 < train, 0 <= val, train + val < 1");
  std::vector<NodeId> order;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) order.push_back(static_cast<NodeId>(i));
  shuffle(order, rng);
  const auto n = static_cast<double>(order.size());
  const auto n_train = static_cast<std::size_t>(train_frac * n);
  const auto n_val = static_cast<std::size_t>(val_frac * n);
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  for (auto* set : {&s.train, &s.val, &s.test}) std::sort(set->begin(), set->end());
  validate_split(s, labels.size());
  return s;
}

CsrGraph synthetic_two_community(const SyntheticOptions& o) {
  if (o.nodes < 2 || o.feature_dim < 2)
    fail(Errc::invalid_argument, "synthetic graph needs at least 2 nodes and 2 features");
  Rng rng = make_stream(o.seed, Stream::init);
  const std::size_t half = o.nodes / 2;
  std::vector<int> labels(o.nodes);
  for (std::size_t i = 0; i < o.nodes; ++i) labels[i] = i < half ? 0 : 1;

  std::vector<Edge> edges;
  for (std::size_t u = 0; u < o.nodes; ++u)
    for (std::size_t v = u + 1; v < o.nodes; ++v) {
      const double p = labels[u] == labels[v] ? o.p_in : o.p_out;
      if (uniform01(rng) < p) edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }

  // community c shifts its own half of the feature columns by `signal`
  DenseMatrix x(o.nodes, o.feature_dim);
  const std::size_t block = o.feature_dim / 2;
  for (std::size_t i = 0; i < o.nodes; ++i)
    for (std::size_t c = 0; c < o.feature_dim; ++c) {
      const bool own = labels[i] == 0 ? c < block : c >= block;
      x(i, c) = standard_normal(rng) + (own ? o.signal : 0.0);
    }
  return CsrGraph::from_edges(o.nodes, edges, std::move(x), std::move(labels));
}

}  // namespace gjepa

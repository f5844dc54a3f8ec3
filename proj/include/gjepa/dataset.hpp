#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gjepa/graph.hpp"
#include "gjepa/random.hpp"

namespace gjepa {

struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  friend bool operator==(const Split&, const Split&) = default;
};

/// Throws Errc::degenerate_split unless the three sets are pairwise disjoint,
/// in range and train/test are nonempty.
void validate_split(const Split& split, std::size_t n_nodes);

/// Contents of manifest.json in a canonical dataset directory. File entries
/// are relative to the directory; `labels` and `splits` may be empty. Each
/// checksum is the git blob id of the file.
struct DatasetManifest {
  std::string name;
  std::string edges = "edges.tsv";
  std::string features = "features.csv";
  std::string labels = "labels.txt";
  std::string splits = "splits.json";
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;  // undirected edges after symmetrization and dedup
  std::size_t d = 0;
  std::size_t classes = 0;  // distinct non-negative labels
  std::map<std::string, std::string> checksums;
};

struct Dataset {
  CsrGraph graph;
  std::optional<Split> split;
  DatasetManifest manifest;
};

DatasetManifest read_manifest(const std::filesystem::path& file);

/// Loads the directory `dir` (which holds manifest.json), verifying
/// checksums and declared counts. Failures are DatasetErrors naming the file
/// and line.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes edges.tsv, features.csv, labels.txt (if labeled), splits.json (if
/// given) and manifest.json. Returns the manifest written.
DatasetManifest save_dataset(const std::filesystem::path& dir, const std::string& name,
                             const CsrGraph& g, const std::optional<Split>& split);

/// Parsers for the individual files; `n_nodes` bounds the node ids.
std::vector<Edge> read_edges(const std::filesystem::path& file, std::size_t n_nodes);
DenseMatrix read_features(const std::filesystem::path& file);
std::vector<int> read_labels(const std::filesystem::path& file);
Split read_splits(const std::filesystem::path& file, std::size_t n_nodes);

std::size_t count_classes(const std::vector<int>& labels);

/// LINQS citation format: `<content>` has `id attr... class` rows, `<cites>`
/// has `cited citing` pairs. Nodes keep the content-file order, classes are
/// numbered by sorted class name. Citations naming unknown ids are skipped
/// and counted in `skipped` when given.
CsrGraph convert_linqs(const std::filesystem::path& content, const std::filesystem::path& cites,
                       std::vector<std::string>* class_names = nullptr,
                       std::size_t* skipped = nullptr);

/// Planetoid-style split: `per_class` training nodes per class, then `val`
/// and `test` nodes from the rest, all drawn with `rng`.
Split per_class_split(const std::vector<int>& labels, std::size_t per_class, std::size_t val,
                      std::size_t test, Rng& rng);

/// Random split of the labeled nodes by fractions (test takes the rest).
Split random_split(const std::vector<int>& labels, double train_frac, double val_frac, Rng& rng);

struct SyntheticOptions {
  std::size_t nodes = 64;
  std::size_t feature_dim = 16;
  double p_in = 0.25;
  double p_out = 0.02;
  double signal = 1.0;  // mean shift of the community's feature block
  std::uint64_t seed = 7;
};

/// Two equal communities (planted partition) with community-shifted Gaussian
/// features. Labels are the community index.
CsrGraph synthetic_two_community(const SyntheticOptions& options);

}  // namespace gjepa

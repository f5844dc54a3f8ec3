#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gjepa/checkpoint.hpp"
#include "gjepa/error.hpp"
#include "gjepa/eval.hpp"
#include "gjepa/hash.hpp"
#include "gjepa/trainer.hpp"
#include "support.hpp"

using namespace gjepa;
using gjepa::test::random_matrix;
using gjepa::test::TempDir;

namespace {

const Dataset& synthetic() {
  static const Dataset ds = test::load_fixture("synthetic64");
  return ds;
}

RunConfig small_config(std::uint64_t seed = 0) {
  RunConfig cfg;
  cfg.hidden = {16, 16, 16};
  cfg.seed = seed;
  cfg.max_epochs = 10;
  cfg.probe_epochs = 100;
  return cfg;
}

const EncoderState& trained_state() {
  static const EncoderState s = train(synthetic().graph, small_config(3)).best_state;
  return s;
}

// Edgeless graph of `n` nodes with cyclic labels over `classes`.
CsrGraph isolated(std::size_t n, std::size_t classes, Rng& rng) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);
  return CsrGraph::from_edges(n, {}, random_matrix(n, 2, rng), labels);
}

}  // namespace

TEST_CASE("probe on one-hot class embeddings is perfect") {
  Rng rng(1);
  const CsrGraph g = isolated(60, 3, rng);
  DenseMatrix emb(60, 3);
  for (std::size_t i = 0; i < 60; ++i) emb(i, static_cast<std::size_t>((*g.labels())[i])) = 1.0;
  Rng split_rng(2);
  const Split split = random_split(*g.labels(), 0.5, 0.2, split_rng);
  const ProbeFit fit =
      train_probe(g, build_normalized_adjacency(g), emb, split, 3, ProbeOptions{});
  CHECK(fit.test_accuracy == 1.0);
  CHECK(fit.train_accuracy == 1.0);
  CHECK(fit.head.weight.rows() == 3);
  CHECK(fit.head.activation == Activation::identity);
}

TEST_CASE("probe on permuted labels is at chance level") {
  const Dataset& ds = synthetic();
  const DenseMatrix emb = embed(ds.graph, trained_state());
  double mean = 0.0;
  const int trials = 10;
  for (int t = 0; t < trials; ++t) {
    std::vector<int> labels = *ds.graph.labels();
    Rng rng(100 + t);
    for (std::size_t i = labels.size() - 1; i > 0; --i)
      std::swap(labels[i], labels[uniform_index(rng, i + 1)]);
    const CsrGraph g(std::vector<std::int64_t>(ds.graph.row_offsets().begin(),
                                               ds.graph.row_offsets().end()),
                     std::vector<NodeId>(ds.graph.col_indices().begin(),
                                         ds.graph.col_indices().end()),
                     ds.graph.features(), labels);
    const Split split = random_split(labels, 0.5, 0.25, rng);
    mean += train_probe(g, build_normalized_adjacency(g), emb, split, 2, {100, 0.01, 0}).test_accuracy;
  }
  mean /= trials;
  CHECK(std::abs(mean - 0.5) <= 0.1);
}

TEST_CASE("probe is repeatable and never touches the backbone") {
  TempDir dir;
  const Dataset& ds = synthetic();
  const RunConfig cfg = small_config(3);
  save_checkpoint(dir / "m.ckpt", trained_state(), cfg);
  const std::string before = git_blob_hash_file(dir / "m.ckpt");
  const Checkpoint ck = load_checkpoint(dir / "m.ckpt");
  const DenseMatrix emb = embed(ds.graph, ck.state);
  const NormalizedAdjacency adj = build_normalized_adjacency(ds.graph);
  const ProbeFit a = train_probe(ds.graph, adj, emb, *ds.split, 2, {100, 0.01, 4});
  const ProbeFit b = train_probe(ds.graph, adj, emb, *ds.split, 2, {100, 0.01, 4});
  CHECK(a.test_accuracy == b.test_accuracy);
  CHECK(a.head == b.head);
  multi_seed_eval(ds, emb, 3, SplitProtocol::resample, {50, 0.01, 0});
  distortion_study(ds, ck.state, {0.0, 0.2}, {50, 0.01, 0}, 1);
  save_checkpoint(dir / "m.ckpt", ck.state, ck.config);
  CHECK(git_blob_hash_file(dir / "m.ckpt") == before);
}

TEST_CASE("probe rejects degenerate splits") {
  Rng rng(3);
  const CsrGraph g = isolated(12, 2, rng);
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  const DenseMatrix emb = random_matrix(12, 4, rng);
  auto expect_split_error = [&](const Split& s, std::size_t classes) {
    try {
      train_probe(g, adj, emb, s, classes, ProbeOptions{});
      FAIL("expected degenerate_split");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::degenerate_split);
    }
  };
  expect_split_error(Split{{0, 2, 4}, {5}, {6, 7}}, 2);  // class 1 missing from train
  expect_split_error(Split{{0, 1}, {1}, {6}}, 2);        // train and val overlap
  expect_split_error(Split{{0, 1}, {}, {}}, 2);          // empty test
  expect_split_error(Split{{0, 1}, {}, {40}}, 2);        // out of range
  const CsrGraph bare = CsrGraph::from_edges(4, {}, DenseMatrix(4, 1));
  try {
    train_probe(bare, build_normalized_adjacency(bare), DenseMatrix(4, 2), Split{{0}, {}, {1}}, 2, {});
    FAIL("expected degenerate_split");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_split);
  }
}

TEST_CASE("summaries of probe runs") {
  const ProbeResult c = summarize_runs({0.7, 0.7, 0.7}, "fixed");
  CHECK(c.std == 0.0);
  CHECK(c.mean == doctest::Approx(0.7));
  const ProbeResult two = summarize_runs({0.8, 0.9}, "fixed");
  CHECK(two.mean == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(two.std == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("multi-seed eval agrees with a recomputation from its runs") {
  const Dataset& ds = synthetic();
  const DenseMatrix emb = embed(ds.graph, trained_state());
  for (SplitProtocol p : {SplitProtocol::fixed, SplitProtocol::resample}) {
    const ProbeResult r = multi_seed_eval(ds, emb, 4, p, {60, 0.01, 5});
    REQUIRE(r.runs.size() == 4);
    const double mean = std::accumulate(r.runs.begin(), r.runs.end(), 0.0) / 4.0;
    double sq = 0.0;
    for (double a : r.runs) sq += (a - mean) * (a - mean);
    CHECK(r.mean == doctest::Approx(mean).epsilon(1e-15));
    CHECK(r.std == doctest::Approx(std::sqrt(sq / 4.0)).epsilon(1e-12));
    CHECK(r.mean >= *std::min_element(r.runs.begin(), r.runs.end()));
    CHECK(r.mean <= *std::max_element(r.runs.begin(), r.runs.end()));
    CHECK(r.std >= 0.0);
    for (double a : r.runs) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
    }
  }
  CHECK(multi_seed_eval(ds, emb, 2, SplitProtocol::fixed, {60, 0.01, 5}).split == "fixed");
  CHECK_THROWS_AS(multi_seed_eval(ds, emb, 1, SplitProtocol::fixed, {}), Error);
}

TEST_CASE("momentum sweep emits one row per value") {
  RunConfig cfg = small_config(6);
  cfg.hidden = {8, 8, 8};
  cfg.max_epochs = 3;
  cfg.probe_epochs = 20;
  const std::vector<double> ms = {0.0, 0.9, 1.0};
  const auto rows = momentum_sweep(synthetic(), cfg, ms, 2, SplitProtocol::fixed);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].m == ms[i]);
    CHECK(rows[i].epochs_run == 3);
    CHECK(rows[i].probe.runs.size() == 2);
  }
  const std::string csv = sweep_csv(rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.rfind("m,accuracy_mean,accuracy_std,epochs\n", 0) == 0);
  CHECK_THROWS_AS(momentum_sweep(synthetic(), cfg, {1.5}, 2, SplitProtocol::fixed), Error);
}

TEST_CASE("spread statistics") {
  const SpreadStats z = spread_stats(DenseMatrix(4, 5));
  CHECK(z.q1 == 0.0);
  CHECK(z.median == 0.0);
  CHECK(z.q3 == 0.0);
  CHECK(z.count == 20);

  const SpreadStats t = spread_stats(DenseMatrix{{-1, 0, 1}, {1, 0, -1}});
  CHECK(t.median == 0.0);
  CHECK(t.min == -1.0);
  CHECK(t.max == 1.0);

  const SpreadStats q = spread_stats(DenseMatrix{{1, 2, 3, 4, 100}});
  CHECK(q.q1 == 2.0);
  CHECK(q.median == 3.0);
  CHECK(q.q3 == 4.0);
  CHECK(q.whisker_high == 4.0);
  CHECK(q.whisker_low == 1.0);
  CHECK(q.mean == 22.0);

  const SpreadStats e = spread_stats(embed(synthetic().graph, trained_state()));
  CHECK(e.min >= -1.0);
  CHECK(e.max <= 1.0);
  CHECK(e.whisker_low >= e.min);
  CHECK(e.whisker_high <= e.max);
  CHECK_THROWS_AS(spread_stats(DenseMatrix()), Error);

  const std::string csv = spread_csv({{"a", z}, {"b", q}});
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("percentage drop arithmetic") {
  CHECK(percent_drop(0.5, 0.5) == 0.0);
  CHECK(percent_drop(0.45, 0.5) == doctest::Approx(-10.0).epsilon(1e-14));
  CHECK_THROWS_AS(percent_drop(0.3, 0.0), Error);
  const auto r = default_distortion_ratios();
  REQUIRE(r.size() == 7);
  CHECK(r.front() == 0.10);
  CHECK(r.back() == 0.40);
  CHECK(r[3] == 0.25);
}

TEST_CASE("distortion study counts rows and uses the clean head") {
  const Dataset& ds = synthetic();
  std::vector<double> ratios = {0.0};
  for (double r : default_distortion_ratios()) ratios.push_back(r);
  ratios.push_back(1.0);
  const auto rows = distortion_study(ds, trained_state(), ratios, {100, 0.01, 0}, 7);
  REQUIRE(rows.size() == ratios.size());
  const std::size_t n_test = ds.split->test.size();
  const double acc0 = rows[0].accuracy;
  CHECK(rows[0].drop_percent == 0.0);
  CHECK(rows[0].replaced == 0);
  for (const auto& row : rows) {
    CHECK(row.replaced == distortion_count(row.ratio, n_test));
    CHECK(std::abs(row.drop_percent - (row.accuracy - acc0) / acc0 * 100.0) <= 1e-12);
  }
  CHECK(rows.back().replaced == n_test);
  const auto again = distortion_study(ds, trained_state(), ratios, {100, 0.01, 0}, 7);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(again[i].accuracy == rows[i].accuracy);
  const std::string csv = distortion_csv(rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(rows.size() + 1));
}

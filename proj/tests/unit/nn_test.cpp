#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gjepa/error.hpp"
#include "gjepa/gradcheck.hpp"
#include "gjepa/kernels.hpp"
#include "gjepa/nn.hpp"
#include "gjepa/optim.hpp"
#include "support.hpp"

using namespace gjepa;
using gjepa::test::dense_matmul;
using gjepa::test::dense_normalized;
using gjepa::test::random_graph;
using gjepa::test::random_matrix;

namespace {

double dot(const DenseMatrix& a, const DenseMatrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

}  // namespace

TEST_CASE("activation names round trip") {
  for (Activation a : {Activation::identity, Activation::relu, Activation::tanh})
    CHECK(parse_activation(activation_name(a)) == a);
  CHECK_THROWS_AS(parse_activation("sigmoid"), Error);
}

TEST_CASE("identity adjacency, identity weight and activation give out == x") {
  Rng rng(1);
  const CsrGraph g = CsrGraph::from_edges(5, {}, DenseMatrix(5, 3));
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  const DenseMatrix x = random_matrix(5, 3, rng);
  const GcnLayer layer{DenseMatrix::identity(3), Activation::identity};
  CHECK(gcn_forward(layer, adj, x).out == x);
}

TEST_CASE("ReLU with zero weights outputs zeros") {
  Rng rng(2);
  const CsrGraph g = random_graph(6, 0.5, 4, rng);
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  const GcnLayer layer{DenseMatrix(4, 3), Activation::relu};
  CHECK(gcn_apply(layer, adj, g.features()) == DenseMatrix(6, 3));
}

TEST_CASE("gcn forward matches a dense oracle on a 6-node graph") {
  Rng rng(3);
  const CsrGraph g = random_graph(6, 0.4, 4, rng);
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  for (Activation act : {Activation::identity, Activation::relu, Activation::tanh}) {
    const GcnLayer layer{random_matrix(4, 5, rng), act};
    DenseMatrix expect = dense_matmul(dense_matmul(dense_normalized(g), g.features()), layer.weight);
    for (double& v : expect.values()) {
      if (act == Activation::relu) v = std::max(v, 0.0);
      if (act == Activation::tanh) v = std::tanh(v);
    }
    CHECK(max_abs_diff(gcn_apply(layer, adj, g.features()), expect) < 1e-12);
  }
}

TEST_CASE("gcn forward checks dimensions") {
  Rng rng(4);
  const CsrGraph g = random_graph(4, 0.5, 3, rng);
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  CHECK_THROWS_AS(gcn_apply(GcnLayer{DenseMatrix(2, 2)}, adj, g.features()), Error);
  CHECK_THROWS_AS(gcn_apply(GcnLayer{DenseMatrix(3, 2)}, adj, DenseMatrix(5, 3)), Error);
  const GcnForward f = gcn_forward(GcnLayer{DenseMatrix(3, 2)}, adj, g.features());
  CHECK_THROWS_AS(gcn_backward(GcnLayer{DenseMatrix(3, 2)}, f.cache, DenseMatrix(4, 3)), Error);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  Rng rng(5);
  const CsrGraph g = random_graph(7, 0.4, 3, rng);
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  const GcnLayer layer{random_matrix(3, 2, rng), Activation::tanh};
  const GcnForward f = gcn_forward(layer, adj, g.features());
  const GcnGradients gr = gcn_backward(layer, f.cache, DenseMatrix(7, 2));
  CHECK(gr.grad_x == DenseMatrix(7, 3));
  CHECK(gr.grad_weight == DenseMatrix(3, 2));
}

TEST_CASE("single node tanh layer has the closed-form gradient") {
  const CsrGraph g = CsrGraph::from_edges(1, {}, DenseMatrix{{0.7}});
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  const double theta = -0.4;
  const GcnLayer layer{DenseMatrix{{theta}}, Activation::tanh};
  const GcnForward f = gcn_forward(layer, adj, g.features());
  const GcnGradients gr = gcn_backward(layer, f.cache, DenseMatrix{{1.0}});
  const double t = std::tanh(0.7 * theta);
  CHECK(gr.grad_weight(0, 0) == doctest::Approx(0.7 * (1.0 - t * t)).epsilon(1e-14));
  CHECK(gr.grad_x(0, 0) == doctest::Approx(theta * (1.0 - t * t)).epsilon(1e-14));
}

TEST_CASE("gcn backward matches finite differences for random layer shapes") {
  Rng rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 15);
    const std::size_t d_in = 1 + uniform_index(rng, 16), d_out = 1 + uniform_index(rng, 16);
    const Activation act = trial % 2 ? Activation::relu : Activation::tanh;
    const CsrGraph g = random_graph(n, 0.3, d_in, rng);
    const NormalizedAdjacency adj = build_normalized_adjacency(g);
    GcnLayer layer = make_gcn_layer(d_in, d_out, act, rng);
    DenseMatrix x = g.features();
    const DenseMatrix probe = random_matrix(n, d_out, rng);

    const GcnForward f = gcn_forward(layer, adj, x);
    const GcnGradients gr = gcn_backward(layer, f.cache, probe);
    auto loss = [&]() -> long double { return dot(gcn_apply(layer, adj, x), probe); };
    const GradCheckParam params[] = {{"weight", &layer.weight, &gr.grad_weight},
                                     {"x", &x, &gr.grad_x}};
    const GradCheckReport r = grad_check(loss, params, 1e-4);
    CHECK_MESSAGE(r.passed(), "trial ", trial, " worst ", r.worst.param, " rel ", r.max_rel_error);
    CHECK(r.entries_checked == layer.weight.size() + x.size());
  }
}

TEST_CASE("backward without grad_x leaves it empty") {
  Rng rng(7);
  const CsrGraph g = random_graph(5, 0.5, 2, rng);
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  const GcnLayer layer = make_gcn_layer(2, 3, Activation::relu, rng);
  const GcnForward f = gcn_forward(layer, adj, g.features());
  const GcnGradients gr = gcn_backward(layer, f.cache, DenseMatrix(5, 3, 1.0), false);
  CHECK(gr.grad_x.empty());
  CHECK(gr.grad_weight.rows() == 2);
}

TEST_CASE("tanh outputs stay strictly inside (-1, 1)") {
  Rng rng(8);
  const CsrGraph g = random_graph(30, 0.2, 8, rng);
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  const GcnLayer layer{random_matrix(8, 16, rng), Activation::tanh};
  const DenseMatrix out = gcn_apply(layer, adj, g.features());
  for (double v : out.values()) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("initialization scale") {
  Rng rng(9);
  for (Activation act : {Activation::relu, Activation::tanh}) {
    const GcnLayer l = make_gcn_layer(400, 300, act, rng);
    double sq = 0.0;
    for (double v : l.weight.values()) sq += v * v;
    const double var = sq / static_cast<double>(l.weight.size());
    const double expect = (act == Activation::relu ? 2.0 : 1.0) / 400.0;
    CHECK(var == doctest::Approx(expect).epsilon(0.02));
    CHECK(l.activation == act);
  }
}

TEST_CASE("global mean pool examples") {
  const DenseMatrix x{{1, 3}, {3, 1}};
  const NodeId one[] = {1};
  CHECK(global_mean_pool(x, one) == std::vector<double>{3, 1});
  CHECK(global_mean_pool(x, all_nodes(2)) == std::vector<double>{2, 2});
  CHECK_THROWS_AS(global_mean_pool(x, {}), Error);
  try {
    global_mean_pool(x, {});
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_mask);
  }
}

TEST_CASE("global mean pool matches a loop oracle and the rescaling identity") {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 30), d = 1 + uniform_index(rng, 8);
    const DenseMatrix x = random_matrix(n, d, rng);
    std::vector<NodeId> active;
    for (std::size_t i = 0; i < n; ++i)
      if (uniform01(rng) < 0.6) active.push_back(static_cast<NodeId>(i));
    if (active.empty()) active.push_back(0);

    std::vector<double> oracle(d, 0.0);
    for (NodeId v : active)
      for (std::size_t c = 0; c < d; ++c) oracle[c] += x(v, c);
    for (double& o : oracle) o /= static_cast<double>(active.size());
    const auto pooled = global_mean_pool(x, active);
    for (std::size_t c = 0; c < d; ++c) CHECK(pooled[c] == doctest::Approx(oracle[c]).epsilon(1e-13));

    DenseMatrix zeroed(n, d);
    for (NodeId v : active)
      for (std::size_t c = 0; c < d; ++c) zeroed(v, c) = x(v, c);
    const auto full = global_mean_pool(zeroed, all_nodes(n));
    const double scale = static_cast<double>(n) / static_cast<double>(active.size());
    for (std::size_t c = 0; c < d; ++c)
      CHECK(full[c] * scale == doctest::Approx(pooled[c]).epsilon(1e-12));

    DenseMatrix grad(n, d);
    const std::vector<double> up(d, 1.0);
    global_mean_pool_backward(up, active, grad);
    for (NodeId v : active) CHECK(grad(v, 0) == doctest::Approx(1.0 / active.size()));
  }
}

TEST_CASE("adam with zero gradient leaves the parameter unchanged") {
  DenseMatrix p{{1.5, -2.0}};
  const DenseMatrix before = p;
  AdamState s = AdamState::for_param(p);
  adam_step(p, DenseMatrix(1, 2), s, 0.1);
  CHECK(p == before);
  CHECK(s.step_count == 1);
}

TEST_CASE("adam first step moves by about lr") {
  DenseMatrix p{{1.0}};
  AdamState s = AdamState::for_param(p);
  adam_step(p, DenseMatrix{{1.0}}, s, 0.1);
  CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("adam minimizes a quadratic") {
  DenseMatrix p{{1.0}};
  AdamState s = AdamState::for_param(p);
  for (int i = 0; i < 100; ++i) adam_step(p, DenseMatrix{{2.0 * p(0, 0)}}, s, 0.1);
  CHECK(std::abs(p(0, 0)) < 0.1);
}

TEST_CASE("adam rejects non-finite gradients and leaves state alone") {
  DenseMatrix p{{1.0, 2.0}};
  AdamState s = AdamState::for_param(p);
  const AdamState before = s;
  try {
    adam_step(p, DenseMatrix{{0.5, std::nan("")}}, s, 0.1);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::divergence);
  }
  CHECK(p == DenseMatrix{{1.0, 2.0}});
  CHECK(s == before);
  CHECK_THROWS_AS(adam_step(p, DenseMatrix(2, 1), s, 0.1), Error);
}

TEST_CASE("cosine schedule examples") {
  const LrSchedule s{0.01, 75, 1e-4};
  CHECK(cosine_lr(s, 0) == 0.01);
  CHECK(cosine_lr(s, 75) == 0.01);
  const LrSchedule even{0.01, 80, 1e-4};
  CHECK(cosine_lr(even, 40) == doctest::Approx((0.01 + 1e-4) / 2).epsilon(1e-14));
}

TEST_CASE("cosine schedule is periodic and bounded") {
  const LrSchedule s{3e-3, 75, 3e-5};
  for (int e = 0; e < 400; ++e) {
    const double lr = cosine_lr(s, e);
    CHECK(lr >= s.min_lr);
    CHECK(lr <= s.base_lr);
    CHECK(lr == cosine_lr(s, e + s.restart_period));
    if (e % 75 != 74) CHECK(cosine_lr(s, e + 1) <= lr);
  }
}

TEST_CASE("grad_check on a linear model with squared error is exact") {
  Rng rng(11);
  const DenseMatrix x = random_matrix(10, 4, rng);
  const DenseMatrix y = random_matrix(10, 2, rng);
  DenseMatrix w = random_matrix(4, 2, rng);
  auto loss = [&]() -> long double {
    const DenseMatrix r = test::dense_matmul(x, w) - y;
    return dot(r, r);
  };
  const DenseMatrix grad = 2.0 * test::dense_matmul(x.transposed(), test::dense_matmul(x, w) - y);
  const GradCheckParam params[] = {{"w", &w, &grad}};
  const GradCheckReport r = grad_check(loss, params, 1e-8);
  CHECK(r.passed());
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("grad_check flags a corrupted backward pass") {
  Rng rng(12);
  const CsrGraph g = random_graph(8, 0.4, 3, rng);
  const NormalizedAdjacency adj = build_normalized_adjacency(g);
  GcnLayer layer = make_gcn_layer(3, 4, Activation::tanh, rng);
  const DenseMatrix probe = random_matrix(8, 4, rng);
  const GcnForward f = gcn_forward(layer, adj, g.features());
  DenseMatrix bad = gcn_backward(layer, f.cache, probe).grad_weight;
  bad(1, 2) *= 1.1;
  auto loss = [&]() -> long double { return dot(gcn_apply(layer, adj, g.features()), probe); };
  const GradCheckParam params[] = {{"weight", &layer.weight, &bad}};
  const GradCheckReport r = grad_check(loss, params, 1e-4);
  CHECK_FALSE(r.passed());
  CHECK(r.max_rel_error > 1e-2);
  CHECK(r.worst.row == 1);
  CHECK(r.worst.col == 2);
}

TEST_CASE("grad_check sampling restores parameters and honours the entry cap") {
  Rng rng(13);
  DenseMatrix w = random_matrix(20, 20, rng);
  const DenseMatrix before = w;
  const DenseMatrix grad = 2.0 * w;
  auto loss = [&]() -> long double { return dot(w, w); };
  const GradCheckParam params[] = {{"w", &w, &grad}};
  GradCheckOptions opts;
  opts.max_entries_per_param = 7;
  const GradCheckReport r = grad_check(loss, params, 1e-6, opts);
  CHECK(r.entries_checked == 7);
  CHECK(r.passed());
  CHECK(w == before);
  opts.five_point = true;
  opts.step = 1e-3;
  CHECK(grad_check(loss, params, 1e-6, opts).passed());
}

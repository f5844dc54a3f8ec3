// Serial reference kernels against the OpenMP drivers on Cora-sized inputs.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "gjepa/graph.hpp"
#include "gjepa/kernels.hpp"
#include "gjepa/random.hpp"

namespace {

using namespace gjepa;

DenseMatrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (double& x : m.values()) x = standard_normal(rng);
  return m;
}

// random graph with about `avg_degree` neighbours per node
CsrGraph sparse_graph(std::size_t n, std::size_t avg_degree, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t e = 0; e < n * avg_degree / 2; ++e)
    edges.push_back({static_cast<NodeId>(uniform_index(rng, n)),
                     static_cast<NodeId>(uniform_index(rng, n))});
  return CsrGraph::from_edges(n, edges, DenseMatrix(n, 1));
}

struct Inputs {
  NormalizedAdjacency adj;
  DenseMatrix x, w;
};

const Inputs& inputs() {
  static const Inputs in = [] {
    Rng rng(1);
    Inputs i;
    i.adj = build_normalized_adjacency(sparse_graph(2708, 4, rng));
    i.x = gaussian(2708, 256, rng);
    i.w = gaussian(256, 128, rng);
    return i;
  }();
  return in;
}

template <DenseMatrix (*Spmm)(const NormalizedAdjacency&, const DenseMatrix&)>
void BM_spmm(benchmark::State& state) {
  const Inputs& in = inputs();
  for (auto _ : state) benchmark::DoNotOptimize(Spmm(in.adj, in.x));
  state.counters["threads"] = kernels::max_threads();
}

template <DenseMatrix (*Matmul)(const DenseMatrix&, const DenseMatrix&)>
void BM_matmul(benchmark::State& state) {
  const Inputs& in = inputs();
  for (auto _ : state) benchmark::DoNotOptimize(Matmul(in.x, in.w));
  state.counters["threads"] = kernels::max_threads();
}

template <DenseMatrix (*MatmulTn)(const DenseMatrix&, const DenseMatrix&)>
void BM_matmul_tn(benchmark::State& state) {
  const Inputs& in = inputs();
  for (auto _ : state) benchmark::DoNotOptimize(MatmulTn(in.x, in.x));
  state.counters["threads"] = kernels::max_threads();
}

BENCHMARK(BM_spmm<kernels::serial::spmm>)->Name("spmm/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_spmm<kernels::spmm>)->Name("spmm/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_matmul<kernels::serial::matmul>)->Name("matmul/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_matmul<kernels::matmul>)->Name("matmul/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_matmul_tn<kernels::serial::matmul_tn>)
    ->Name("matmul_tn/serial")
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_matmul_tn<kernels::matmul_tn>)
    ->Name("matmul_tn/parallel")
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

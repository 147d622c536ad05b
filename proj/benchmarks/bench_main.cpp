#include <benchmark/benchmark.h>

#include "gial/datagen.hpp"
#include "gial/encoders.hpp"
#include "gial/graph.hpp"
#include "gial/matrix.hpp"
#include "gial/random.hpp"
#include "gial/training.hpp"

using namespace gial;

namespace {

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng = derive_rng(1, 0);
  const Matrix a = uniform_matrix(n, n, 1.0, rng), b = uniform_matrix(n, n, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

Dataset bench_data(std::size_t nodes) {
  GenConfig g;
  g.nodes = nodes;
  g.seed = 3;
  return generate(g).data;
}

void encoder_pass(benchmark::State& state, EncoderKind kind) {
  const Dataset data = bench_data(static_cast<std::size_t>(state.range(0)));
  const GraphContext ctx = make_graph_context(data.graph);
  Rng rng = derive_rng(2, 0);
  Encoder enc({kind, data.features.cols(), 50, 2, kind == EncoderKind::gat ? 2u : 1u}, rng);
  for (auto _ : state) {
    Tape tape;
    Var r = enc.forward(tape, tape.constant(data.features), ctx);
    tape.backward(sum(r));
  }
}

void BM_GcnForwardBackward(benchmark::State& state) { encoder_pass(state, EncoderKind::gcn); }
void BM_GatForwardBackward(benchmark::State& state) { encoder_pass(state, EncoderKind::gat); }
BENCHMARK(BM_GcnForwardBackward)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GatForwardBackward)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const Dataset data = bench_data(static_cast<std::size_t>(state.range(0)));
  TrainConfig c;
  c.max_epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(data, c).trace.epochs.size());
}
BENCHMARK(BM_TrainEpoch)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

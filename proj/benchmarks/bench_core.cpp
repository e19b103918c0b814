#include <random>

#include <benchmark/benchmark.h>

#include "rsds/data.hpp"
#include "rsds/rsds.hpp"
#include "rsds/training.hpp"

using namespace rsds;

namespace {

RsdsModel bench_model(const ManifoldSpec& m, int hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RsdsModel model = RsdsModel::identity(m, hidden, m.sample_uniform(rng), rng);
  model.net = VectorFieldNet::random(m, hidden, rng, 0.5);
  std::vector<Vec> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(m.sample_uniform(rng));
  model.scaling = ScalingNet::fit(m, pts, 50, rng);
  return model;
}

ManifoldSpec spec_for(int which) { return ManifoldSpec::parse(which == 0 ? "S2" : "R3xS3"); }

}  // namespace

static void BM_ExpLog(benchmark::State& state) {
  const ManifoldSpec m = spec_for(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(1);
  const Vec x = m.sample_uniform(rng);
  const Vec y = m.sample_uniform(rng);
  for (auto _ : state) {
    const Vec u = m.log(x, y);
    benchmark::DoNotOptimize(m.exp(x, 0.5 * u));
  }
}
BENCHMARK(BM_ExpLog)->Arg(0)->Arg(1);

static void BM_FieldEval(benchmark::State& state) {
  const ManifoldSpec m = spec_for(0);
  std::mt19937_64 rng(2);
  const VectorFieldNet net = VectorFieldNet::random(m, static_cast<int>(state.range(0)), rng, 0.5);
  const Vec z = m.sample_uniform(rng);
  Vec f;
  Mat jac;
  for (auto _ : state) {
    net.evaluate(z, 0.5, f, &jac);
    benchmark::DoNotOptimize(jac.data());
  }
}
BENCHMARK(BM_FieldEval)->Arg(16)->Arg(32)->Arg(64);

static void BM_PredictVelocity(benchmark::State& state) {
  const int which = static_cast<int>(state.range(0));
  const ManifoldSpec m = spec_for(which);
  const RsdsModel model = bench_model(m, which == 0 ? 32 : 16, 3);
  const RsdsEvaluator ev(model);
  std::mt19937_64 rng(4);
  const Vec x = m.sample_uniform(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ev.velocity(x));
}
BENCHMARK(BM_PredictVelocity)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_LossGradient(benchmark::State& state) {
  const int which = static_cast<int>(state.range(0));
  const ManifoldSpec m = spec_for(which);
  const RsdsModel model = bench_model(m, which == 0 ? 32 : 16, 5);
  std::mt19937_64 rng(6);
  std::vector<Sample> batch;
  for (int i = 0; i < 16; ++i) {
    const Vec x = m.sample_uniform(rng);
    batch.push_back({x, m.project(x, Vec::Ones(m.ambient_dim()))});
  }
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(model, batch, true, true, 1).loss);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_LossGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <random>

#include "btm/bezier.hpp"
#include "btm/condense.hpp"
#include "btm/eval.hpp"
#include "btm/mlp.hpp"

namespace {

btm::MlpSpec make_spec(int d, int h) {
  btm::MlpSpec spec;
  spec.layer_widths = {d, h, 1};
  return spec;
}

btm::Batch make_batch(int rows, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  btm::Batch b;
  b.inputs.resize(rows, d);
  b.labels.resize(rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < d; ++j) b.inputs(i, j) = gauss(rng);
    b.labels[i] = i % 2;
  }
  return b;
}

}  // namespace

static void ForwardPass(benchmark::State& state) {
  const auto spec = make_spec(20, static_cast<int>(state.range(0)));
  const auto params = btm::init_params(spec, 1);
  const auto batch = make_batch(256, 20, 2);
  for (auto _ : state) {
    auto probs = btm::forward(spec, params, batch.inputs);
    benchmark::DoNotOptimize(probs);
  }
}
BENCHMARK(ForwardPass)->Arg(20)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

static void GradParams(benchmark::State& state) {
  const auto spec = make_spec(20, static_cast<int>(state.range(0)));
  const auto params = btm::init_params(spec, 1);
  const auto batch = make_batch(256, 20, 2);
  for (auto _ : state) {
    auto grad = btm::grad_params(spec, params, batch);
    benchmark::DoNotOptimize(grad);
  }
}
BENCHMARK(GradParams)->Arg(20)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

static void GradInputsInnerProduct(benchmark::State& state) {
  const auto spec = make_spec(20, static_cast<int>(state.range(0)));
  const auto params = btm::init_params(spec, 1);
  const auto batch = make_batch(256, 20, 2);
  const auto v = btm::init_params(spec, 3);
  for (auto _ : state) {
    auto grad = btm::grad_inputs_of_inner_product(spec, params, batch, v);
    benchmark::DoNotOptimize(grad);
  }
}
BENCHMARK(GradInputsInnerProduct)->Arg(20)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BezierEval(benchmark::State& state) {
  const auto n = state.range(0);
  btm::BezierPath path;
  path.theta0 = btm::ParamVector::Random(n);
  path.phi = btm::ParamVector::Random(n);
  path.thetaT = btm::ParamVector::Random(n);
  double t = 0.0;
  for (auto _ : state) {
    t = t < 0.99 ? t + 0.01 : 0.0;
    auto theta = btm::eval_path(path, t);
    benchmark::DoNotOptimize(theta);
  }
}
BENCHMARK(BezierEval)->Arg(1 << 10)->Arg(1 << 14)->Unit(benchmark::kMicrosecond);

static void Auroc(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  btm::Vec scores(n), labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    scores[i] = gauss(rng);
    labels[i] = i % 5 == 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(btm::auroc(scores, labels));
  }
}
BENCHMARK(Auroc)->Range(1 << 10, 1 << 16)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "pathxai/dataset.hpp"
#include "pathxai/gradcam.hpp"
#include "pathxai/models.hpp"
#include "pathxai/ops.hpp"
#include "pathxai/rng.hpp"
#include "pathxai/trainer.hpp"

using namespace pathxai;

namespace {

Tensor4 filled(Shape4 s, Rng& rng) {
  Tensor4 t(s);
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

Conv2dParams conv_params(std::size_t in, std::size_t out, Rng& rng) {
  Conv2dParams p;
  p.weight = filled({out, in, 3, 3}, rng);
  p.bias.assign(out, 0.0);
  p.padding = 1;
  return p;
}

void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const auto ch = static_cast<std::size_t>(state.range(0));
  const Tensor4 x = filled({8, ch, 32, 32}, rng);
  const Conv2dParams p = conv_params(ch, ch, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, p));
}
BENCHMARK(BM_Conv2dForward)->Arg(4)->Arg(16);

void BM_Conv2dBackward(benchmark::State& state) {
  Rng rng(2);
  const auto ch = static_cast<std::size_t>(state.range(0));
  const Tensor4 x = filled({8, ch, 32, 32}, rng);
  const Conv2dParams p = conv_params(ch, ch, rng);
  const Tensor4 g = filled(conv2d_output_shape(x.shape(), p), rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(x, p, g));
}
BENCHMARK(BM_Conv2dBackward)->Arg(4)->Arg(16);

void BM_TrainEpoch(benchmark::State& state) {
  const LabeledSet data = generate(64, 3);
  ArchitectureSpec spec;
  spec.family = static_cast<Family>(state.range(0));
  TrainConfig tc;
  tc.epochs = 1;
  for (auto _ : state) {
    state.PauseTiming();
    Network net = build(spec);
    state.ResumeTiming();
    benchmark::DoNotOptimize(train(net, data, tc));
  }
  state.SetLabel(std::string(to_string(spec.family)));
}
BENCHMARK(BM_TrainEpoch)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_GradCam(benchmark::State& state) {
  const LabeledSet data = generate(2, 4);
  ArchitectureSpec spec;
  const Network net = build(spec);
  const Tensor4& image = data.items.back().image;
  for (auto _ : state) benchmark::DoNotOptimize(gradcam_compute(net, image, kDiseased));
}
BENCHMARK(BM_GradCam)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

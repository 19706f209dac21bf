#include <slitscan/instrument.hpp>
#include <slitscan/optics.hpp>
#include <slitscan/reconstruct.hpp>

#include <benchmark/benchmark.h>

using namespace slitscan;

namespace {

const SampledField& pupil() {
  static const SampledField p =
      propagate_fresnel(double_slit_field(Geometry{}, GridSpec{}, 0.2), 0.58, 650e-9);
  return p;
}

void BM_PropagateFresnel(benchmark::State& state) {
  const GridSpec grid{static_cast<std::size_t>(state.range(0)), 20e-3};
  const auto f = double_slit_field(Geometry{}, grid, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(propagate_fresnel(f, 0.58, 650e-9));
}
BENCHMARK(BM_PropagateFresnel)->Arg(1 << 14)->Arg(1 << 16)->Unit(benchmark::kMillisecond);

void BM_ImageSlits(benchmark::State& state) {
  const auto masked = apply_aperture(pupil(), 0.0, 4e-3, Opening::rightward);
  for (auto _ : state)
    benchmark::DoNotOptimize(image_slits(masked, Geometry{}, DetectorConfig{}, 0.0));
}
BENCHMARK(BM_ImageSlits)->Unit(benchmark::kMillisecond);

void BM_SolveStacked(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<ApertureMatrix> m = {build_aperture_matrix(n, 40), build_aperture_matrix(n, 50)};
  std::vector<double> p(n, 1.0);
  const std::vector<std::vector<double>> f = {m[0].multiply(p), m[1].multiply(p)};
  const std::vector<double> t = {1.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(solve_stacked(m, f, t));
}
BENCHMARK(BM_SolveStacked)->Arg(301)->Arg(601)->Unit(benchmark::kMillisecond);

void BM_FullRankDims(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(full_rank_dims(40, 161));
}
BENCHMARK(BM_FullRankDims)->Unit(benchmark::kMillisecond);

} // namespace

/*
 Copyright 2026 The hypctrl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "hypctrl/flatness.hpp"
#include "hypctrl/simulator.hpp"
#include "hypctrl/transforms.hpp"
#include "hypctrl/volterra.hpp"
#include "support.hpp"

namespace {

using namespace hypctrl;

void BM_KernelSolve(benchmark::State& state) {
    const HyperbolicSystem sys = test::rope(static_cast<int>(state.range(0)));
    const CharacteristicMap cm = characteristic_map(sys);
    const ScaledCoupling coupling = scaled_coupling(sys, scaling_gains(sys));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_kernel_K(sys, cm, coupling, KernelOptions{}));
    }
}
BENCHMARK(BM_KernelSolve)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_VolterraScalar(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const double h = 1.0 / static_cast<double>(n - 1);
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) {
        g[j] = std::cos(j * h);
    }
    auto kernel = [h](std::size_t j, std::size_t i) { return std::exp(-(j - i) * h); };
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_second_kind(1.0, kernel, g, h));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_VolterraScalar)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oNSquared);

void BM_HccfTransform(benchmark::State& state) {
    const TransformedSystem ts = transform_system(test::rope(static_cast<int>(state.range(0))));
    const FlatStructure flat = flat_structure(ts.sys);
    const TauGrid grid = TauGrid::make(ts.cmap.tau1(), ts.cmap.tau2(), 2.5e-3);
    const PdeProfiles xb = test::sin_cubed_ic(ts.sys.grid);
    const Eigen::Vector2d xi(-0.5, 0.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hccf_transform(flat, ts, grid, xi, xb));
    }
}
BENCHMARK(BM_HccfTransform)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_PlantAdvance(benchmark::State& state) {
    const HyperbolicSystem sys = test::rope(400);
    const CharacteristicMap cm = characteristic_map(sys);
    const double dt = 1.0 / static_cast<double>(state.range(0));
    const PdeProfiles x0 = test::sin_cubed_ic(sys.grid);
    CharacteristicPlant plant(sys, cm, dt, PlantState{0.0, Eigen::Vector2d(-0.5, 0.0), x0.x1, x0.x2});
    for (auto _ : state) {
        plant.impose_input(0.0);
        plant.advance(0.0);
        benchmark::DoNotOptimize(plant.x1_at_0());
    }
}
BENCHMARK(BM_PlantAdvance)->Arg(400)->Arg(800);

void BM_ClosedLoopRun(benchmark::State& state) {
    const HyperbolicSystem sys = test::rope(200);
    const SimConfig cfg = test::benchmark_config(sys, 0.0, 5e-3, 1.0);
    const ControllerDesign design = design_controllers(sys, cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(run(design, cfg));
    }
}
BENCHMARK(BM_ClosedLoopRun)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();

// Copyright 2026 The oamtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference versus OpenMP kernels.

#include <benchmark/benchmark.h>

#include "oamtomo/harness.hpp"
#include "oamtomo/sensor.hpp"

using namespace oamtomo;

namespace {

void BM_MapSerial(benchmark::State& state) {
  const ModeBasis b = ModeBasis::symmetric(static_cast<int>(state.range(0)));
  const ScanGeometry g = ScanGeometry::with_default_planes(static_cast<int>(state.range(1)));
  RMatrix a;
  for (auto _ : state) {
    kernels::assemble_map_serial(b, g, a);
    benchmark::DoNotOptimize(a.data());
  }
}

void BM_MapParallel(benchmark::State& state) {
  const ModeBasis b = ModeBasis::symmetric(static_cast<int>(state.range(0)));
  const ScanGeometry g = ScanGeometry::with_default_planes(static_cast<int>(state.range(1)));
  RMatrix a;
  for (auto _ : state) {
    kernels::assemble_map_parallel(b, g, a);
    benchmark::DoNotOptimize(a.data());
  }
}

void BM_ErrorSweep(benchmark::State& state) {
  const nlohmann::json doc{{"basis", {{"ell_max", 3}}},
                           {"geometry", {{"z", {1, 2}}}},
                           {"states", {{"ranks", {1, 2}}, {"trials", 4}}}};
  const auto spec = harness::ExperimentSpec::from_json(doc, harness::ExperimentKind::error_sweep);
  for (auto _ : state) benchmark::DoNotOptimize(harness::run_error_sweep(spec).cells.data());
}

}  // namespace

BENCHMARK(BM_MapSerial)->Args({3, 4})->Args({7, 4})->Args({7, 10})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapParallel)->Args({3, 4})->Args({7, 4})->Args({7, 10})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorSweep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

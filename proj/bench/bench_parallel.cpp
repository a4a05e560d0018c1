/* Copyright 2026 The dercoord Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Serial reference kernels against their OpenMP counterparts.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <numeric>

#include <benchmark/benchmark.h>

#include "dercoord/plant.hpp"
#include "dercoord/scenario.hpp"
#include "dercoord/sim.hpp"
#include "dercoord/verify.hpp"

namespace {

using namespace dercoord;

const scenario::Scenario& case1() {
  static const auto sc = scenario::load(std::string(DERCOORD_DATA_DIR) + "/scenarios/case1.toml");
  return sc;
}

void BM_FdSensitivitySerial(benchmark::State& state) {
  const auto& sc = case1();
  for (auto _ : state) {
    benchmark::DoNotOptimize(plant::fd_sensitivity_serial(*sc.feeder, Vector::Constant(9, 20.0), sc.loads));
  }
}
BENCHMARK(BM_FdSensitivitySerial)->Unit(benchmark::kMillisecond);

void BM_FdSensitivityParallel(benchmark::State& state) {
  const auto& sc = case1();
  for (auto _ : state) {
    benchmark::DoNotOptimize(plant::fd_sensitivity(*sc.feeder, Vector::Constant(9, 20.0), sc.loads));
  }
}
BENCHMARK(BM_FdSensitivityParallel)->Unit(benchmark::kMillisecond);

void BM_GridQpSerial(benchmark::State& state) {
  const auto inst = verify::random_qp_instance(7, 3);
  const auto flows = odcp::build_flow_constraints(inst.prob, inst.feeder);
  for (auto _ : state) benchmark::DoNotOptimize(verify::brute_force_qp_serial(inst.prob, flows, 2e-3));
}
BENCHMARK(BM_GridQpSerial)->Unit(benchmark::kMillisecond);

void BM_GridQpParallel(benchmark::State& state) {
  const auto inst = verify::random_qp_instance(7, 3);
  const auto flows = odcp::build_flow_constraints(inst.prob, inst.feeder);
  for (auto _ : state) benchmark::DoNotOptimize(verify::brute_force_qp(inst.prob, flows, 2e-3));
}
BENCHMARK(BM_GridQpParallel)->Unit(benchmark::kMillisecond);

void BM_BoundedSumSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(verify::check_bounded_sum_serial(1, 0.5, 2000, 2000));
}
BENCHMARK(BM_BoundedSumSerial)->Unit(benchmark::kMillisecond);

void BM_BoundedSumParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(verify::check_bounded_sum(1, 0.5, 2000, 2000));
}
BENCHMARK(BM_BoundedSumParallel)->Unit(benchmark::kMillisecond);

void BM_BatchSerial(benchmark::State& state) {
  std::vector<std::uint64_t> seeds(8);
  std::iota(seeds.begin(), seeds.end(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_batch_serial(case1(), seeds));
}
BENCHMARK(BM_BatchSerial)->Unit(benchmark::kMillisecond);

void BM_BatchParallel(benchmark::State& state) {
  std::vector<std::uint64_t> seeds(8);
  std::iota(seeds.begin(), seeds.end(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_batch(case1(), seeds));
}
BENCHMARK(BM_BatchParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

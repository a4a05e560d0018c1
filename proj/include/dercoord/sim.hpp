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


#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dercoord/controller.hpp"
#include "dercoord/scenario.hpp"

// Two-timescale orchestration: the fast estimate-then-track loop, slow
// dispatch solves between estimation phases, metrics and batch runs.
namespace dercoord::sim {

enum class Phase { est, odcp };
const char* to_string(Phase phase);

struct TraceRow {
  long k = 0;
  Vector u;
  double y = 0.0;
  double e = 0.0;
  Vector phi_hat;
  Vector w;       // update mask applied at this row (zeros for row 0 and dispatch rows)
  double alpha;   // estimation step used, NaN when the update was skipped
  Phase phase = Phase::est;
};

struct DispatchRecord {
  long k = 0;  // row index the dispatch produced
  std::string status;
  Vector p;
  std::vector<int> lines;  // monitored line ids
  Vector flows;            // approximate flows on those lines
  double objective = 0.0;
  double kkt = 0.0;
  std::vector<std::string> active;
  std::string message;
};

enum class Termination { delta, max_iters, stall, plant_failure, dispatch };
const char* to_string(Termination t);

struct TraceHeader {
  std::string format = "dercoord-trace/1";
  std::string config_hash;  // 16 hex digits
  std::string feeder_hash;
  std::uint64_t seed = 0;
  int n = 0;
  std::string rng;
  std::string termination;
  std::string equilibrium;
  bool plant_failed = false;
  std::string failure;
};

struct SimTrace {
  TraceHeader header;
  std::vector<TraceRow> rows;
  std::vector<DispatchRecord> dispatches;
  Termination termination = Termination::delta;
  controller::Equilibrium equilibrium = controller::Equilibrium::unclassified;

  int n() const { return header.n; }
  bool empty() const { return rows.empty(); }
  const TraceRow& back() const { return rows.back(); }
};

std::string hex64(std::uint64_t v);

// Algorithm loop from u0 until |e| <= delta, max_iters, a stall of
// stall_window iterations without movement, or a plant failure (the trace
// is then truncated and flagged).
SimTrace run_estimation_phase(const scenario::Scenario& sc, std::optional<std::uint64_t> seed = std::nullopt);

// Estimation phases of up to slow_period iterations, each followed by a
// dispatch solve whose result the DERs jump to. n_slow = 0 is a single
// estimation phase bounded by max_iters.
SimTrace run_two_timescale(const scenario::Scenario& sc, long n_slow,
                           std::optional<std::uint64_t> seed = std::nullopt);

// True sensitivity at every row's setpoints.
std::vector<Vector> oracle_series(const plant::Plant& plant, const SimTrace& trace);
std::vector<Vector> oracle_series_serial(const plant::Plant& plant, const SimTrace& trace);

struct Metrics {
  std::vector<double> mae;  // per row
  double terminal_e = 0.0;
  double terminal_mae = 0.0;
  long iterations_to_delta = -1;  // first row with |e| <= delta, -1 if never
  std::vector<long> overload_duration;  // per line, empty without a feeder
};

struct OverloadModel {
  const net::FeederModel* feeder = nullptr;
  Vector p_d;
  Vector limits;
};

// Throws std::invalid_argument when the oracle series does not align.
Metrics compute_metrics(const SimTrace& trace, const std::vector<Vector>& oracle, double delta,
                        const OverloadModel& overload = {});
OverloadModel overload_model(const scenario::Scenario& sc);

// Independent seeds; results come back in the order of `seeds`.
std::vector<SimTrace> run_batch(const scenario::Scenario& sc, const std::vector<std::uint64_t>& seeds);
std::vector<SimTrace> run_batch_serial(const scenario::Scenario& sc, const std::vector<std::uint64_t>& seeds);

}  // namespace dercoord::sim

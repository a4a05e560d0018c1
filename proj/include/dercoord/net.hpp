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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dercoord/common.hpp"

// Radial feeder data model, incidence structure and the lossless line-flow
// approximation. Powers are in kW/kVAr, impedances in per-unit.
namespace dercoord::net {

enum class BusKind { substation, load, der_unity_pf, der_const_voltage };

struct Bus {
  int id = 0;
  double p_load = 0.0;  // kW, positive means consumption
  double q_load = 0.0;  // kVAr
  BusKind kind = BusKind::load;
  double v_set = 1.0;  // pu; meaningful for the substation and constant-voltage DERs
};

struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;
  double x = 0.0;
  double f_max = 0.0;  // kW, may be +inf
};

// Tree indexing computed once a feeder validates. Every non-root bus has
// exactly one line toward bus 0.
struct RadialTopology {
  std::vector<int> parent;        // parent[b]; parent[0] = -1
  std::vector<int> parent_line;   // index into FeederModel::lines of the line to the parent
  std::vector<int> line_child;    // line index -> the bus on the far side from the root
  std::vector<int> line_sign;     // +1 if the line points away from the root, -1 otherwise
  std::vector<int> order;         // buses 1..N, every parent before its children
  std::vector<std::vector<int>> children;
};

struct FeederModel {
  std::vector<Bus> buses;  // sorted by id, ids 0..N
  std::vector<Line> lines; // sorted by id, ids 1..L
  std::vector<int> der_buses;
  Vector der_p_min, der_p_max;  // kW
  Vector der_q_min, der_q_max;  // kVAr
  double v_base_kv = 4.16;
  double s_base_kva = 1000.0;
  RadialTopology topology;

  int bus_count() const { return static_cast<int>(buses.size()) - 1; }  // N
  int line_count() const { return static_cast<int>(lines.size()); }     // L
  int der_count() const { return static_cast<int>(der_buses.size()); } // n
  Box der_box() const { return {der_p_min, der_p_max}; }
  Vector nominal_p_load() const;  // length N, bus 1..N
  Vector nominal_q_load() const;
  // Index of the line joining a and b (either orientation), or -1.
  int find_line(int a, int b) const;
  // Position of the DER at `bus` in der_buses, or -1.
  int der_index(int bus) const;
};

// Checks every invariant of the model and fills in `feeder.topology`.
// Throws ValidationError.
void validate_and_index(FeederModel& feeder);

FeederModel parse_feeder(const std::string& text);
FeederModel load_feeder(const std::filesystem::path& path);
std::string format_feeder(const FeederModel& feeder);

// Reduced incidence matrix: rows are buses 1..N, columns lines 1..L.
Matrix incidence_matrix(const FeederModel& feeder);

// p = C p_g - p_d, length N.
Vector map_injections(const FeederModel& feeder, const Vector& p_g, const Vector& p_d);

// f = M^{-1} p computed by accumulating subtree injections leaf to root.
Vector line_flows_approx(const FeederModel& feeder, const Vector& p);

// Sensitivity of every line flow to each DER injection (L x n); the affine
// part of the flows is line_flows_approx(feeder, -p_d).
Matrix der_flow_sensitivity(const FeederModel& feeder);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace dercoord::net

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
#include <memory>
#include <string>
#include <vector>

#include "dercoord/common.hpp"
#include "dercoord/controller.hpp"
#include "dercoord/estimator.hpp"
#include "dercoord/net.hpp"
#include "dercoord/odcp.hpp"
#include "dercoord/plant.hpp"

// Scenario files: flat `key = value` text (a TOML subset: strings, numbers,
// booleans and one-line numeric arrays) mapping onto ScenarioConfig.
namespace dercoord::scenario {

enum class PlantKind { feeder, linear };

struct ScenarioConfig {
  std::string name = "scenario";
  PlantKind plant = PlantKind::feeder;
  std::string feeder;  // as written; relative paths resolve against base_dir
  std::filesystem::path base_dir;
  std::filesystem::path feeder_path() const;

  // Load realization.
  double load_scale = 1.0;
  std::vector<int> uncontrollable_bus;
  std::vector<double> uncontrollable_kw;  // generation, modeled as negative load
  std::vector<int> exclude_der_buses;
  std::vector<int> line_limit_from, line_limit_to;
  std::vector<double> line_limit_kw;

  // Linear test plant.
  std::vector<double> linear_phi;
  double linear_offset = 0.0;
  std::vector<double> u_min, u_max;

  double y_star = 0.0;
  double b_lo = 0.8;
  double b_hi = 1.2;
  double beta = 0.02;
  double epsilon = 0.01;
  double delta = 1.0;
  long max_iters = 1000;
  std::vector<double> phi0{1.0};  // one entry broadcasts
  std::vector<double> u0{0.0};
  std::uint64_t seed = 1;
  long slow_period = 1000;
  long n_slow = 0;
  double fast_dt_ms = 100.0;  // metadata only

  estimator::AlphaMode alpha_mode = estimator::AlphaMode::adaptive;
  double alpha_const = 0.1;
  double alpha_gain = 1.0;
  double alpha_guard = 1e-12;
  bool randomized = true;
  long stall_window = 50;
  bool allow_unsafe_beta = false;
  double fd_step_kw = 0.1;
  std::vector<double> cost_quadratic;  // empty means all ones
  std::vector<double> cost_linear;     // empty means all zeros

  // Sets one field from its textual value; throws ParseError on an unknown
  // key or a value of the wrong type.
  void set(const std::string& key, const std::string& value, int line = 0);
  // Numeric convenience used by parameter sweeps.
  void set_number(const std::string& key, double value);
};

ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);
// Canonical text form; parsing it reproduces the same configuration.
std::string format_scenario(const ScenarioConfig& cfg);
std::uint64_t config_hash(const ScenarioConfig& cfg);

// Everything a run needs, built and validated from a config.
struct Scenario {
  ScenarioConfig cfg;
  std::shared_ptr<const net::FeederModel> feeder;  // null for the linear plant
  plant::LoadProfile loads;
  std::shared_ptr<const plant::Plant> plant;
  Box box;
  Vector u0;
  Vector phi0;
  Vector flow_limits;  // per line, empty for the linear plant
  odcp::Cost cost;
  estimator::EstimatorConfig estimator;
  controller::ControllerConfig controller;
  std::uint64_t config_hash = 0;
  std::uint64_t feeder_hash = 0;

  int size() const { return static_cast<int>(u0.size()); }
};

// Throws ValidationError (bad values, beta outside the admissible interval
// unless allowed) and ParseError (unreadable feeder).
Scenario build_scenario(const ScenarioConfig& cfg);
Scenario load(const std::filesystem::path& path);

// A copy of `feeder` with DERs removed, turning their buses into loads.
net::FeederModel without_ders(const net::FeederModel& feeder, const std::vector<int>& buses);

}  // namespace dercoord::scenario

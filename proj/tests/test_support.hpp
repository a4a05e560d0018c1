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

#include <filesystem>
#include <string>

#include "dercoord/scenario.hpp"

namespace testing_support {

inline std::filesystem::path data_dir() { return DERCOORD_TEST_DATA_DIR; }

inline dercoord::scenario::Scenario bundled(const std::string& name) {
  return dercoord::scenario::load(data_dir() / "scenarios" / (name + ".toml"));
}

inline dercoord::scenario::ScenarioConfig bundled_config(const std::string& name) {
  return dercoord::scenario::load_scenario(data_dir() / "scenarios" / (name + ".toml"));
}

// Two buses, one line 0 -> 1, optional DER on bus 1.
inline std::string two_bus_text(double r, double x, double load_kw, bool with_der = true,
                                double q_load_kvar = 0.0) {
  std::string s = "[base]\ns_base_kva 1000\nv_base_kv 4.16\n[buses]\n0 substation 0 0 1.0\n";
  s += std::string("1 ") + (with_der ? "der_unity_pf " : "load ") + std::to_string(load_kw) + " " +
       std::to_string(q_load_kvar) + "\n";
  s += "[lines]\n1 0 1 " + std::to_string(r) + " " + std::to_string(x) + " inf\n";
  if (with_der) s += "[ders]\n1 0 100 0 0\n";
  return s;
}

}  // namespace testing_support

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


// dercoord: command-line front end for runs, parameter sweeps, the
// verification suites and the sensitivity oracle.
//
// Exit codes: 0 success, 1 a verification verdict failed, 2 invalid input,
// 3 the power-flow plant did not converge.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dercoord/plant.hpp"
#include "dercoord/scenario.hpp"
#include "dercoord/sim.hpp"
#include "dercoord/trace_io.hpp"
#include "dercoord/verify.hpp"

namespace {

using namespace dercoord;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitPlant = 3;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("bad number '" + item + "' in list");
    }
  }
  return out;
}

scenario::ScenarioConfig load_config(const std::string& path, bool allow_unsafe) {
  auto cfg = scenario::load_scenario(path);
  if (allow_unsafe) cfg.allow_unsafe_beta = true;
  return cfg;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out,
            bool allow_unsafe) {
  auto cfg = load_config(path, allow_unsafe);
  if (seed) cfg.seed = *seed;
  const auto sc = scenario::build_scenario(cfg);
  const auto trace = sim::run_two_timescale(sc, cfg.n_slow);
  if (!out.empty()) trace_io::export_trace(trace, out);

  nlohmann::ordered_json s;
  s["scenario"] = cfg.name;
  s["seed"] = cfg.seed;
  s["rows"] = trace.rows.size();
  s["termination"] = trace.header.termination;
  s["equilibrium"] = trace.header.equilibrium;
  if (!trace.rows.empty()) {
    s["final_k"] = trace.back().k;
    s["final_y"] = trace.back().y;
    s["final_e"] = trace.back().e;
    s["final_u"] = std::vector<double>(trace.back().u.data(), trace.back().u.data() + trace.back().u.size());
  }
  for (const auto& d : trace.dispatches) {
    nlohmann::ordered_json j;
    j["k"] = d.k;
    j["status"] = d.status;
    j["p"] = std::vector<double>(d.p.data(), d.p.data() + d.p.size());
    j["lines"] = d.lines;
    j["flows"] = std::vector<double>(d.flows.data(), d.flows.data() + d.flows.size());
    j["active"] = d.active;
    if (!d.message.empty()) j["message"] = d.message;
    s["dispatches"].push_back(j);
  }
  if (trace.header.plant_failed) s["failure"] = trace.header.failure;
  std::cout << s.dump() << '\n';
  return trace.header.plant_failed ? kExitPlant : 0;
}

int cmd_sweep(const std::string& path, const std::string& param, const std::string& values, long seeds,
              std::uint64_t first_seed, const std::string& out, bool allow_unsafe) {
  const auto base = load_config(path, allow_unsafe);
  const auto grid = parse_list(values);
  if (grid.empty()) throw ValidationError("--values is empty");
  if (seeds < 1) throw ValidationError("--seeds must be positive");
  std::vector<std::uint64_t> seed_list(seeds);
  std::iota(seed_list.begin(), seed_list.end(), first_seed);

  std::ostringstream csv;
  csv << "param,value,seed,termination,equilibrium,rows,iterations_to_delta,terminal_e,terminal_mae\n";
  bool plant_failed = false;
  for (double v : grid) {
    auto cfg = base;
    cfg.set_number(param, v);
    const auto sc = scenario::build_scenario(cfg);
    const auto traces = sim::run_batch(sc, seed_list);
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const auto& t = traces[i];
      plant_failed = plant_failed || t.header.plant_failed;
      double mae = std::numeric_limits<double>::quiet_NaN();
      long to_delta = -1;
      for (const auto& row : t.rows) {
        if (std::abs(row.e) <= sc.controller.delta) {
          to_delta = row.k;
          break;
        }
      }
      if (!t.rows.empty() && !t.header.plant_failed) {
        const Vector phi = sc.plant->sensitivity(t.back().u);
        mae = (t.back().phi_hat - phi).cwiseAbs().mean();
      }
      csv << param << ',' << trace_io::shortest(v) << ',' << seed_list[i] << ',' << t.header.termination << ','
          << t.header.equilibrium << ',' << t.rows.size() << ',' << to_delta << ','
          << trace_io::shortest(t.rows.empty() ? 0.0 : t.back().e) << ',' << trace_io::shortest(mae) << '\n';
    }
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << csv.str();
  }
  return plant_failed ? kExitPlant : 0;
}

int cmd_verify(const std::string& suite, long seeds, std::uint64_t seed, const std::string& data_dir) {
  std::vector<verify::StatTestReport> reports;
  auto append = [&](std::vector<verify::StatTestReport> more) {
    for (auto& r : more) reports.push_back(std::move(r));
  };
  if (suite != "lemmas" && suite != "theorems" && suite != "qp" && suite != "all") {
    throw ValidationError("unknown suite '" + suite + "'");
  }
  if (suite == "lemmas" || suite == "all") append(verify::lemma_suite(seed));
  if (suite == "theorems" || suite == "all") append(verify::theorem_suite(seed, seeds, data_dir));
  if (suite == "qp" || suite == "all") append(verify::qp_suite(seed));
  bool failed = false;
  for (const auto& r : reports) {
    std::cout << r.to_json() << '\n';
    failed = failed || r.verdict == verify::Verdict::fail;
  }
  return failed ? kExitVerifyFailed : 0;
}

int cmd_oracle(const std::string& path, const std::string& u_text, bool allow_unsafe) {
  const auto cfg = load_config(path, allow_unsafe);
  const auto sc = scenario::build_scenario(cfg);
  Vector u = sc.u0;
  if (!u_text.empty()) {
    const auto values = parse_list(u_text);
    if (values.size() == 1) {
      u = Vector::Constant(sc.size(), values[0]);
    } else if (static_cast<int>(values.size()) == sc.size()) {
      u = Eigen::Map<const Vector>(values.data(), sc.size());
    } else {
      throw ValidationError("--u needs 1 or " + std::to_string(sc.size()) + " values");
    }
    if (!sc.box.contains(u)) throw ValidationError("--u lies outside the DER limits");
  }
  const double y = sc.plant->measure(u);
  const Vector phi = sc.plant->sensitivity(u);
  nlohmann::ordered_json j;
  j["scenario"] = cfg.name;
  j["u"] = std::vector<double>(u.data(), u.data() + u.size());
  j["y"] = y;
  j["phi"] = std::vector<double>(phi.data(), phi.data() + phi.size());
  if (sc.feeder) j["der_buses"] = sc.feeder->der_buses;
  std::cout << j.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven DER coordination simulator"};
  app.require_subcommand(1);
  bool allow_unsafe = false;
  app.add_flag("--allow-unsafe-beta", allow_unsafe, "Accept beta outside the admissible interval");

  std::string scenario_path, out, param, values, suite = "all", u_text;
  std::string data_dir = DERCOORD_DATA_DIR;
  std::uint64_t seed_value = 0, first_seed = 1, verify_seed = 20240601;
  long seeds = 100;

  auto* run = app.add_subcommand("run", "Run one scenario and optionally write its trace");
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  auto* seed_opt = run->add_option("--seed", seed_value, "Override the scenario seed");
  run->add_option("--out", out, "Trace CSV path");
  run->add_flag("--allow-unsafe-beta", allow_unsafe, "Accept beta outside the admissible interval");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid over many seeds");
  sweep->add_option("--scenario", scenario_path, "Scenario file")->required();
  sweep->add_option("--param", param, "Numeric scenario key to vary")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--seeds", seeds, "Seeds per value");
  sweep->add_option("--first-seed", first_seed, "First seed");
  sweep->add_option("--out", out, "Summary CSV path (default stdout)");
  sweep->add_flag("--allow-unsafe-beta", allow_unsafe, "Accept beta outside the admissible interval");

  auto* ver = app.add_subcommand("verify", "Run the verification suites (one JSON report per line)");
  ver->add_option("--suite", suite, "lemmas, theorems, qp or all");
  ver->add_option("--seeds", seeds, "Seeds for the statistical theorem checks");
  ver->add_option("--seed", verify_seed, "Master seed");
  ver->add_option("--data", data_dir, "Directory holding feeders/ and scenarios/");

  auto* orc = app.add_subcommand("oracle", "Finite-difference sensitivities at the initial setpoints");
  orc->add_option("--scenario", scenario_path, "Scenario file")->required();
  orc->add_option("--u", u_text, "Setpoints (one value or one per DER)");
  orc->add_flag("--allow-unsafe-beta", allow_unsafe, "Accept beta outside the admissible interval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*run) {
      std::optional<std::uint64_t> seed;
      if (*seed_opt) seed = seed_value;
      return cmd_run(scenario_path, seed, out, allow_unsafe);
    }
    if (*sweep) return cmd_sweep(scenario_path, param, values, seeds, first_seed, out, allow_unsafe);
    if (*ver) return cmd_verify(suite, seeds, verify_seed, data_dir);
    if (*orc) return cmd_oracle(scenario_path, u_text, allow_unsafe);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPlant;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitVerifyFailed;
  }
  return 0;
}

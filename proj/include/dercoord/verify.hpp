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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dercoord/odcp.hpp"
#include "dercoord/scenario.hpp"
#include "dercoord/sim.hpp"

// Executable checks of the convergence results: seeded statistical suites,
// pathwise property checks on traces and a brute-force QP oracle.
namespace dercoord::verify {

enum class Verdict { pass, fail, inconclusive, skipped };
const char* to_string(Verdict v);

struct StatTestReport {
  std::string name;
  long n_trials = 0;
  double pass_fraction = 0.0;
  double threshold = 1.0;
  std::string confidence;
  Verdict verdict = Verdict::fail;
  std::string note;
  std::string reproduce;  // CLI command that regenerates this report
  std::map<std::string, double> stats;

  // verdict = pass iff pass_fraction >= threshold, unless a precondition
  // gate already set skipped or inconclusive.
  void decide();
  std::string to_json() const;
};

// Products of i.i.d. draws from {x, 1}: Y_kmax < y_tol in enough trials.
StatTestReport check_product_convergence(std::uint64_t seed, double x, long k_max, long n_trials,
                                         double threshold = 0.99, double y_tol = 1e-6);
// Partial sums of those products settle, and each path obeys
// Z <= (K + 1) / (1 - x) with K the longest run of ones.
StatTestReport check_bounded_sum(std::uint64_t seed, double x, long k_max, long n_trials,
                                 double threshold = 0.99);

// Serial references of the two Monte-Carlo loops (same results).
StatTestReport check_product_convergence_serial(std::uint64_t seed, double x, long k_max, long n_trials,
                                                double threshold = 0.99, double y_tol = 1e-6);
StatTestReport check_bounded_sum_serial(std::uint64_t seed, double x, long k_max, long n_trials,
                                        double threshold = 0.99);

// Terminal classification, sign constancy of e, and vanishing control moves.
// Skipped when beta is outside the admissible interval.
StatTestReport check_theorem1(const sim::SimTrace& trace, const scenario::Scenario& sc);

// Effective-sensitivity witness for every projected control step.
StatTestReport check_projection_witness(const sim::SimTrace& trace, const scenario::Scenario& sc);

struct RateConfig {
  std::uint64_t seed = 1;
  long n_seeds = 50;
  double epsilon = 0.1;
  double b_lo = 0.8;
  double b_hi = 1.2;
  int n_max = 4;                    // DER counts drawn from 1..n_max (capped to keep the interval non-empty)
  std::optional<double> beta;       // fixed beta instead of a random draw inside the interval
  long max_iters = 300;
};
// Full-mask runs on random linear plants; |e[k]/e[k-1]| < 1 - eps on every
// interior iteration.
StatTestReport check_corollary1(const RateConfig& cfg);

struct EstimationConfig {
  std::uint64_t seed = 1;
  long n_seeds = 200;
  int n = 9;
  double phi_lo = 0.85, phi_hi = 1.15;
  double beta = 0.005;
  double epsilon = 0.01;
  long iters = 500;
  double tol = 1e-3;     // on |phi_hat - phi|
  double threshold = 0.95;
  double alpha_gain = 1.0;
};
// Linear synthetic plant with known sensitivities.
StatTestReport check_theorem2_linear(const EstimationConfig& cfg);

// Seeds of a scenario scored against the finite-difference oracle: terminal
// MAE < tol and per-component relative error below rel_tol.
StatTestReport check_theorem2(const scenario::Scenario& sc, long n_seeds, double tol = 1e-2,
                              double threshold = 0.9, double rel_tol = 0.01, std::uint64_t first_seed = 1);

// Random scenarios with feasible, under- and over-capacity targets.
StatTestReport check_trichotomy(std::uint64_t seed, long n_scenarios, const scenario::Scenario* feeder_base = nullptr);

struct GridResult {
  bool feasible = false;
  Vector p;
  double objective = 0.0;
  long points = 0;
};
// Exhaustive scan: the first n-1 coordinates on a grid of grid_step x box
// width, the last solved from the equality. n <= 3.
GridResult brute_force_qp(const odcp::DispatchProblem& prob, const odcp::FlowConstraints& flows,
                          double grid_step = 1e-3);
GridResult brute_force_qp_serial(const odcp::DispatchProblem& prob, const odcp::FlowConstraints& flows,
                                 double grid_step = 1e-3);

struct QpInstance {
  net::FeederModel feeder;
  odcp::DispatchProblem prob;
};
// Random small feeder with 2 or 3 DERs and a dispatch problem on it.
QpInstance random_qp_instance(std::uint64_t seed, std::uint64_t index);

StatTestReport check_qp_oracle(std::uint64_t seed, long n_instances, double grid_step = 1e-3,
                               double gap_tol = 1e-3, double kkt_tol = 1e-6);

// Named groups used by `dercoord verify --suite`.
std::vector<StatTestReport> lemma_suite(std::uint64_t seed);
std::vector<StatTestReport> theorem_suite(std::uint64_t seed, long seeds, const std::string& data_dir);
std::vector<StatTestReport> qp_suite(std::uint64_t seed);

}  // namespace dercoord::verify

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


#include <doctest.h>

#include <cmath>

#include "dercoord/sim.hpp"
#include "dercoord/verify.hpp"
#include "test_support.hpp"

using namespace dercoord;
using namespace dercoord::verify;

namespace {

const StatTestReport& find(const std::vector<StatTestReport>& reports, const std::string& name) {
  for (const auto& r : reports) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("missing report " + name);
}

scenario::ScenarioConfig linear_config(double y_star) {
  scenario::ScenarioConfig c;
  c.plant = scenario::PlantKind::linear;
  c.linear_phi = {1.0, 0.9, 1.1};
  c.linear_offset = 0.0;
  c.u_min = {0.0};
  c.u_max = {100.0};
  c.u0 = {50.0};
  c.y_star = y_star;
  return c;
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("report verdict follows the pass fraction") {
  StatTestReport r;
  r.n_trials = 10;
  r.threshold = 0.9;
  r.pass_fraction = 0.9;
  r.decide();
  CHECK(r.verdict == Verdict::pass);
  r.pass_fraction = 0.8;
  r.decide();
  CHECK(r.verdict == Verdict::fail);
  CHECK(r.to_json().find("\"verdict\":\"fail\"") != std::string::npos);
}

TEST_CASE("product convergence examples") {
  const auto slow = check_product_convergence(7, 0.99, 100000, 1000, 0.99);
  CHECK(slow.verdict == Verdict::pass);
  CHECK(slow.pass_fraction >= 0.99);
  // Oracle: E[log Y] = (k/2) log x.
  CHECK(slow.stats.at("mean_log_y") == doctest::Approx(0.5 * 100000 * std::log(0.99)).epsilon(0.01));

  const auto half = check_product_convergence(7, 0.5, 100, 1000, 1.0, std::ldexp(1.0, -20));
  CHECK(half.verdict == Verdict::pass);
  CHECK(half.pass_fraction == 1.0);

  const auto edge = check_product_convergence(7, 0.999999, 100, 100, 0.99);
  CHECK(edge.verdict == Verdict::inconclusive);
}

TEST_CASE("bounded sum examples") {
  const auto r = check_bounded_sum(7, 0.5, 2000, 100000, 0.99);
  CHECK(r.verdict == Verdict::pass);
  // Geometric series sum_{k>=1} 0.75^k = 3.
  CHECK(std::abs(r.stats.at("mean_z") - 3.0) < 5.0 * r.stats.at("std_error") + 1e-9);

  const auto r9 = check_bounded_sum(7, 0.9, 2000, 1000, 0.99);
  CHECK(r9.verdict == Verdict::pass);
  CHECK(r9.stats.at("bound_violations") == 0.0);
  CHECK(std::isfinite(r9.stats.at("max_z")));

  CHECK_THROWS_AS(check_bounded_sum(7, 0.0, 100, 10), ValidationError);
  CHECK_THROWS_AS(check_product_convergence(7, 1.0, 100, 10), ValidationError);
}

TEST_CASE("lemma suite passes and reruns identically") {
  const auto a = lemma_suite(20240601);
  const auto b = lemma_suite(20240601);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].to_json() == b[i].to_json());
    CHECK(a[i].verdict != Verdict::fail);
  }
  CHECK(find(a, "product_convergence_x0.99").verdict == Verdict::pass);
  CHECK(find(a, "bounded_sum_x0.5").verdict == Verdict::pass);
}

TEST_CASE("serial and parallel lemma checks agree") {
  CHECK(check_product_convergence(3, 0.9, 5000, 300).to_json() ==
        check_product_convergence_serial(3, 0.9, 5000, 300).to_json());
  CHECK(check_bounded_sum(3, 0.7, 500, 300).to_json() == check_bounded_sum_serial(3, 0.7, 500, 300).to_json());
}

TEST_CASE("equilibrium classes on a linear plant") {
  // Reachable outputs span [0, 300].
  for (auto [y_star, expected] : {std::pair{120.0, controller::Equilibrium::tracking},
                                  std::pair{-50.0, controller::Equilibrium::saturated_low},
                                  std::pair{400.0, controller::Equilibrium::saturated_high}}) {
    const auto sc = scenario::build_scenario(linear_config(y_star));
    const auto t = sim::run_estimation_phase(sc);
    const auto r = check_theorem1(t, sc);
    CHECK(r.verdict == Verdict::pass);
    CHECK(t.equilibrium == expected);
  }
}

TEST_CASE("rate check: interior, boundary stress and unsafe steps") {
  RateConfig cfg;
  cfg.n_seeds = 20;
  CHECK(check_corollary1(cfg).verdict == Verdict::pass);

  // Largest epsilon that still admits a single DER.
  RateConfig edge = cfg;
  edge.epsilon = 0.8 * 0.8 / (1.2 * 1.2) * 0.999;
  edge.n_max = 1;
  const auto r = check_corollary1(edge);
  CHECK(r.verdict == Verdict::pass);

  RateConfig unsafe = cfg;
  unsafe.beta = 1.0;
  const auto u = check_corollary1(unsafe);
  CHECK(u.verdict == Verdict::skipped);
  CHECK(u.note.find("outside") != std::string::npos);
}

TEST_CASE("estimation convergence on the linear plant") {
  EstimationConfig cfg;
  cfg.n_seeds = 40;
  CHECK(check_theorem2_linear(cfg).verdict == Verdict::pass);
}

TEST_CASE("estimation check is skipped when the run saturates") {
  auto c = linear_config(400.0);
  const auto sc = scenario::build_scenario(c);
  CHECK(check_theorem2(sc, 3).verdict == Verdict::skipped);
}

TEST_CASE("trichotomy on a small batch") {
  const auto r = check_trichotomy(11, 30);
  CHECK(r.verdict == Verdict::pass);
  CHECK(r.pass_fraction == 1.0);
}

TEST_CASE("grid oracle on the analytic instance") {
  const auto inst = random_qp_instance(1, 0);
  odcp::DispatchProblem prob;
  prob.y_now = 0.0;
  prob.y_star = 1.0;
  prob.p_tilde = Vector::Zero(2);
  prob.phi_hat = Vector::Ones(2);
  prob.box = {Vector::Zero(2), Vector::Constant(2, 10.0)};
  prob.cost = odcp::Cost::least_change(2);
  const auto g = brute_force_qp(prob, odcp::FlowConstraints{}, 1e-3);
  REQUIRE(g.feasible);
  CHECK(std::abs(g.p[0] - 0.5) <= 1e-3);
  CHECK(std::abs(g.p[1] - 0.5) <= 1e-3);
  CHECK(std::abs(g.objective - 0.5) <= 1e-3);
  CHECK(inst.prob.p_tilde.size() >= 2);
}

TEST_CASE("grid oracle parallel and serial agree") {
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto inst = random_qp_instance(4, i);
    const auto flows = odcp::build_flow_constraints(inst.prob, inst.feeder);
    const auto a = brute_force_qp(inst.prob, flows, 5e-3);
    const auto b = brute_force_qp_serial(inst.prob, flows, 5e-3);
    CHECK(a.feasible == b.feasible);
    CHECK(a.objective == b.objective);
    CHECK(a.points == b.points);
    if (a.feasible) CHECK(a.p == b.p);
  }
}

TEST_CASE("active-set dispatch matches the grid on random instances") {
  const auto r = check_qp_oracle(2024, 40);
  CHECK(r.verdict == Verdict::pass);
  CHECK(r.stats.at("max_objective_gap") <= 1e-3);
  CHECK(r.stats.at("max_kkt_residual") <= 1e-6);
}

}  // TEST_SUITE

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
#include <random>

#include "dercoord/estimator.hpp"
#include "dercoord/plant.hpp"
#include "test_support.hpp"

using namespace dercoord;
using namespace dercoord::estimator;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("project_box examples") {
  CHECK(project_box(vec({1.3, 0.7}), 0.8, 1.2) == vec({1.2, 0.8}));
  CHECK(project_box(vec({0.9, 1.1}), 0.8, 1.2) == vec({0.9, 1.1}));
  CHECK(project_box(vec({2, -1}), vec({0, 0}), vec({1, 1})) == vec({1, 0}));
}

TEST_CASE("adaptive_alpha examples") {
  CHECK(adaptive_alpha(vec({2, 0}), 1e-12).value() == 0.5);
  CHECK_FALSE(adaptive_alpha(vec({0, 0}), 1e-12).has_value());
  CHECK(adaptive_alpha(vec({1, 1, 1, 1}), 1e-12).value() == 0.5);
  CHECK(adaptive_alpha(vec({2, 0}), 1e-12, 1.0).value() == 0.25);
}

TEST_CASE("estimation_step examples") {
  const auto est = SensitivityEstimate::make(vec({1.0}), 0.8, 1.2);
  CHECK(estimation_step(est, vec({2.0}), 2.2, 0.5).phi_hat[0] == doctest::Approx(1.2));
  CHECK(estimation_step(est, vec({1.0}), 0.5, 1.0).phi_hat[0] == doctest::Approx(0.8));

  const auto e2 = SensitivityEstimate::make(vec({0.9, 1.1}), 0.8, 1.2);
  const Vector du = vec({3.0, -1.0});
  const double dy = du.dot(e2.phi_hat);
  CHECK(estimation_step(e2, du, dy, 0.7).phi_hat == e2.phi_hat);
  CHECK(estimation_step(e2, du, dy + 1.0, std::nullopt).phi_hat == e2.phi_hat);
}

TEST_CASE("estimates stay in the box for any data") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> wide(-50.0, 50.0);
  auto est = SensitivityEstimate::make(Vector::Ones(5), 0.8, 1.2);
  for (int k = 0; k < 2000; ++k) {
    Vector du(5);
    for (int i = 0; i < 5; ++i) du[i] = wide(gen);
    est = estimation_step(est, du, wide(gen), adaptive_alpha(du, 1e-12));
    CHECK((est.phi_hat.array() >= 0.8).all());
    CHECK((est.phi_hat.array() <= 1.2).all());
  }
}

TEST_CASE("one-dimensional step: gain 2 reflects the residual, gain 1 lands on the truth") {
  const double phi = 1.05;
  const auto start = SensitivityEstimate::make(vec({0.95}), 0.8, 1.2);
  const Vector du = vec({3.0});
  const double dy = phi * 3.0;
  const double r0 = du.dot(start.phi_hat) - dy;

  const auto reflected = estimation_step(start, du, dy, adaptive_alpha(du, 1e-12));
  const double r1 = du.dot(reflected.phi_hat) - dy;
  CHECK(std::abs(r1) == doctest::Approx(std::abs(r0)).epsilon(1e-12));
  CHECK(r1 == doctest::Approx(-r0).epsilon(1e-12));
  const auto again = estimation_step(reflected, du, dy, adaptive_alpha(du, 1e-12));
  CHECK(std::abs(du.dot(again.phi_hat) - dy) == doctest::Approx(std::abs(r0)).epsilon(1e-12));

  const auto exact = estimation_step(start, du, dy, adaptive_alpha(du, 1e-12, 1.0));
  CHECK(exact.phi_hat[0] == doctest::Approx(phi).epsilon(1e-14));
}

TEST_CASE("step_size honours the configured mode") {
  EstimatorConfig cfg;
  CHECK(step_size(cfg, vec({2.0, 0.0})).value() == 0.25);
  cfg.alpha_mode = AlphaMode::constant;
  cfg.alpha_const = 0.3;
  CHECK(step_size(cfg, vec({2.0, 0.0})).value() == 0.3);
  CHECK_FALSE(step_size(cfg, vec({0.0, 0.0})).has_value());
  cfg.alpha_const = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  EstimatorConfig bad;
  bad.alpha_guard = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(SensitivityEstimate::make(vec({1.0}), 1.2, 0.8), ValidationError);
  CHECK_THROWS_AS(SensitivityEstimate::make(vec({1.0}), 0.0, 0.8), ValidationError);
}

TEST_CASE("predict_output examples") {
  const auto est = SensitivityEstimate::make(vec({1.0, 1.0}), 0.8, 1.2);
  CHECK(predict_output(est, -3000.0, vec({5, 5}), vec({5, 5})) == -3000.0);
  CHECK(predict_output(est, -3000.0, vec({10, 20}), vec({0, 0})) == -2970.0);
}

TEST_CASE("unit estimates predict a lossless plant exactly") {
  auto cfg = testing_support::bundled_config("case1");
  const auto sc = dercoord::scenario::build_scenario(cfg);
  auto f = *sc.feeder;
  for (auto& line : f.lines) line.r = 0.0;
  const auto est = SensitivityEstimate::make(Vector::Ones(9), 0.8, 1.2);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unit(0.0, 100.0);
  Vector u_prev = Vector::Zero(9);
  double y_prev = plant::solve_power_flow(f, u_prev, sc.loads).y;
  for (int k = 0; k < 10; ++k) {
    Vector u(9);
    for (int i = 0; i < 9; ++i) u[i] = unit(gen);
    const double y = plant::solve_power_flow(f, u, sc.loads).y;
    CHECK(predict_output(est, y_prev, u, u_prev) == doctest::Approx(y).epsilon(1e-10));
    u_prev = u;
    y_prev = y;
  }
}

}  // TEST_SUITE

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

#include "dercoord/plant.hpp"
#include "oracles/oracles.hpp"
#include "test_support.hpp"

using namespace dercoord;
using namespace dercoord::plant;

namespace {

Vector one(double v) { return Vector::Constant(1, v); }

net::FeederModel lossless(net::FeederModel f) {
  for (auto& line : f.lines) line.r = 0.0;
  return f;
}

}  // namespace

TEST_SUITE("plant") {

TEST_CASE("lossless two-bus import equals the load") {
  const auto f = net::parse_feeder(testing_support::two_bus_text(0.0, 0.0, 100.0));
  const auto op = solve_power_flow(f, one(0.0), LoadProfile::nominal(f));
  CHECK(measure_output(op) == doctest::Approx(-100.0).epsilon(1e-12));
  CHECK(op.v_mag[0] == 1.0);
  CHECK(op.v_mag[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("resistive two-bus matches the closed form") {
  for (double r : {0.001, 0.01, 0.05, 0.1}) {
    CAPTURE(r);
    const auto f = net::parse_feeder(testing_support::two_bus_text(r, 0.0, 1000.0));
    const auto op = solve_power_flow(f, one(0.0), LoadProfile::nominal(f));
    const auto exact = oracle::two_bus_resistive(r, 1.0);
    CHECK(op.v_mag[1] == doctest::Approx(exact.v1).epsilon(1e-10));
    CHECK(op.y == doctest::Approx(-exact.substation_p * 1000.0).epsilon(1e-10));
    CHECK(op.y < -1000.0);
  }
}

TEST_CASE("bundled feeder at u = 0 imports load plus losses") {
  const auto f = net::load_feeder(testing_support::data_dir() / "feeders" / "ieee123_synthetic.feeder");
  const auto loads = LoadProfile::nominal(f);
  const auto op = solve_power_flow(f, Vector::Zero(9), loads);
  CHECK(op.losses > 0.0);
  CHECK(op.losses < 0.2 * 3000.0);
  CHECK(op.y == doctest::Approx(-(3000.0 + op.losses)).epsilon(1e-9));
  CHECK(op.v_mag[0] == f.buses[0].v_set);
  CHECK(op.max_mismatch < 1e-8);
}

TEST_CASE("power balance closes and lossless feeders have unit sensitivity") {
  const auto sc = testing_support::bundled("case1");
  const auto& f = *sc.feeder;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unit(0.0, 100.0);
  for (int trial = 0; trial < 5; ++trial) {
    Vector u(9);
    for (int i = 0; i < 9; ++i) u[i] = unit(gen);
    const auto op = solve_power_flow(f, u, sc.loads);
    const double balance = u.sum() - sc.loads.p_d.sum() - op.losses - op.y;
    CHECK(std::abs(balance) / f.s_base_kva < 1e-6);

    const auto free = lossless(f);
    const auto op0 = solve_power_flow(free, u, sc.loads);
    CHECK(std::abs(op0.y + sc.loads.p_d.sum() - u.sum()) / f.s_base_kva < 1e-8);
  }
  const Vector phi = fd_sensitivity(lossless(f), Vector::Constant(9, 50.0), sc.loads);
  CHECK((phi.array() - 1.0).abs().maxCoeff() < 1e-6);
}

TEST_CASE("sweep agrees with an independent Newton-Raphson solve on small feeders") {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    oracle::RandomTreeOptions opt;
    opt.buses = 2 + static_cast<int>(gen() % 14);
    opt.ders = 1 + static_cast<int>(gen() % 3);
    opt.pv_ders = trial % 2 == 0 ? 1 : 0;
    const auto f = oracle::random_tree(gen, opt);
    const auto loads = LoadProfile::nominal(f);
    Vector u(f.der_count());
    for (int i = 0; i < u.size(); ++i) u[i] = 100.0 * unit(gen);
    const auto op = solve_power_flow(f, u, loads);
    std::vector<double> uu(u.data(), u.data() + u.size());
    std::vector<double> pd(loads.p_d.data(), loads.p_d.data() + loads.p_d.size());
    std::vector<double> qd(loads.q_d.data(), loads.q_d.data() + loads.q_d.size());
    const auto nr = oracle::newton_raphson(f, uu, pd, qd);
    REQUIRE(nr.iterations < 50);
    for (int b = 0; b <= f.bus_count(); ++b) {
      worst = std::max(worst, std::abs(op.v_mag[b] - std::abs(nr.v[b])));
      worst = std::max(worst, std::abs(op.v_ang[b] - std::arg(nr.v[b])));
    }
    worst = std::max(worst, std::abs(op.y - nr.y_kw) / f.s_base_kva);
    for (int i = 0; i < f.der_count(); ++i) {
      worst = std::max(worst, std::abs(op.q_der[i] - nr.q_der_kvar[i]) / f.s_base_kva);
    }
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("constant-voltage DERs hold their setpoint") {
  const auto sc = testing_support::bundled("case1");
  const auto& f = *sc.feeder;
  const auto op = solve_power_flow(f, Vector::Constant(9, 30.0), sc.loads);
  for (int i = 0; i < f.der_count(); ++i) {
    const int b = f.der_buses[i];
    if (f.buses[b].kind == net::BusKind::der_const_voltage) {
      CHECK(op.v_mag[b] == doctest::Approx(f.buses[b].v_set).epsilon(1e-10));
    } else {
      CHECK(op.q_der[i] == 0.0);
    }
  }
}

TEST_CASE("sensitivity regimes of the bundled cases") {
  const auto s1 = testing_support::bundled("case1");
  const Vector phi1 = s1.plant->sensitivity(s1.u0);
  CHECK(phi1.minCoeff() > 1.0);
  CHECK(phi1.maxCoeff() < 1.2);
  const auto s2 = testing_support::bundled("case2");
  const Vector phi2 = s2.plant->sensitivity(s2.u0);
  CHECK(phi2.minCoeff() > 0.8);
  CHECK(phi2.maxCoeff() < 1.0);
}

TEST_CASE("sensitivities stay inside [0.8, 1.2] across the DER box") {
  for (const char* name : {"case1", "case2"}) {
    const auto sc = testing_support::bundled(name);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unit(0.0, 100.0);
    for (int trial = 0; trial < 4; ++trial) {
      Vector u(9);
      for (int i = 0; i < 9; ++i) u[i] = unit(gen);
      const Vector phi = sc.plant->sensitivity(u);
      CHECK(phi.minCoeff() >= 0.8);
      CHECK(phi.maxCoeff() <= 1.2);
    }
  }
}

TEST_CASE("finite differences fall back to one-sided stencils at the limits") {
  const auto sc = testing_support::bundled("case1");
  const Vector at_top = sc.plant->sensitivity(Vector::Constant(9, 100.0));
  const Vector inside = sc.plant->sensitivity(Vector::Constant(9, 99.95));
  CHECK((at_top - inside).cwiseAbs().maxCoeff() < 5e-5);
  const Vector at_bottom = sc.plant->sensitivity(Vector::Zero(9));
  const Vector near = sc.plant->sensitivity(Vector::Constant(9, 0.05));
  CHECK((at_bottom - near).cwiseAbs().maxCoeff() < 5e-5);
}

TEST_CASE("parallel and serial FD oracles agree exactly") {
  const auto sc = testing_support::bundled("case2");
  const Vector u = Vector::Constant(9, 40.0);
  const Vector a = fd_sensitivity(*sc.feeder, u, sc.loads);
  const Vector b = fd_sensitivity_serial(*sc.feeder, u, sc.loads);
  CHECK(a == b);
}

TEST_CASE("infeasible loading raises a convergence error") {
  // r P = 1 > 1/4: no real voltage solution exists.
  const auto f = net::parse_feeder(testing_support::two_bus_text(0.5, 0.0, 2000.0));
  CHECK_THROWS_AS(solve_power_flow(f, one(0.0), LoadProfile::nominal(f)), ConvergenceError);
}

TEST_CASE("reactive range violation at a constant-voltage DER is reported") {
  const auto f = net::parse_feeder(
      "[buses]\n0 substation 0 0 1.0\n1 der_const_voltage 100 50 0.95\n"
      "[lines]\n1 0 1 0.01 0.02 inf\n[ders]\n1 0 100 0 0\n");
  CHECK_THROWS_AS(solve_power_flow(f, one(0.0), LoadProfile::nominal(f)), ConvergenceError);
}

TEST_CASE("setpoints outside the DER box are rejected") {
  const auto sc = testing_support::bundled("case1");
  CHECK_THROWS_AS(sc.plant->measure(Vector::Constant(9, 101.0)), ValidationError);
  CHECK_THROWS_AS(sc.plant->measure(Vector::Constant(8, 1.0)), std::exception);
}

TEST_CASE("linear plant") {
  Vector phi(2);
  phi << 1.0, 0.9;
  const LinearPlant p(phi, -10.0, {Vector::Zero(2), Vector::Constant(2, 5.0)});
  Vector u(2);
  u << 2.0, 4.0;
  CHECK(p.measure(u) == doctest::Approx(-4.4));
  CHECK(p.sensitivity(u) == phi);
}

}  // TEST_SUITE

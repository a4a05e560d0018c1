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

#include "dercoord/net.hpp"
#include "oracles/oracles.hpp"
#include "test_support.hpp"

using namespace dercoord;
using namespace dercoord::net;

namespace {

FeederModel bundled_feeder() { return load_feeder(testing_support::data_dir() / "feeders" / "ieee123_synthetic.feeder"); }

FeederModel chain_feeder() {
  return parse_feeder(
      "[buses]\n0 substation 0 0 1.0\n1 load 10 0\n2 load 10 0\n"
      "[lines]\n1 0 1 0.01 0.01 inf\n2 1 2 0.01 0.01 inf\n");
}

std::string error_of(const std::string& text) {
  try {
    parse_feeder(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("net") {

TEST_CASE("two-bus file gives N = 1 and L = 1") {
  const auto f = parse_feeder(testing_support::two_bus_text(0.01, 0.02, 100.0, false));
  CHECK(f.bus_count() == 1);
  CHECK(f.line_count() == 1);
  CHECK(f.der_count() == 0);
}

TEST_CASE("validation rejects malformed feeders") {
  const std::string head = "[buses]\n0 substation 0 0 1.0\n1 load 1 0\n2 load 1 0\n";
  CHECK(error_of(head + "[lines]\n1 0 1 0.01 0.01 inf\n2 1 2 0.01 0.01 inf\n3 2 0 0.01 0.01 inf\n")
            .find("not radial") != std::string::npos);
  CHECK(error_of("[buses]\n0 substation 0 0 1.0\n1 load 1 0\n2 load 1 0\n3 load 1 0\n"
                 "[lines]\n1 0 1 0.01 0.01 inf\n2 2 3 0.01 0.01 inf\n3 3 2 0.01 0.01 inf\n")
            .find("disconnected") != std::string::npos);
  CHECK(error_of(head + "[lines]\n1 0 1 0.01 0.01 0\n2 1 2 0.01 0.01 inf\n").find("f_max") != std::string::npos);
  CHECK(error_of(head + "[lines]\n1 0 1 -0.01 0.01 inf\n2 1 2 0.01 0.01 inf\n").find("r >= 0") !=
        std::string::npos);
  CHECK(error_of("[buses]\n0 substation 5 0 1.0\n1 load 1 0\n[lines]\n1 0 1 0.01 0.01 inf\n")
            .find("no load") != std::string::npos);
  CHECK(error_of("[buses]\n0 substation 0 0 1.0\n1 load 1 0\n[lines]\n1 0 1 0.01 0.01 inf\n[ders]\n1 0 100 0 0\n")
            .find("not der_") != std::string::npos);
  CHECK(error_of("[buses]\n0 substation 0 0 1.0\n1 der_unity_pf 1 0\n[lines]\n1 0 1 0.01 0.01 inf\n"
                 "[ders]\n1 0 100 0 0\n1 0 100 0 0\n")
            .find("duplicate DER") != std::string::npos);
  CHECK(error_of("[buses]\n0 substation 0 0 1.0\n1 der_unity_pf 1 0\n[lines]\n1 0 1 0.01 0.01 inf\n"
                 "[ders]\n1 100 0 0 0\n")
            .find("inverted") != std::string::npos);
  CHECK(error_of("[buses]\n0 substation 0 0 1.0\n1 der_unity_pf 1 0\n[lines]\n1 0 1 0.01 0.01 inf\n")
            .find("without a [ders] row") != std::string::npos);
  CHECK_THROWS_AS(parse_feeder("[buses]\n0 substation 0 0 1.0\n1 load abc 0\n"), ParseError);
  CHECK_THROWS_AS(parse_feeder("[nonsense]\n"), ParseError);
}

TEST_CASE("bundled feeder matches its published totals") {
  const auto f = bundled_feeder();
  CHECK(f.bus_count() == 122);
  CHECK(f.line_count() == 122);
  CHECK(f.nominal_p_load().sum() == doctest::Approx(3000.0).epsilon(1e-9));
  CHECK(f.nominal_q_load().sum() == doctest::Approx(1575.0).epsilon(1e-9));
  const std::vector<int> expected{19, 26, 38, 49, 56, 64, 78, 89, 99};
  CHECK(f.der_buses == expected);
  for (int i = 0; i < f.der_count(); ++i) {
    CHECK(f.der_p_min[i] == 0.0);
    CHECK(f.der_p_max[i] == 100.0);
  }
}

TEST_CASE("format and parse round-trip") {
  const auto f = bundled_feeder();
  const std::string text = format_feeder(f);
  const auto g = parse_feeder(text);
  CHECK(format_feeder(g) == text);
  CHECK(fnv1a(text) == fnv1a(format_feeder(g)));
}

TEST_CASE("incidence matrix examples") {
  const auto one = parse_feeder(testing_support::two_bus_text(0.01, 0.0, 1.0, false));
  const Matrix m1 = incidence_matrix(one);
  REQUIRE(m1.rows() == 1);
  CHECK(m1(0, 0) == -1.0);

  const Matrix m2 = incidence_matrix(chain_feeder());
  Matrix expected(2, 2);
  expected << -1, 1, 0, -1;
  CHECK(m2 == expected);
}

TEST_CASE("bundled incidence matrix is unimodular") {
  const auto f = bundled_feeder();
  const Matrix m = incidence_matrix(f);
  REQUIRE(m.rows() == 122);
  REQUIRE(m.cols() == 122);
  std::vector<std::vector<long long>> a(122, std::vector<long long>(122));
  for (int i = 0; i < 122; ++i) {
    for (int j = 0; j < 122; ++j) a[i][j] = static_cast<long long>(m(i, j));
  }
  CHECK(a == oracle::incidence(f));
  CHECK(std::llabs(oracle::bareiss_determinant(a)) == 1);
}

TEST_CASE("map_injections examples") {
  const auto two = parse_feeder(testing_support::two_bus_text(0.01, 0.0, 100.0));
  Vector pg(1), pd(1);
  pg << 50;
  pd << 100;
  CHECK(map_injections(two, pg, pd)[0] == -50.0);

  const auto f = bundled_feeder();
  const Vector pd123 = f.nominal_p_load();
  CHECK(map_injections(f, Vector::Zero(9), pd123).isApprox(-pd123));
  CHECK(map_injections(f, Vector::Constant(9, 100.0), pd123).sum() == doctest::Approx(-2100.0));
}

TEST_CASE("line_flows_approx examples") {
  const auto one = parse_feeder(testing_support::two_bus_text(0.01, 0.0, 1.0, false));
  Vector p1(1);
  p1 << -100;
  CHECK(line_flows_approx(one, p1)[0] == 100.0);

  Vector p2(2);
  p2 << -100, -50;
  const Vector f2 = line_flows_approx(chain_feeder(), p2);
  CHECK(f2[0] == 150.0);
  CHECK(f2[1] == 50.0);
}

TEST_CASE("random trees: unimodular incidence, M f = p, root conservation, subtree oracle") {
  std::mt19937_64 gen(20240601);
  for (int trial = 0; trial < 120; ++trial) {
    oracle::RandomTreeOptions opt;
    opt.buses = 2 + static_cast<int>(gen() % 60);
    opt.ders = 1 + static_cast<int>(gen() % 4);
    const auto f = oracle::random_tree(gen, opt);
    const auto m_int = oracle::incidence(f);
    CHECK(std::llabs(oracle::bareiss_determinant(m_int)) == 1);

    std::uniform_real_distribution<double> inj(-80.0, 80.0);
    Vector p(f.bus_count());
    for (int b = 0; b < f.bus_count(); ++b) p[b] = inj(gen);
    const Vector flows = line_flows_approx(f, p);
    const Matrix m = incidence_matrix(f);
    CHECK((m * flows - p).cwiseAbs().maxCoeff() < 1e-9);

    const auto brute = oracle::subtree_flows(f, std::vector<double>(p.data(), p.data() + p.size()));
    for (int l = 0; l < f.line_count(); ++l) CHECK(flows[l] == doctest::Approx(brute[l]).epsilon(1e-12));

    // Lines touching bus 0 carry, in total, minus the sum of all injections.
    double root = 0.0;
    for (int l = 0; l < f.line_count(); ++l) {
      if (f.lines[l].from_bus == 0) root += flows[l];
      if (f.lines[l].to_bus == 0) root -= flows[l];
    }
    CHECK(root == doctest::Approx(-p.sum()).epsilon(1e-12));
  }
}

TEST_CASE("single root line carries minus the total injection") {
  const auto f = bundled_feeder();
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> inj(-50.0, 50.0);
  Vector p(f.bus_count());
  for (int b = 0; b < f.bus_count(); ++b) p[b] = inj(gen);
  const Vector flows = line_flows_approx(f, p);
  CHECK(flows[0] == doctest::Approx(-p.sum()).epsilon(1e-12));
}

TEST_CASE("DER flow sensitivity matches the injection map") {
  const auto f = bundled_feeder();
  const Matrix s = der_flow_sensitivity(f);
  const Vector pd = f.nominal_p_load();
  Vector pg(9);
  for (int i = 0; i < 9; ++i) pg[i] = 10.0 * (i + 1);
  const Vector base = line_flows_approx(f, map_injections(f, Vector::Zero(9), pd));
  const Vector full = line_flows_approx(f, map_injections(f, pg, pd));
  CHECK((s * pg + base - full).cwiseAbs().maxCoeff() < 1e-9);
}

}  // TEST_SUITE

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

#include "dercoord/scenario.hpp"
#include "test_support.hpp"

using namespace dercoord;
using namespace dercoord::scenario;

TEST_SUITE("scenario") {

TEST_CASE("bundled scenarios load") {
  for (const char* name : {"case1", "case2", "case2_8der", "case3"}) {
    CAPTURE(name);
    const auto sc = testing_support::bundled(name);
    CHECK(sc.size() == (std::string(name) == "case2_8der" ? 8 : 9));
    CHECK(sc.box.contains(sc.u0));
    CHECK(sc.feeder);
  }
  const auto s8 = testing_support::bundled("case2_8der");
  CHECK(s8.feeder->der_index(99) < 0);
  const auto s3 = testing_support::bundled("case3");
  const int l = s3.feeder->find_line(55, 56);
  REQUIRE(l >= 0);
  CHECK(s3.flow_limits[l] == 40.0);
}

TEST_CASE("initial exchange of the bundled cases") {
  CHECK(testing_support::bundled("case1").plant->measure(Vector::Zero(9)) == doctest::Approx(-3110.0).epsilon(1e-6));
  CHECK(testing_support::bundled("case2").plant->measure(Vector::Zero(9)) == doctest::Approx(1000.0).epsilon(1e-6));
}

TEST_CASE("canonical text round-trips with a stable hash") {
  const auto cfg = testing_support::bundled_config("case3");
  const std::string text = format_scenario(cfg);
  const auto again = parse_scenario(text, cfg.base_dir);
  CHECK(format_scenario(again) == text);
  CHECK(config_hash(again) == config_hash(cfg));
  auto changed = cfg;
  changed.set_number("beta", 0.03);
  CHECK(config_hash(changed) != config_hash(cfg));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_scenario("nonsense_key = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario("beta = 0.02\nbeta = 0.03\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario("beta = abc\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario("plant = \"teapot\"\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario("u0 = [1, 2\n"), ParseError);
  try {
    parse_scenario("# comment\n\nbeta = abc\n");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("validation errors") {
  auto cfg = testing_support::bundled_config("case1");
  cfg.set_number("beta", 0.1);
  CHECK_THROWS_AS(build_scenario(cfg), ValidationError);
  cfg.set("allow_unsafe_beta", "true");
  CHECK_NOTHROW(build_scenario(cfg));

  auto bad = testing_support::bundled_config("case1");
  bad.set_number("slow_period", 0);
  CHECK_THROWS_AS(build_scenario(bad), ValidationError);
  bad = testing_support::bundled_config("case1");
  bad.set_number("u0", 150.0);
  CHECK_THROWS_AS(build_scenario(bad), ValidationError);
  bad = testing_support::bundled_config("case1");
  bad.set("u0", "[1, 2]");
  CHECK_THROWS_AS(build_scenario(bad), ValidationError);
  bad = testing_support::bundled_config("case1");
  bad.set("line_limit_from", "[1]");
  bad.set("line_limit_to", "[99]");
  bad.set("line_limit_kw", "[10]");
  CHECK_THROWS_AS(build_scenario(bad), ValidationError);
  CHECK_THROWS_AS(testing_support::bundled_config("case1").set_number("max_iters", 2.5), ValidationError);
}

TEST_CASE("broadcasting and per-DER overrides") {
  auto cfg = testing_support::bundled_config("case1");
  cfg.set("phi0", "1.05");
  cfg.set("u0", "[0, 10, 20, 30, 40, 50, 60, 70, 80]");
  const auto sc = build_scenario(cfg);
  CHECK(sc.phi0 == Vector::Constant(9, 1.05));
  CHECK(sc.u0[8] == 80.0);
}

TEST_CASE("removing DERs keeps the feeder valid") {
  const auto sc = testing_support::bundled("case1");
  const auto f = without_ders(*sc.feeder, {19, 99});
  CHECK(f.der_count() == 7);
  CHECK(f.buses[19].kind == net::BusKind::load);
  CHECK_THROWS_AS(without_ders(*sc.feeder, {20}), ValidationError);
}

}  // TEST_SUITE

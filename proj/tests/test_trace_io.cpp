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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dercoord/sim.hpp"
#include "dercoord/trace_io.hpp"
#include "test_support.hpp"

using namespace dercoord;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("trace_io") {

TEST_CASE("shortest decimal form round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -3110.0000000004, 1e-300, 6.02e23, 0.0}) {
    CHECK(std::stod(trace_io::shortest(v)) == v);
  }
  CHECK(trace_io::shortest(1.5) == "1.5");
}

TEST_CASE("export then import reproduces metrics bit for bit") {
  const auto sc = testing_support::bundled("case3");
  const auto t = sim::run_two_timescale(sc, sc.cfg.n_slow);
  const auto dir = std::filesystem::temp_directory_path() / "dercoord_trace_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "trace.csv";
  trace_io::export_trace(t, path);
  const auto back = trace_io::import_trace(path);
  CHECK(trace_io::format_trace(back) == slurp(path));
  REQUIRE(back.rows.size() == t.rows.size());
  const auto oracle = sim::oracle_series(*sc.plant, t);
  const auto m1 = sim::compute_metrics(t, oracle, sc.cfg.delta, sim::overload_model(sc));
  const auto m2 = sim::compute_metrics(back, oracle, sc.cfg.delta, sim::overload_model(sc));
  CHECK(m1.mae == m2.mae);
  CHECK(m1.terminal_e == m2.terminal_e);
  CHECK(m1.overload_duration == m2.overload_duration);
  CHECK(back.header.config_hash == t.header.config_hash);
  CHECK(back.rows.back().phase == sim::Phase::odcp);
  std::filesystem::remove_all(dir);
}

TEST_CASE("header and columns") {
  const auto sc = testing_support::bundled("case1");
  const std::string text = trace_io::format_trace(sim::run_estimation_phase(sc, 9));
  CHECK(text.rfind("# {\"format\":\"dercoord-trace/1\"", 0) == 0);
  const auto second = text.substr(text.find('\n') + 1, text.find('\n', text.find('\n') + 1) - text.find('\n') - 1);
  CHECK(second.rfind("k,u_1,", 0) == 0);
  CHECK(second.find(",y,e,phihat_1,") != std::string::npos);
  CHECK(second.find("w_9,alpha,phase") != std::string::npos);
}

TEST_CASE("empty trace is header only") {
  sim::SimTrace t;
  t.header.n = 2;
  const std::string text = trace_io::format_trace(t);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(trace_io::parse_trace(text).rows.empty());
}

TEST_CASE("reruns produce byte-identical files") {
  const auto sc = testing_support::bundled("case2");
  CHECK(trace_io::format_trace(sim::run_estimation_phase(sc, 7)) ==
        trace_io::format_trace(sim::run_estimation_phase(sc, 7)));
}

TEST_CASE("malformed traces are rejected") {
  CHECK_THROWS_AS(trace_io::parse_trace("k,u_1\n"), ParseError);
  sim::SimTrace t;
  t.header.n = 1;
  std::string text = trace_io::format_trace(t) + "0,1,2\n";
  CHECK_THROWS_AS(trace_io::parse_trace(text), ParseError);
}

}  // TEST_SUITE

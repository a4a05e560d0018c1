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


#include "dercoord/trace_io.hpp"

#include <charconv>
#include <limits>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dercoord::trace_io {

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

double read_double(const std::string& tok, int line) {
  if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (tok == "inf") return HUGE_VAL;
  if (tok == "-inf") return -HUGE_VAL;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("bad number '" + tok + "' in trace", line);
  }
  return v;
}

std::string columns(int n) {
  std::string s = "k";
  for (int i = 1; i <= n; ++i) s += ",u_" + std::to_string(i);
  s += ",y,e";
  for (int i = 1; i <= n; ++i) s += ",phihat_" + std::to_string(i);
  for (int i = 1; i <= n; ++i) s += ",w_" + std::to_string(i);
  return s + ",alpha,phase";
}

}  // namespace

std::string format_trace(const sim::SimTrace& trace) {
  const auto& h = trace.header;
  nlohmann::ordered_json head;
  head["format"] = h.format;
  head["config_hash"] = h.config_hash;
  head["feeder_hash"] = h.feeder_hash;
  head["seed"] = h.seed;
  head["n"] = h.n;
  head["rng"] = h.rng;
  head["termination"] = h.termination;
  head["equilibrium"] = h.equilibrium;
  head["plant_failed"] = h.plant_failed;
  if (h.plant_failed) head["failure"] = h.failure;

  std::string out = "# " + head.dump() + "\n" + columns(h.n) + "\n";
  for (const auto& row : trace.rows) {
    out += std::to_string(row.k);
    for (int i = 0; i < h.n; ++i) out += "," + shortest(row.u[i]);
    out += "," + shortest(row.y) + "," + shortest(row.e);
    for (int i = 0; i < h.n; ++i) out += "," + shortest(row.phi_hat[i]);
    for (int i = 0; i < h.n; ++i) out += row.w[i] != 0.0 ? ",1" : ",0";
    out += "," + shortest(row.alpha) + "," + sim::to_string(row.phase) + "\n";
  }
  return out;
}

void export_trace(const sim::SimTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file " + path.string());
  out << format_trace(trace);
  if (!out) throw std::runtime_error("failed writing trace file " + path.string());
}

sim::SimTrace parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  sim::SimTrace trace;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw ParseError("trace is missing its header line", 1);
  nlohmann::json head;
  try {
    head = nlohmann::json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad trace header: ") + e.what(), 1);
  }
  auto& h = trace.header;
  h.format = head.value("format", "");
  if (h.format != "dercoord-trace/1") throw ParseError("unsupported trace format '" + h.format + "'", 1);
  h.config_hash = head.value("config_hash", "");
  h.feeder_hash = head.value("feeder_hash", "");
  h.seed = head.value("seed", std::uint64_t{0});
  h.n = head.value("n", 0);
  h.rng = head.value("rng", "");
  h.termination = head.value("termination", "");
  h.equilibrium = head.value("equilibrium", "");
  h.plant_failed = head.value("plant_failed", false);
  h.failure = head.value("failure", "");
  const int n = h.n;
  if (!std::getline(in, line) || line != columns(n)) throw ParseError("unexpected trace columns", 2);
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != 3 * n + 5) throw ParseError("wrong number of trace columns", line_no);
    sim::TraceRow row;
    row.k = std::stol(cells[0]);
    row.u.resize(n);
    row.phi_hat.resize(n);
    row.w.resize(n);
    int c = 1;
    for (int i = 0; i < n; ++i) row.u[i] = read_double(cells[c++], line_no);
    row.y = read_double(cells[c++], line_no);
    row.e = read_double(cells[c++], line_no);
    for (int i = 0; i < n; ++i) row.phi_hat[i] = read_double(cells[c++], line_no);
    for (int i = 0; i < n; ++i) row.w[i] = read_double(cells[c++], line_no);
    row.alpha = read_double(cells[c++], line_no);
    const auto& phase = cells[c];
    if (phase == "est") {
      row.phase = sim::Phase::est;
    } else if (phase == "odcp") {
      row.phase = sim::Phase::odcp;
    } else {
      throw ParseError("unknown phase '" + phase + "'", line_no);
    }
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

sim::SimTrace import_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read trace file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_trace(text.str());
}

}  // namespace dercoord::trace_io

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


#include "dercoord/net.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace dercoord::net {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    out.push_back(tok);
  }
  return out;
}

double parse_double(const std::string& tok, int line_no) {
  double value = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && tok.front() == '+') {
    ++first;
  }
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("expected a number, got '" + tok + "'", line_no);
  }
  return value;
}

int parse_int(const std::string& tok, int line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("expected an integer, got '" + tok + "'", line_no);
  }
  return value;
}

BusKind parse_kind(const std::string& tok, int line_no) {
  if (tok == "substation") return BusKind::substation;
  if (tok == "load") return BusKind::load;
  if (tok == "der_unity_pf") return BusKind::der_unity_pf;
  if (tok == "der_const_voltage") return BusKind::der_const_voltage;
  throw ParseError("unknown bus kind '" + tok + "'", line_no);
}

const char* kind_name(BusKind kind) {
  switch (kind) {
    case BusKind::substation: return "substation";
    case BusKind::load: return "load";
    case BusKind::der_unity_pf: return "der_unity_pf";
    case BusKind::der_const_voltage: return "der_const_voltage";
  }
  return "load";
}

std::string shortest(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool is_der_kind(BusKind kind) {
  return kind == BusKind::der_unity_pf || kind == BusKind::der_const_voltage;
}

}  // namespace

Vector FeederModel::nominal_p_load() const {
  Vector p(bus_count());
  for (int b = 1; b <= bus_count(); ++b) p[b - 1] = buses[b].p_load;
  return p;
}

Vector FeederModel::nominal_q_load() const {
  Vector q(bus_count());
  for (int b = 1; b <= bus_count(); ++b) q[b - 1] = buses[b].q_load;
  return q;
}

int FeederModel::find_line(int a, int b) const {
  for (int l = 0; l < line_count(); ++l) {
    const auto& line = lines[l];
    if ((line.from_bus == a && line.to_bus == b) || (line.from_bus == b && line.to_bus == a)) {
      return l;
    }
  }
  return -1;
}

int FeederModel::der_index(int bus) const {
  auto it = std::find(der_buses.begin(), der_buses.end(), bus);
  return it == der_buses.end() ? -1 : static_cast<int>(it - der_buses.begin());
}

void validate_and_index(FeederModel& feeder) {
  auto& buses = feeder.buses;
  auto& lines = feeder.lines;
  if (buses.empty()) throw ValidationError("feeder has no buses");
  std::sort(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id != static_cast<int>(i)) {
      throw ValidationError("bus ids must be exactly 0..N without gaps or duplicates (at id " +
                            std::to_string(buses[i].id) + ")");
    }
  }
  const int n_bus = static_cast<int>(buses.size()) - 1;

  int substations = 0;
  for (const auto& bus : buses) {
    if (bus.kind == BusKind::substation) ++substations;
    if (bus.kind == BusKind::der_const_voltage || bus.kind == BusKind::substation) {
      if (!(bus.v_set > 0.5 && bus.v_set < 1.5)) {
        throw ValidationError("bus " + std::to_string(bus.id) + " voltage setpoint must lie in (0.5, 1.5) pu");
      }
    }
    if (!std::isfinite(bus.p_load) || !std::isfinite(bus.q_load)) {
      throw ValidationError("bus " + std::to_string(bus.id) + " has a non-finite load");
    }
  }
  if (substations != 1 || buses[0].kind != BusKind::substation) {
    throw ValidationError("exactly one substation is required and it must be bus 0");
  }
  if (buses[0].p_load != 0.0 || buses[0].q_load != 0.0) {
    throw ValidationError("the substation bus carries no load");
  }

  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.id != static_cast<int>(i) + 1) {
      throw ValidationError("line ids must be exactly 1..L without gaps or duplicates (at id " +
                            std::to_string(line.id) + ")");
    }
    if (line.from_bus == line.to_bus) {
      throw ValidationError("line " + std::to_string(line.id) + " connects a bus to itself");
    }
    if (line.from_bus < 0 || line.from_bus > n_bus || line.to_bus < 0 || line.to_bus > n_bus) {
      throw ValidationError("line " + std::to_string(line.id) + " references an unknown bus");
    }
    if (!(line.r >= 0.0) || !std::isfinite(line.x)) {
      throw ValidationError("line " + std::to_string(line.id) + " needs r >= 0 and finite x");
    }
    if (!(line.f_max > 0.0)) {
      throw ValidationError("line " + std::to_string(line.id) + " needs f_max > 0");
    }
  }
  if (static_cast<int>(lines.size()) != n_bus) {
    throw ValidationError("feeder is not radial: " + std::to_string(lines.size()) + " lines for " +
                          std::to_string(n_bus) + " non-substation buses");
  }

  // Walk the graph from the substation.
  std::vector<std::vector<std::pair<int, int>>> adjacency(n_bus + 1);
  for (int l = 0; l < n_bus; ++l) {
    adjacency[lines[l].from_bus].push_back({lines[l].to_bus, l});
    adjacency[lines[l].to_bus].push_back({lines[l].from_bus, l});
  }
  RadialTopology topo;
  topo.parent.assign(n_bus + 1, -1);
  topo.parent_line.assign(n_bus + 1, -1);
  topo.line_child.assign(n_bus, -1);
  topo.line_sign.assign(n_bus, 0);
  topo.children.assign(n_bus + 1, {});
  std::vector<char> seen(n_bus + 1, 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int bus = queue[head];
    for (auto [next, l] : adjacency[bus]) {
      if (l == topo.parent_line[bus]) continue;
      if (seen[next]) {
        throw ValidationError("feeder is not radial: line " + std::to_string(lines[l].id) + " closes a loop");
      }
      seen[next] = 1;
      topo.parent[next] = bus;
      topo.parent_line[next] = l;
      topo.line_child[l] = next;
      topo.line_sign[l] = lines[l].from_bus == bus ? 1 : -1;
      topo.children[bus].push_back(next);
      topo.order.push_back(next);
      queue.push_back(next);
    }
  }
  if (static_cast<int>(topo.order.size()) != n_bus) {
    for (int b = 0; b <= n_bus; ++b) {
      if (!seen[b]) throw ValidationError("bus " + std::to_string(b) + " is disconnected from the substation");
    }
  }

  const auto n_der = feeder.der_buses.size();
  if (static_cast<std::size_t>(feeder.der_p_min.size()) != n_der ||
      static_cast<std::size_t>(feeder.der_p_max.size()) != n_der ||
      static_cast<std::size_t>(feeder.der_q_min.size()) != n_der ||
      static_cast<std::size_t>(feeder.der_q_max.size()) != n_der) {
    throw ValidationError("DER limit vectors must match the number of DERs");
  }
  std::unordered_set<int> der_seen;
  for (std::size_t i = 0; i < n_der; ++i) {
    const int bus = feeder.der_buses[i];
    if (bus <= 0 || bus > n_bus) {
      throw ValidationError("DER bus " + std::to_string(bus) + " must be an existing non-substation bus");
    }
    if (!der_seen.insert(bus).second) {
      throw ValidationError("duplicate DER on bus " + std::to_string(bus));
    }
    if (!is_der_kind(buses[bus].kind)) {
      throw ValidationError("bus " + std::to_string(bus) + " hosts a DER but its kind is not der_*");
    }
    if (!(feeder.der_p_min[i] <= feeder.der_p_max[i]) || !(feeder.der_q_min[i] <= feeder.der_q_max[i])) {
      throw ValidationError("DER on bus " + std::to_string(bus) + " has inverted limits");
    }
  }
  for (const auto& bus : buses) {
    if (is_der_kind(bus.kind) && !der_seen.count(bus.id)) {
      throw ValidationError("bus " + std::to_string(bus.id) + " is a DER bus without a [ders] row");
    }
  }
  if (!(feeder.s_base_kva > 0.0) || !(feeder.v_base_kv > 0.0)) {
    throw ValidationError("per-unit bases must be positive");
  }
  feeder.topology = std::move(topo);
}

FeederModel parse_feeder(const std::string& text) {
  FeederModel feeder;
  std::vector<double> p_min, p_max, q_min, q_max;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    auto tokens = split_ws(raw);
    if (tokens.empty()) continue;
    if (tokens[0].front() == '[') {
      if (tokens.size() != 1 || tokens[0].back() != ']') throw ParseError("bad section header", line_no);
      section = tokens[0].substr(1, tokens[0].size() - 2);
      if (section != "base" && section != "buses" && section != "lines" && section != "ders") {
        throw ParseError("unknown section [" + section + "]", line_no);
      }
      continue;
    }
    if (section == "base") {
      if (tokens.size() != 2) throw ParseError("expected 'key value'", line_no);
      if (tokens[0] == "s_base_kva") {
        feeder.s_base_kva = parse_double(tokens[1], line_no);
      } else if (tokens[0] == "v_base_kv") {
        feeder.v_base_kv = parse_double(tokens[1], line_no);
      } else {
        throw ParseError("unknown base key '" + tokens[0] + "'", line_no);
      }
    } else if (section == "buses") {
      if (tokens.size() != 4 && tokens.size() != 5) {
        throw ParseError("bus rows are 'id kind p_load_kw q_load_kvar [v_set_pu]'", line_no);
      }
      Bus bus;
      bus.id = parse_int(tokens[0], line_no);
      bus.kind = parse_kind(tokens[1], line_no);
      bus.p_load = parse_double(tokens[2], line_no);
      bus.q_load = parse_double(tokens[3], line_no);
      if (tokens.size() == 5) {
        bus.v_set = parse_double(tokens[4], line_no);
      } else if (bus.kind == BusKind::der_const_voltage) {
        throw ParseError("constant-voltage DER buses need a voltage setpoint", line_no);
      }
      feeder.buses.push_back(bus);
    } else if (section == "lines") {
      if (tokens.size() != 6) throw ParseError("line rows are 'id from to r_pu x_pu f_max_kw'", line_no);
      Line line;
      line.id = parse_int(tokens[0], line_no);
      line.from_bus = parse_int(tokens[1], line_no);
      line.to_bus = parse_int(tokens[2], line_no);
      line.r = parse_double(tokens[3], line_no);
      line.x = parse_double(tokens[4], line_no);
      line.f_max = parse_double(tokens[5], line_no);
      feeder.lines.push_back(line);
    } else if (section == "ders") {
      if (tokens.size() != 5) {
        throw ParseError("DER rows are 'bus p_min_kw p_max_kw q_min_kvar q_max_kvar'", line_no);
      }
      feeder.der_buses.push_back(parse_int(tokens[0], line_no));
      p_min.push_back(parse_double(tokens[1], line_no));
      p_max.push_back(parse_double(tokens[2], line_no));
      q_min.push_back(parse_double(tokens[3], line_no));
      q_max.push_back(parse_double(tokens[4], line_no));
    } else {
      throw ParseError("data outside of any section", line_no);
    }
  }
  auto to_vector = [](const std::vector<double>& v) {
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  feeder.der_p_min = to_vector(p_min);
  feeder.der_p_max = to_vector(p_max);
  feeder.der_q_min = to_vector(q_min);
  feeder.der_q_max = to_vector(q_max);
  validate_and_index(feeder);
  return feeder;
}

FeederModel load_feeder(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read feeder file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_feeder(text.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_feeder(const FeederModel& feeder) {
  std::ostringstream out;
  out << "[base]\ns_base_kva " << shortest(feeder.s_base_kva) << "\nv_base_kv " << shortest(feeder.v_base_kv)
      << "\n\n[buses]\n";
  for (const auto& bus : feeder.buses) {
    out << bus.id << ' ' << kind_name(bus.kind) << ' ' << shortest(bus.p_load) << ' ' << shortest(bus.q_load);
    if (bus.kind == BusKind::substation || bus.kind == BusKind::der_const_voltage) out << ' ' << shortest(bus.v_set);
    out << '\n';
  }
  out << "\n[lines]\n";
  for (const auto& line : feeder.lines) {
    out << line.id << ' ' << line.from_bus << ' ' << line.to_bus << ' ' << shortest(line.r) << ' '
        << shortest(line.x) << ' ' << shortest(line.f_max) << '\n';
  }
  out << "\n[ders]\n";
  for (int i = 0; i < feeder.der_count(); ++i) {
    out << feeder.der_buses[i] << ' ' << shortest(feeder.der_p_min[i]) << ' ' << shortest(feeder.der_p_max[i])
        << ' ' << shortest(feeder.der_q_min[i]) << ' ' << shortest(feeder.der_q_max[i]) << '\n';
  }
  return out.str();
}

Matrix incidence_matrix(const FeederModel& feeder) {
  const int n_bus = feeder.bus_count();
  Matrix m = Matrix::Zero(n_bus, feeder.line_count());
  for (int l = 0; l < feeder.line_count(); ++l) {
    const auto& line = feeder.lines[l];
    if (line.from_bus > 0) m(line.from_bus - 1, l) = 1.0;
    if (line.to_bus > 0) m(line.to_bus - 1, l) = -1.0;
  }
  return m;
}

Vector map_injections(const FeederModel& feeder, const Vector& p_g, const Vector& p_d) {
  if (p_g.size() != feeder.der_count() || p_d.size() != feeder.bus_count()) {
    throw std::invalid_argument("map_injections: expected p_g of length " + std::to_string(feeder.der_count()) +
                                " and p_d of length " + std::to_string(feeder.bus_count()));
  }
  Vector p = -p_d;
  for (int i = 0; i < feeder.der_count(); ++i) p[feeder.der_buses[i] - 1] += p_g[i];
  return p;
}

Vector line_flows_approx(const FeederModel& feeder, const Vector& p) {
  if (p.size() != feeder.bus_count()) {
    throw std::invalid_argument("line_flows_approx: injection vector has wrong length");
  }
  const auto& topo = feeder.topology;
  // subtree[b] accumulates the net injection of every bus at or below b.
  Vector subtree(feeder.bus_count() + 1);
  subtree[0] = 0.0;
  subtree.tail(feeder.bus_count()) = p;
  for (auto it = topo.order.rbegin(); it != topo.order.rend(); ++it) {
    const int parent = topo.parent[*it];
    if (parent > 0) subtree[parent] += subtree[*it];
  }
  Vector f(feeder.line_count());
  for (int l = 0; l < feeder.line_count(); ++l) {
    f[l] = -topo.line_sign[l] * subtree[topo.line_child[l]];
  }
  return f;
}

Matrix der_flow_sensitivity(const FeederModel& feeder) {
  Matrix t(feeder.line_count(), feeder.der_count());
  const Vector no_load = Vector::Zero(feeder.bus_count());
  for (int i = 0; i < feeder.der_count(); ++i) {
    t.col(i) = line_flows_approx(feeder, map_injections(feeder, Vector::Unit(feeder.der_count(), i), no_load));
  }
  return t;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace dercoord::net

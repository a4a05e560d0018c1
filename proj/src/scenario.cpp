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


#include "dercoord/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dercoord::scenario {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Removes a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

double to_double(const std::string& raw, int line) {
  std::string tok = trim(raw);
  if (tok == "inf" || tok == "+inf") return HUGE_VAL;
  if (tok == "-inf") return -HUGE_VAL;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("expected a number, got '" + tok + "'", line);
  }
  return v;
}

long to_long(const std::string& raw, int line) {
  const std::string tok = trim(raw);
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("expected an integer, got '" + tok + "'", line);
  }
  return v;
}

std::string to_string_value(const std::string& raw, int line) {
  const std::string tok = trim(raw);
  if (tok.size() < 2 || tok.front() != '"' || tok.back() != '"') {
    throw ParseError("expected a quoted string, got '" + tok + "'", line);
  }
  return tok.substr(1, tok.size() - 2);
}

bool to_bool(const std::string& raw, int line) {
  const std::string tok = trim(raw);
  if (tok == "true") return true;
  if (tok == "false") return false;
  throw ParseError("expected true or false, got '" + tok + "'", line);
}

std::vector<std::string> array_items(const std::string& raw, int line) {
  const std::string tok = trim(raw);
  if (tok.size() < 2 || tok.front() != '[' || tok.back() != ']') {
    throw ParseError("expected an array, got '" + tok + "'", line);
  }
  std::vector<std::string> items;
  const std::string body = trim(tok.substr(1, tok.size() - 2));
  if (body.empty()) return items;
  std::stringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ParseError("empty array element", line);
    items.push_back(item);
  }
  return items;
}

std::vector<double> to_doubles(const std::string& raw, int line) {
  std::vector<double> out;
  for (const auto& item : array_items(raw, line)) out.push_back(to_double(item, line));
  return out;
}

std::vector<int> to_ints(const std::string& raw, int line) {
  std::vector<int> out;
  for (const auto& item : array_items(raw, line)) out.push_back(static_cast<int>(to_long(item, line)));
  return out;
}

// Scalar or array.
std::vector<double> to_broadcast(const std::string& raw, int line) {
  if (!trim(raw).empty() && trim(raw).front() == '[') return to_doubles(raw, line);
  return {to_double(raw, line)};
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  // Keep a decimal point so floats read back as floats.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <typename T>
std::string list(const std::vector<T>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      s += num(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s + "]";
}

Vector broadcast(const std::vector<double>& v, int n, const char* what) {
  if (v.size() == 1) return Vector::Constant(n, v[0]);
  if (static_cast<int>(v.size()) != n) {
    throw ValidationError(std::string(what) + " needs 1 or " + std::to_string(n) + " entries");
  }
  return Eigen::Map<const Vector>(v.data(), n);
}

}  // namespace

std::filesystem::path ScenarioConfig::feeder_path() const {
  std::filesystem::path p(feeder);
  return p.is_absolute() ? p : base_dir / p;
}

void ScenarioConfig::set(const std::string& key, const std::string& value, int line) {
  if (key == "name") {
    name = to_string_value(value, line);
  } else if (key == "plant") {
    const auto v = to_string_value(value, line);
    if (v == "feeder") {
      plant = PlantKind::feeder;
    } else if (v == "linear") {
      plant = PlantKind::linear;
    } else {
      throw ParseError("plant must be \"feeder\" or \"linear\"", line);
    }
  } else if (key == "feeder") {
    feeder = to_string_value(value, line);
  } else if (key == "load_scale") {
    load_scale = to_double(value, line);
  } else if (key == "uncontrollable_bus") {
    uncontrollable_bus = to_ints(value, line);
  } else if (key == "uncontrollable_kw") {
    uncontrollable_kw = to_doubles(value, line);
  } else if (key == "exclude_der_buses") {
    exclude_der_buses = to_ints(value, line);
  } else if (key == "line_limit_from") {
    line_limit_from = to_ints(value, line);
  } else if (key == "line_limit_to") {
    line_limit_to = to_ints(value, line);
  } else if (key == "line_limit_kw") {
    line_limit_kw = to_doubles(value, line);
  } else if (key == "linear_phi") {
    linear_phi = to_doubles(value, line);
  } else if (key == "linear_offset") {
    linear_offset = to_double(value, line);
  } else if (key == "u_min") {
    u_min = to_broadcast(value, line);
  } else if (key == "u_max") {
    u_max = to_broadcast(value, line);
  } else if (key == "y_star") {
    y_star = to_double(value, line);
  } else if (key == "b_lo") {
    b_lo = to_double(value, line);
  } else if (key == "b_hi") {
    b_hi = to_double(value, line);
  } else if (key == "beta") {
    beta = to_double(value, line);
  } else if (key == "epsilon") {
    epsilon = to_double(value, line);
  } else if (key == "delta") {
    delta = to_double(value, line);
  } else if (key == "max_iters") {
    max_iters = to_long(value, line);
  } else if (key == "phi0") {
    phi0 = to_broadcast(value, line);
  } else if (key == "u0") {
    u0 = to_broadcast(value, line);
  } else if (key == "seed") {
    const long s = to_long(value, line);
    if (s < 0) throw ParseError("seed must be non-negative", line);
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "slow_period") {
    slow_period = to_long(value, line);
  } else if (key == "n_slow") {
    n_slow = to_long(value, line);
  } else if (key == "fast_dt_ms") {
    fast_dt_ms = to_double(value, line);
  } else if (key == "alpha_mode") {
    const auto v = to_string_value(value, line);
    if (v == "adaptive") {
      alpha_mode = estimator::AlphaMode::adaptive;
    } else if (v == "constant") {
      alpha_mode = estimator::AlphaMode::constant;
    } else {
      throw ParseError("alpha_mode must be \"adaptive\" or \"constant\"", line);
    }
  } else if (key == "alpha_const") {
    alpha_const = to_double(value, line);
  } else if (key == "alpha_gain") {
    alpha_gain = to_double(value, line);
  } else if (key == "alpha_guard") {
    alpha_guard = to_double(value, line);
  } else if (key == "randomized") {
    randomized = to_bool(value, line);
  } else if (key == "stall_window") {
    stall_window = to_long(value, line);
  } else if (key == "allow_unsafe_beta") {
    allow_unsafe_beta = to_bool(value, line);
  } else if (key == "fd_step_kw") {
    fd_step_kw = to_double(value, line);
  } else if (key == "cost_quadratic") {
    cost_quadratic = to_doubles(value, line);
  } else if (key == "cost_linear") {
    cost_linear = to_doubles(value, line);
  } else {
    throw ParseError("unknown key '" + key + "'", line);
  }
}

void ScenarioConfig::set_number(const std::string& key, double value) {
  static const char* integral[] = {"max_iters", "seed", "slow_period", "n_slow", "stall_window"};
  for (const char* k : integral) {
    if (key == k) {
      if (value != std::floor(value)) throw ValidationError(key + " must be an integer");
      set(key, std::to_string(static_cast<long>(value)));
      return;
    }
  }
  if (key == "name" || key == "plant" || key == "feeder" || key == "alpha_mode" || key == "randomized" ||
      key == "allow_unsafe_beta") {
    throw ValidationError("'" + key + "' is not a numeric parameter");
  }
  set(key, num(value));
}

ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  std::vector<std::string> seen;
  while (std::getline(in, raw)) {
    ++line;
    const std::string body = trim(strip_comment(raw));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ParseError("missing key", line);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) throw ParseError("duplicate key '" + key + "'", line);
    seen.push_back(key);
    cfg.set(key, body.substr(eq + 1), line);
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read scenario file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_scenario(text.str(), path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_scenario(const ScenarioConfig& c) {
  std::ostringstream o;
  auto str = [&](const char* k, const std::string& v) { o << k << " = \"" << v << "\"\n"; };
  auto dbl = [&](const char* k, double v) { o << k << " = " << num(v) << '\n'; };
  auto lng = [&](const char* k, long v) { o << k << " = " << v << '\n'; };
  auto bln = [&](const char* k, bool v) { o << k << " = " << (v ? "true" : "false") << '\n'; };
  auto arr = [&](const char* k, const auto& v) {
    if (!v.empty()) o << k << " = " << list(v) << '\n';
  };
  str("name", c.name);
  str("plant", c.plant == PlantKind::feeder ? "feeder" : "linear");
  if (!c.feeder.empty()) str("feeder", c.feeder);
  dbl("load_scale", c.load_scale);
  arr("uncontrollable_bus", c.uncontrollable_bus);
  arr("uncontrollable_kw", c.uncontrollable_kw);
  arr("exclude_der_buses", c.exclude_der_buses);
  arr("line_limit_from", c.line_limit_from);
  arr("line_limit_to", c.line_limit_to);
  arr("line_limit_kw", c.line_limit_kw);
  arr("linear_phi", c.linear_phi);
  dbl("linear_offset", c.linear_offset);
  arr("u_min", c.u_min);
  arr("u_max", c.u_max);
  dbl("y_star", c.y_star);
  dbl("b_lo", c.b_lo);
  dbl("b_hi", c.b_hi);
  dbl("beta", c.beta);
  dbl("epsilon", c.epsilon);
  dbl("delta", c.delta);
  lng("max_iters", c.max_iters);
  o << "phi0 = " << list(c.phi0) << '\n';
  o << "u0 = " << list(c.u0) << '\n';
  o << "seed = " << c.seed << '\n';
  lng("slow_period", c.slow_period);
  lng("n_slow", c.n_slow);
  dbl("fast_dt_ms", c.fast_dt_ms);
  str("alpha_mode", c.alpha_mode == estimator::AlphaMode::adaptive ? "adaptive" : "constant");
  dbl("alpha_const", c.alpha_const);
  dbl("alpha_gain", c.alpha_gain);
  dbl("alpha_guard", c.alpha_guard);
  bln("randomized", c.randomized);
  lng("stall_window", c.stall_window);
  bln("allow_unsafe_beta", c.allow_unsafe_beta);
  dbl("fd_step_kw", c.fd_step_kw);
  arr("cost_quadratic", c.cost_quadratic);
  arr("cost_linear", c.cost_linear);
  return o.str();
}

std::uint64_t config_hash(const ScenarioConfig& cfg) { return net::fnv1a(format_scenario(cfg)); }

net::FeederModel without_ders(const net::FeederModel& feeder, const std::vector<int>& buses) {
  net::FeederModel out = feeder;
  for (int bus : buses) {
    const int idx = out.der_index(bus);
    if (idx < 0) throw ValidationError("cannot exclude bus " + std::to_string(bus) + ": it hosts no DER");
    const auto keep = [&](const Vector& v) {
      Vector r(v.size() - 1);
      r << v.head(idx), v.tail(v.size() - idx - 1);
      return r;
    };
    out.der_p_min = keep(out.der_p_min);
    out.der_p_max = keep(out.der_p_max);
    out.der_q_min = keep(out.der_q_min);
    out.der_q_max = keep(out.der_q_max);
    out.der_buses.erase(out.der_buses.begin() + idx);
    out.buses[bus].kind = net::BusKind::load;
  }
  net::validate_and_index(out);
  return out;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  Scenario sc;
  sc.cfg = cfg;
  if (cfg.slow_period < 1) throw ValidationError("slow_period must be at least 1");
  if (cfg.n_slow < 0) throw ValidationError("n_slow must be non-negative");
  if (cfg.stall_window < 1) throw ValidationError("stall_window must be at least 1");
  if (!(cfg.fd_step_kw > 0.0)) throw ValidationError("fd_step_kw must be positive");
  if (!(cfg.load_scale >= 0.0) || !std::isfinite(cfg.load_scale)) throw ValidationError("load_scale must be >= 0");
  if (!std::isfinite(cfg.y_star)) throw ValidationError("y_star must be finite");

  int n = 0;
  if (cfg.plant == PlantKind::feeder) {
    if (cfg.feeder.empty()) throw ValidationError("scenario names no feeder file");
    net::FeederModel feeder = net::load_feeder(cfg.feeder_path());
    if (!cfg.exclude_der_buses.empty()) feeder = without_ders(feeder, cfg.exclude_der_buses);
    if (cfg.line_limit_from.size() != cfg.line_limit_to.size() ||
        cfg.line_limit_from.size() != cfg.line_limit_kw.size()) {
      throw ValidationError("line_limit_from, line_limit_to and line_limit_kw must have equal lengths");
    }
    for (std::size_t i = 0; i < cfg.line_limit_from.size(); ++i) {
      const int l = feeder.find_line(cfg.line_limit_from[i], cfg.line_limit_to[i]);
      if (l < 0) {
        throw ValidationError("no line joins buses " + std::to_string(cfg.line_limit_from[i]) + " and " +
                              std::to_string(cfg.line_limit_to[i]));
      }
      if (!(cfg.line_limit_kw[i] > 0.0)) throw ValidationError("line limits must be positive");
      feeder.lines[l].f_max = cfg.line_limit_kw[i];
    }
    n = feeder.der_count();
    if (n == 0) throw ValidationError("feeder has no DERs to control");
    if (cfg.uncontrollable_bus.size() != cfg.uncontrollable_kw.size()) {
      throw ValidationError("uncontrollable_bus and uncontrollable_kw must have equal lengths");
    }
    sc.loads = plant::LoadProfile::nominal(feeder);
    sc.loads.p_d *= cfg.load_scale;
    sc.loads.q_d *= cfg.load_scale;
    for (std::size_t i = 0; i < cfg.uncontrollable_bus.size(); ++i) {
      const int bus = cfg.uncontrollable_bus[i];
      if (bus < 1 || bus > feeder.bus_count()) throw ValidationError("uncontrollable bus out of range");
      sc.loads.p_d[bus - 1] -= cfg.uncontrollable_kw[i];
    }
    sc.flow_limits.resize(feeder.line_count());
    for (int l = 0; l < feeder.line_count(); ++l) sc.flow_limits[l] = feeder.lines[l].f_max;
    sc.box = feeder.der_box();
    sc.feeder_hash = net::fnv1a(net::format_feeder(feeder));
    sc.feeder = std::make_shared<const net::FeederModel>(std::move(feeder));
    sc.plant = std::make_shared<const plant::FeederPlant>(sc.feeder, sc.loads, cfg.fd_step_kw);
  } else {
    n = static_cast<int>(cfg.linear_phi.size());
    if (n == 0) throw ValidationError("linear plant needs linear_phi");
    const Vector phi = Eigen::Map<const Vector>(cfg.linear_phi.data(), n);
    if (!(phi.array() > 0.0).all()) throw ValidationError("linear plant sensitivities must be positive");
    if (cfg.u_min.empty() || cfg.u_max.empty()) throw ValidationError("linear plant needs u_min and u_max");
    sc.box = {broadcast(cfg.u_min, n, "u_min"), broadcast(cfg.u_max, n, "u_max")};
    if (!(sc.box.lower.array() <= sc.box.upper.array()).all()) throw ValidationError("u_min exceeds u_max");
    sc.feeder_hash = net::fnv1a("linear " + list(cfg.linear_phi) + " " + num(cfg.linear_offset) + " " +
                                 list(cfg.u_min) + " " + list(cfg.u_max));
    sc.plant = std::make_shared<const plant::LinearPlant>(phi, cfg.linear_offset, sc.box);
  }

  sc.u0 = broadcast(cfg.u0, n, "u0");
  if (!sc.box.contains(sc.u0)) throw ValidationError("u0 lies outside the DER limits");
  sc.phi0 = broadcast(cfg.phi0, n, "phi0");
  sc.estimator.b_lo = cfg.b_lo;
  sc.estimator.b_hi = cfg.b_hi;
  sc.estimator.alpha_mode = cfg.alpha_mode;
  sc.estimator.alpha_const = cfg.alpha_const;
  sc.estimator.alpha_gain = cfg.alpha_gain;
  sc.estimator.alpha_guard = cfg.alpha_guard;
  sc.estimator.validate();
  estimator::SensitivityEstimate::make(sc.phi0, cfg.b_lo, cfg.b_hi);

  sc.controller.beta = cfg.beta;
  sc.controller.epsilon = cfg.epsilon;
  sc.controller.randomized = cfg.randomized;
  sc.controller.delta = cfg.delta;
  sc.controller.max_iters = cfg.max_iters;
  sc.controller.validate(n, cfg.b_lo, cfg.b_hi, cfg.allow_unsafe_beta);

  sc.cost = odcp::Cost::least_change(n);
  if (!cfg.cost_quadratic.empty()) sc.cost.quadratic = broadcast(cfg.cost_quadratic, n, "cost_quadratic");
  if (!cfg.cost_linear.empty()) sc.cost.linear = broadcast(cfg.cost_linear, n, "cost_linear");
  if (!(sc.cost.quadratic.array() > 0.0).all()) throw ValidationError("cost_quadratic entries must be positive");
  sc.config_hash = config_hash(cfg);
  return sc;
}

Scenario load(const std::filesystem::path& path) { return build_scenario(load_scenario(path)); }

}  // namespace dercoord::scenario

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


#include "dercoord/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "dercoord/parallel.hpp"
#include "dercoord/rng.hpp"

namespace dercoord::verify {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::skipped: return "skipped";
  }
  return "fail";
}

void StatTestReport::decide() {
  if (verdict == Verdict::skipped || verdict == Verdict::inconclusive) return;
  verdict = pass_fraction >= threshold ? Verdict::pass : Verdict::fail;
}

std::string StatTestReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["n_trials"] = n_trials;
  j["pass_fraction"] = pass_fraction;
  j["threshold"] = threshold;
  j["confidence"] = confidence;
  j["verdict"] = to_string(verdict);
  if (!note.empty()) j["note"] = note;
  j["reproduce"] = reproduce;
  nlohmann::ordered_json s = nlohmann::ordered_json::object();
  for (const auto& [k, v] : stats) {
    if (std::isfinite(v)) {
      s[k] = v;
    } else {
      s[k] = std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
  }
  j["stats"] = s;
  return j.dump();
}

namespace {

void require_unit_open(double x) {
  if (!(x > 0.0 && x < 1.0)) throw ValidationError("x must lie in (0, 1)");
}

std::string seed_arg(std::uint64_t seed) { return " --seed " + std::to_string(seed); }

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Number of x-draws among k fair draws; every bit of each word is used.
long count_x_draws(Rng& rng, long k) {
  long count = 0;
  long left = k;
  while (left >= 64) {
    count += std::popcount(rng.next_u64());
    left -= 64;
  }
  if (left > 0) count += std::popcount(rng.next_u64() >> (64 - left));
  return count;
}

template <bool Parallel, typename Body>
void for_each_trial(long n, Body&& body) {
  if constexpr (Parallel) {
    parallel_for(n, body);
  } else {
    serial_for(n, body);
  }
}

template <bool Parallel>
StatTestReport product_impl(std::uint64_t seed, double x, long k_max, long n_trials, double threshold,
                            double y_tol) {
  require_unit_open(x);
  if (k_max < 1 || n_trials < 1) throw ValidationError("k_max and n_trials must be positive");
  std::vector<double> log_y(n_trials);
  for_each_trial<Parallel>(n_trials, [&](std::ptrdiff_t t) {
    Rng rng(seed, RngStream::trial, static_cast<std::uint64_t>(t));
    log_y[t] = static_cast<double>(count_x_draws(rng, k_max)) * std::log(x);
  });
  StatTestReport r;
  r.name = "product_convergence";
  r.n_trials = n_trials;
  r.threshold = threshold;
  const double limit = std::log(y_tol);
  const long passed = std::count_if(log_y.begin(), log_y.end(), [&](double v) { return v < limit; });
  r.pass_fraction = static_cast<double>(passed) / static_cast<double>(n_trials);
  // Test power: the number of x-draws needed to get below y_tol must sit
  // well inside the binomial(k_max, 1/2) bulk.
  const double needed = limit / std::log(x);
  const double mean = 0.5 * static_cast<double>(k_max);
  const double sd = 0.5 * std::sqrt(static_cast<double>(k_max));
  r.stats = {{"x", x},
             {"k_max", static_cast<double>(k_max)},
             {"y_tol", y_tol},
             {"draws_needed", needed},
             {"expected_log_y", mean * std::log(x)},
             {"mean_log_y", std::accumulate(log_y.begin(), log_y.end(), 0.0) / static_cast<double>(n_trials)}};
  r.confidence = "binomial(k_max, 0.5) count of contracting draws; power requires mean - 3 sd above the count needed";
  if (mean - 3.0 * sd < needed) {
    r.verdict = Verdict::inconclusive;
    r.note = "k_max too small for this x: the product is not expected to reach y_tol (power warning, not a "
             "counterexample)";
  }
  r.decide();
  return r;
}

template <bool Parallel>
StatTestReport bounded_impl(std::uint64_t seed, double x, long k_max, long n_trials, double threshold) {
  require_unit_open(x);
  if (k_max < 2 || n_trials < 1) throw ValidationError("k_max must be >= 2 and n_trials positive");
  std::vector<double> z(n_trials), bound(n_trials);
  std::vector<char> settled(n_trials);
  for_each_trial<Parallel>(n_trials, [&](std::ptrdiff_t t) {
    Rng rng(seed, RngStream::trial, static_cast<std::uint64_t>(t));
    double y = 1.0, head = 0.0, tail = 0.0;
    long run = 0, longest = 0;
    const long half = k_max / 2;
    std::uint64_t word = 0;
    int bits = 0;
    for (long k = 1; k <= k_max; ++k) {
      if (bits == 0) {
        word = rng.next_u64();
        bits = 64;
      }
      const bool contract = (word >> 63) != 0;
      word <<= 1;
      --bits;
      if (contract) {
        y *= x;
        run = 0;
      } else {
        longest = std::max(longest, ++run);
      }
      (k <= half ? head : tail) += y;
    }
    z[t] = head + tail;
    bound[t] = static_cast<double>(longest + 1) / (1.0 - x);
    settled[t] = tail < 1e-6 * head;
  });
  StatTestReport r;
  r.name = "bounded_sum";
  r.n_trials = n_trials;
  r.threshold = threshold;
  long ok = 0, bound_violations = 0;
  for (long t = 0; t < n_trials; ++t) {
    const bool within = z[t] <= bound[t] * (1.0 + 1e-12);
    if (!within) ++bound_violations;
    if (within && settled[t]) ++ok;
  }
  r.pass_fraction = static_cast<double>(ok) / static_cast<double>(n_trials);
  const double m = 0.5 * (1.0 + x);
  const double expected = m * (1.0 - std::pow(m, static_cast<double>(k_max))) / (1.0 - m);
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n_trials);
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= static_cast<double>(std::max<long>(1, n_trials - 1));
  const double se = std::sqrt(var / static_cast<double>(n_trials));
  r.stats = {{"x", x},
             {"k_max", static_cast<double>(k_max)},
             {"mean_z", mean},
             {"expected_z", expected},
             {"std_error", se},
             {"bound_violations", static_cast<double>(bound_violations)},
             {"max_z", *std::max_element(z.begin(), z.end())}};
  r.confidence = "tail after k_max/2 below 1e-6 of the head sum; path bound checked on every trial; mean within 5 "
                 "standard errors of the geometric series";
  r.decide();
  if (bound_violations > 0) {
    r.verdict = Verdict::fail;
    r.note = "path bound (K+1)/(1-x) violated";
  } else if (std::abs(mean - expected) > 5.0 * se + 1e-12) {
    r.verdict = Verdict::fail;
    r.note = "Monte-Carlo mean disagrees with the geometric series";
  }
  return r;
}

bool interior(const Vector& u, const Box& box, double tol) {
  return ((u - box.lower).array() > tol).all() && ((box.upper - u).array() > tol).all();
}

scenario::ScenarioConfig linear_config(const Vector& phi, double offset, double lo, double hi) {
  scenario::ScenarioConfig c;
  c.name = "linear";
  c.plant = scenario::PlantKind::linear;
  c.linear_phi.assign(phi.data(), phi.data() + phi.size());
  c.linear_offset = offset;
  c.u_min = {lo};
  c.u_max = {hi};
  c.allow_unsafe_beta = true;  // callers gate beta themselves
  return c;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

StatTestReport check_product_convergence(std::uint64_t seed, double x, long k_max, long n_trials, double threshold,
                                         double y_tol) {
  auto r = product_impl<true>(seed, x, k_max, n_trials, threshold, y_tol);
  r.reproduce = "dercoord verify --suite lemmas" + seed_arg(seed);
  return r;
}

StatTestReport check_product_convergence_serial(std::uint64_t seed, double x, long k_max, long n_trials,
                                                double threshold, double y_tol) {
  auto r = product_impl<false>(seed, x, k_max, n_trials, threshold, y_tol);
  r.reproduce = "dercoord verify --suite lemmas" + seed_arg(seed);
  return r;
}

StatTestReport check_bounded_sum(std::uint64_t seed, double x, long k_max, long n_trials, double threshold) {
  auto r = bounded_impl<true>(seed, x, k_max, n_trials, threshold);
  r.reproduce = "dercoord verify --suite lemmas" + seed_arg(seed);
  return r;
}

StatTestReport check_bounded_sum_serial(std::uint64_t seed, double x, long k_max, long n_trials, double threshold) {
  auto r = bounded_impl<false>(seed, x, k_max, n_trials, threshold);
  r.reproduce = "dercoord verify --suite lemmas" + seed_arg(seed);
  return r;
}

StatTestReport check_theorem1(const sim::SimTrace& trace, const scenario::Scenario& sc) {
  StatTestReport r;
  r.name = "theorem1_equilibrium";
  r.n_trials = 1;
  r.threshold = 1.0;
  r.confidence = "pathwise";
  r.reproduce = "dercoord run --scenario <file> --seed " + std::to_string(trace.header.seed);
  const int n = sc.size();
  bool in_range = false;
  try {
    in_range = controller::beta_bounds(n, sc.cfg.b_lo, sc.cfg.b_hi, sc.cfg.epsilon).contains(sc.cfg.beta);
  } catch (const ValidationError&) {
    in_range = false;
  }
  if (!in_range) {
    r.verdict = Verdict::skipped;
    r.note = "beta outside the admissible interval; the equilibrium claim does not apply";
    return r;
  }
  if (trace.rows.empty() || trace.header.plant_failed) {
    r.verdict = Verdict::fail;
    r.note = "trace is empty or the plant failed";
    return r;
  }
  const auto eq = controller::classify_equilibrium(trace.back().u, trace.back().e, sc.box, sc.controller.delta);
  r.stats["class"] = static_cast<double>(eq);
  r.stats["terminal_e"] = trace.back().e;
  r.stats["rows"] = static_cast<double>(trace.rows.size());

  // Sign constancy over the fast rows.
  double sign = 0.0;
  long flips = 0;
  for (const auto& row : trace.rows) {
    if (row.phase != sim::Phase::est || row.e == 0.0) continue;
    const double s = row.e > 0 ? 1.0 : -1.0;
    if (sign == 0.0) {
      sign = s;
    } else if (s != sign) {
      ++flips;
    }
  }
  r.stats["sign_flips"] = static_cast<double>(flips);

  bool moves_ok = true;
  const auto rows = trace.rows.size();
  if (eq == controller::Equilibrium::tracking) {
    if (rows >= 2) {
      const auto& a = trace.rows[rows - 2];
      const auto& b = trace.rows[rows - 1];
      const double cap = sc.cfg.beta * std::abs(a.e) * std::sqrt(static_cast<double>(n)) * sc.cfg.b_hi;
      moves_ok = (b.u - a.u).norm() <= cap * (1.0 + 1e-9) + 1e-12;
    }
  } else if (eq != controller::Equilibrium::unclassified) {
    const std::size_t window = std::min<std::size_t>(rows - 1, static_cast<std::size_t>(sc.cfg.stall_window));
    double worst_move = 0.0, worst_drift = 0.0;
    for (std::size_t i = rows - window; i < rows; ++i) {
      worst_move = std::max(worst_move, (trace.rows[i].u - trace.rows[i - 1].u).squaredNorm());
      worst_drift = std::max(worst_drift, std::abs(trace.rows[i].e - trace.back().e));
    }
    r.stats["final_window_max_du2"] = worst_move;
    r.stats["final_window_e_drift"] = worst_drift;
    moves_ok = worst_move < sc.cfg.alpha_guard && worst_drift <= 1e-9 * (1.0 + std::abs(trace.back().e));
  }
  const bool ok = eq != controller::Equilibrium::unclassified && flips == 0 && moves_ok;
  r.pass_fraction = ok ? 1.0 : 0.0;
  if (!ok) {
    r.note = eq == controller::Equilibrium::unclassified ? "unclassifiable terminal state"
             : flips                                     ? "tracking error changed sign"
                                                         : "control moves did not vanish";
  }
  r.decide();
  return r;
}

StatTestReport check_projection_witness(const sim::SimTrace& trace, const scenario::Scenario& sc) {
  StatTestReport r;
  r.name = "projection_witness";
  r.threshold = 1.0;
  r.confidence = "pathwise, every fast row";
  r.reproduce = "dercoord run --scenario <file> --seed " + std::to_string(trace.header.seed);
  long total = 0, ok = 0;
  double worst = 0.0;
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const auto& prev = trace.rows[i - 1];
    const auto& row = trace.rows[i];
    if (row.phase != sim::Phase::est) continue;
    const auto w = controller::projection_witness(prev.u, row.u, prev.e, sc.cfg.beta, row.w, row.phi_hat);
    ++total;
    if (w.exists) ++ok;
    worst = std::max(worst, w.worst_violation);
  }
  r.n_trials = total;
  r.pass_fraction = total ? static_cast<double>(ok) / static_cast<double>(total) : 1.0;
  r.stats["worst_violation"] = worst;
  r.decide();
  return r;
}

StatTestReport check_corollary1(const RateConfig& cfg) {
  StatTestReport r;
  r.name = "corollary1_rate";
  r.threshold = 1.0;
  r.confidence = "pathwise on every interior iteration of every seed";
  r.reproduce = "dercoord verify --suite theorems" + seed_arg(cfg.seed);
  const double cap_n = cfg.b_lo * cfg.b_lo / (cfg.epsilon * cfg.b_hi * cfg.b_hi);
  const int n_max = std::min<int>(cfg.n_max, static_cast<int>(std::ceil(cap_n)) - 1);
  r.stats["epsilon"] = cfg.epsilon;
  r.stats["n_max"] = n_max;
  if (n_max < 1) {
    r.verdict = Verdict::skipped;
    r.note = "the admissible beta interval is empty for every DER count at this epsilon";
    return r;
  }
  long checked = 0, ok = 0, boundary = 0, seeds_run = 0;
  double worst = 0.0;
  for (long s = 0; s < cfg.n_seeds; ++s) {
    Rng rng(cfg.seed, RngStream::scenario, static_cast<std::uint64_t>(s));
    const int n = static_cast<int>(rng.uniform_int(1, n_max));
    Vector phi(n), phi0(n);
    for (int i = 0; i < n; ++i) phi[i] = rng.uniform(cfg.b_lo, cfg.b_hi);
    for (int i = 0; i < n; ++i) phi0[i] = rng.uniform(cfg.b_lo, cfg.b_hi);
    const auto range = controller::beta_bounds_rate(n, cfg.b_lo, cfg.b_hi, cfg.epsilon);
    double beta = range.lower + (range.upper - range.lower) * (0.01 + 0.98 * rng.next_unit());
    if (cfg.beta) {
      beta = *cfg.beta;
      if (!range.contains(beta)) {
        r.verdict = Verdict::skipped;
        r.note = "beta " + std::to_string(beta) + " outside (" + std::to_string(range.lower) + ", " +
                 std::to_string(range.upper) + "); rate not asserted";
        return r;
      }
    }
    auto c = linear_config(phi, rng.uniform(-100.0, 100.0), 0.0, 1000.0);
    Vector u0(n);
    for (int i = 0; i < n; ++i) u0[i] = rng.uniform(300.0, 700.0);
    c.u0 = to_std(u0);
    c.phi0 = to_std(phi0);
    const double y0 = phi.dot(u0) + c.linear_offset;
    c.y_star = y0 + (rng.next_bit() ? 1.0 : -1.0) * rng.uniform(20.0, 200.0);
    c.b_lo = cfg.b_lo;
    c.b_hi = cfg.b_hi;
    c.beta = beta;
    c.epsilon = cfg.epsilon;
    c.randomized = false;
    c.delta = 1e-6;
    c.max_iters = cfg.max_iters;
    c.seed = cfg.seed + static_cast<std::uint64_t>(s);
    const auto sc = scenario::build_scenario(c);
    const auto trace = sim::run_estimation_phase(sc);
    ++seeds_run;
    for (std::size_t i = 1; i < trace.rows.size(); ++i) {
      const auto& a = trace.rows[i - 1];
      const auto& b = trace.rows[i];
      if (!interior(a.u, sc.box, 1e-9) || !interior(b.u, sc.box, 1e-9)) {
        ++boundary;
        continue;
      }
      if (std::abs(a.e) <= 1e-7) continue;
      const double ratio = std::abs(b.e / a.e);
      worst = std::max(worst, ratio);
      ++checked;
      if (ratio < 1.0 - cfg.epsilon) ++ok;
    }
  }
  r.n_trials = checked;
  r.pass_fraction = checked ? static_cast<double>(ok) / static_cast<double>(checked) : 0.0;
  r.stats["seeds"] = static_cast<double>(seeds_run);
  r.stats["max_ratio"] = worst;
  r.stats["rate_bound"] = 1.0 - cfg.epsilon;
  r.stats["boundary_iterations_skipped"] = static_cast<double>(boundary);
  if (checked == 0) {
    r.verdict = Verdict::skipped;
    r.note = "no interior iterations";
  }
  r.decide();
  return r;
}

StatTestReport check_theorem2_linear(const EstimationConfig& cfg) {
  StatTestReport r;
  r.name = "theorem2_linear";
  r.threshold = cfg.threshold;
  r.confidence = "fraction of seeds with |phi_hat - phi| below tol; 95% over 200 seeds bounds false failure";
  r.reproduce = "dercoord verify --suite theorems" + seed_arg(cfg.seed);
  const auto range = controller::beta_bounds_estimation(cfg.n, 0.8, 1.2, cfg.epsilon);
  if (!range.contains(cfg.beta)) {
    r.verdict = Verdict::skipped;
    r.note = "beta outside the estimation interval";
    return r;
  }
  const std::vector<long> checkpoints = {1, 10, 100, cfg.iters};
  std::vector<std::vector<double>> at(checkpoints.size(), std::vector<double>(cfg.n_seeds));
  std::vector<double> best(cfg.n_seeds);
  std::vector<char> saturated(cfg.n_seeds);
  parallel_for(cfg.n_seeds, [&](std::ptrdiff_t s) {
    Rng rng(cfg.seed, RngStream::scenario, static_cast<std::uint64_t>(s));
    Vector phi(cfg.n);
    for (int i = 0; i < cfg.n; ++i) phi[i] = rng.uniform(cfg.phi_lo, cfg.phi_hi);
    auto c = linear_config(phi, rng.uniform(-100.0, 100.0), 0.0, 10000.0);
    Vector u0(cfg.n);
    for (int i = 0; i < cfg.n; ++i) u0[i] = rng.uniform(4000.0, 6000.0);
    c.u0 = to_std(u0);
    c.phi0 = {1.0};
    c.y_star = phi.dot(u0) + c.linear_offset + (rng.next_bit() ? 1.0 : -1.0) * rng.uniform(500.0, 1000.0);
    c.beta = cfg.beta;
    c.epsilon = cfg.epsilon;
    c.delta = 1e-9;
    c.max_iters = cfg.iters;
    c.alpha_gain = cfg.alpha_gain;
    c.seed = cfg.seed + static_cast<std::uint64_t>(s);
    const auto sc = scenario::build_scenario(c);
    const auto trace = sim::run_estimation_phase(sc);
    double low = std::numeric_limits<double>::infinity();
    bool sat = false;
    for (const auto& row : trace.rows) {
      low = std::min(low, (row.phi_hat - phi).norm());
      sat = sat || !interior(row.u, sc.box, 0.0);
    }
    best[s] = low;
    saturated[s] = sat;
    for (std::size_t c2 = 0; c2 < checkpoints.size(); ++c2) {
      const auto idx = std::min<std::size_t>(static_cast<std::size_t>(checkpoints[c2]), trace.rows.size() - 1);
      at[c2][s] = (trace.rows[idx].phi_hat - phi).norm();
    }
  });
  long valid = 0, ok = 0;
  for (long s = 0; s < cfg.n_seeds; ++s) {
    if (saturated[s]) continue;
    ++valid;
    if (best[s] < cfg.tol) ++ok;
  }
  r.n_trials = valid;
  r.pass_fraction = valid ? static_cast<double>(ok) / static_cast<double>(valid) : 0.0;
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t c2 = 0; c2 < checkpoints.size(); ++c2) {
    const double med = median(at[c2]);
    r.stats["median_error_k" + std::to_string(checkpoints[c2])] = med;
    monotone = monotone && med <= prev;
    prev = med;
  }
  r.stats["n"] = cfg.n;
  r.stats["beta"] = cfg.beta;
  r.stats["alpha_gain"] = cfg.alpha_gain;
  r.stats["saturated_seeds"] = static_cast<double>(cfg.n_seeds - valid);
  if (valid == 0) {
    r.verdict = Verdict::skipped;
    r.note = "every seed left the interior";
  }
  r.decide();
  if (r.verdict == Verdict::pass && !monotone) {
    r.verdict = Verdict::fail;
    r.note = "median error increased between checkpoints";
  }
  return r;
}

StatTestReport check_theorem2(const scenario::Scenario& sc, long n_seeds, double tol, double threshold,
                              double rel_tol, std::uint64_t first_seed) {
  StatTestReport r;
  r.name = "theorem2_" + sc.cfg.name;
  r.threshold = threshold;
  r.confidence = "fraction of seeds with terminal MAE below tol and every component within rel_tol of the oracle";
  r.reproduce = "dercoord sweep --scenario <" + sc.cfg.name + "> --seeds " + std::to_string(n_seeds);
  std::vector<std::uint64_t> seeds(n_seeds);
  std::iota(seeds.begin(), seeds.end(), first_seed);
  const auto traces = sim::run_batch(sc, seeds);
  std::vector<double> mae(n_seeds), rel(n_seeds);
  std::vector<char> skip(n_seeds);
  parallel_for(n_seeds, [&](std::ptrdiff_t s) {
    const auto& t = traces[s];
    if (t.header.plant_failed || t.rows.empty() || t.equilibrium == controller::Equilibrium::saturated_low ||
        t.equilibrium == controller::Equilibrium::saturated_high) {
      skip[s] = 1;
      return;
    }
    const Vector phi = sc.plant->sensitivity(t.back().u);
    const Vector err = t.back().phi_hat - phi;
    mae[s] = err.cwiseAbs().mean();
    rel[s] = err.cwiseAbs().cwiseQuotient(phi.cwiseAbs()).maxCoeff();
  });
  long valid = 0, ok = 0;
  std::vector<double> maes;
  double worst_rel = 0.0;
  for (long s = 0; s < n_seeds; ++s) {
    if (skip[s]) continue;
    ++valid;
    maes.push_back(mae[s]);
    worst_rel = std::max(worst_rel, rel[s]);
    if (mae[s] < tol && rel[s] <= rel_tol) ++ok;
  }
  r.n_trials = valid;
  r.pass_fraction = valid ? static_cast<double>(ok) / static_cast<double>(valid) : 0.0;
  r.stats["median_terminal_mae"] = median(maes);
  r.stats["max_terminal_mae"] = maes.empty() ? 0.0 : *std::max_element(maes.begin(), maes.end());
  r.stats["max_relative_error"] = worst_rel;
  r.stats["skipped_seeds"] = static_cast<double>(n_seeds - valid);
  if (valid == 0) {
    r.verdict = Verdict::skipped;
    r.note = "every seed saturated or failed";
  }
  r.decide();
  return r;
}

StatTestReport check_trichotomy(std::uint64_t seed, long n_scenarios, const scenario::Scenario* feeder_base) {
  StatTestReport r;
  r.name = "theorem1_trichotomy";
  r.threshold = 1.0;
  r.confidence = "every randomized scenario must classify";
  r.reproduce = "dercoord verify --suite theorems" + seed_arg(seed);
  std::vector<int> outcome(n_scenarios, -1);
  std::vector<int> expected(n_scenarios);
  std::vector<char> report_ok(n_scenarios);
  parallel_for(n_scenarios, [&](std::ptrdiff_t i) {
    Rng rng(seed, RngStream::scenario, static_cast<std::uint64_t>(i));
    const int kind = static_cast<int>(i % 3);  // 0 feasible, 1 under-capacity, 2 over-capacity
    expected[i] = kind == 0 ? 0 : kind;
    scenario::ScenarioConfig c;
    double y_lo = 0.0, y_hi = 0.0;
    const bool use_feeder = feeder_base && i % 5 == 0;
    if (use_feeder) {
      c = feeder_base->cfg;
      const auto& box = feeder_base->box;
      y_lo = feeder_base->plant->measure(box.lower);
      y_hi = feeder_base->plant->measure(box.upper);
      Vector u0(box.size());
      for (Eigen::Index j = 0; j < u0.size(); ++j) u0[j] = rng.uniform(box.lower[j], box.upper[j]);
      c.u0 = to_std(u0);
    } else {
      const int n = static_cast<int>(rng.uniform_int(1, 9));
      Vector phi(n);
      for (int j = 0; j < n; ++j) phi[j] = rng.uniform(0.8, 1.2);
      c = linear_config(phi, rng.uniform(-500.0, 500.0), 0.0, 100.0);
      c.u_max = {rng.uniform(50.0, 150.0)};
      Vector u0(n);
      for (int j = 0; j < n; ++j) u0[j] = rng.uniform(0.0, c.u_max[0]);
      c.u0 = to_std(u0);
      y_lo = c.linear_offset;
      y_hi = phi.sum() * c.u_max[0] + c.linear_offset;
      const double cap = 0.64 / (n * 1.44);
      c.epsilon = cap * rng.uniform(0.05, 0.5);
      const double lo = c.epsilon / 0.64, hi = 1.0 / (n * 1.44);
      c.beta = lo + (hi - lo) * (0.01 + 0.98 * rng.next_unit());
      c.allow_unsafe_beta = false;
      c.phi0 = {1.0};
    }
    if (kind == 0) {
      c.y_star = y_lo + (y_hi - y_lo) * rng.uniform(0.1, 0.9);
    } else if (kind == 1) {
      c.y_star = y_lo - rng.uniform(5.0, 100.0);
    } else {
      c.y_star = y_hi + rng.uniform(5.0, 100.0);
    }
    c.delta = 1.0;
    c.max_iters = 5000;
    c.n_slow = 0;
    c.seed = seed + static_cast<std::uint64_t>(i);
    const auto sc = scenario::build_scenario(c);
    const auto trace = sim::run_estimation_phase(sc);
    outcome[i] = static_cast<int>(trace.equilibrium);
    report_ok[i] = check_theorem1(trace, sc).verdict == Verdict::pass;
  });
  long classified = 0, matched = 0, certified = 0;
  long counts[4] = {0, 0, 0, 0};
  for (long i = 0; i < n_scenarios; ++i) {
    ++counts[outcome[i]];
    if (outcome[i] != static_cast<int>(controller::Equilibrium::unclassified)) ++classified;
    if (outcome[i] == expected[i]) ++matched;
    if (report_ok[i]) ++certified;
  }
  r.n_trials = n_scenarios;
  r.pass_fraction = n_scenarios ? static_cast<double>(classified) / static_cast<double>(n_scenarios) : 0.0;
  r.stats["tracking"] = static_cast<double>(counts[0]);
  r.stats["saturated_low"] = static_cast<double>(counts[1]);
  r.stats["saturated_high"] = static_cast<double>(counts[2]);
  r.stats["unclassified"] = static_cast<double>(counts[3]);
  r.stats["matched_expected_class"] = static_cast<double>(matched);
  r.stats["full_check_passed"] = static_cast<double>(certified);
  r.decide();
  if (r.verdict == Verdict::pass && certified != n_scenarios) {
    r.verdict = Verdict::fail;
    r.note = "some classified traces failed the sign or vanishing-move checks";
  }
  return r;
}

namespace {

template <bool Parallel>
GridResult grid_impl(const odcp::DispatchProblem& prob, const odcp::FlowConstraints& flows, double grid_step) {
  prob.validate();
  const auto n = prob.p_tilde.size();
  if (n < 1 || n > 3) throw ValidationError("brute-force QP supports 1 to 3 DERs");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw ValidationError("grid_step must lie in (0, 1]");
  const double target = prob.equality_target();
  const long per_axis = static_cast<long>(std::floor(1.0 / grid_step + 1e-9)) + 1;
  const auto& lo = prob.box.lower;
  const auto& hi = prob.box.upper;
  auto coord = [&](Eigen::Index i, long j) {
    return j == per_axis - 1 ? hi[i] : lo[i] + static_cast<double>(j) * grid_step * (hi[i] - lo[i]);
  };
  auto feasible = [&](const Vector& p) {
    const double last = p[n - 1];
    const double slack = 1e-9 * (1.0 + std::abs(lo[n - 1]) + std::abs(hi[n - 1]));
    if (last < lo[n - 1] - slack || last > hi[n - 1] + slack) return false;
    for (int r = 0; r < flows.size(); ++r) {
      const double f = flows.sensitivity.row(r).dot(p) + flows.offset[r];
      if (std::abs(f) > flows.limit[r] + 1e-9 * (1.0 + flows.limit[r])) return false;
    }
    return true;
  };
  auto complete = [&](Vector& p) {
    double rest = target;
    for (Eigen::Index i = 0; i + 1 < n; ++i) rest -= prob.phi_hat[i] * p[i];
    p[n - 1] = rest / prob.phi_hat[n - 1];
  };
  const long outer = n >= 2 ? per_axis : 1;
  const long inner = n == 3 ? per_axis : 1;
  std::vector<GridResult> part(outer);
  auto body = [&](std::ptrdiff_t a) {
    GridResult best;
    Vector p(n);
    for (long b = 0; b < inner; ++b) {
      if (n >= 2) p[0] = coord(0, a);
      if (n == 3) p[1] = coord(1, b);
      complete(p);
      ++best.points;
      if (!feasible(p)) continue;
      const double obj = prob.objective(p);
      if (!best.feasible || obj < best.objective) {
        best.feasible = true;
        best.objective = obj;
        best.p = p;
      }
    }
    part[a] = std::move(best);
  };
  if constexpr (Parallel) {
    parallel_for(outer, body);
  } else {
    serial_for(outer, body);
  }
  GridResult out;
  for (const auto& g : part) {
    out.points += g.points;
    if (g.feasible && (!out.feasible || g.objective < out.objective)) {
      out.feasible = true;
      out.objective = g.objective;
      out.p = g.p;
    }
  }
  return out;
}

}  // namespace

GridResult brute_force_qp(const odcp::DispatchProblem& prob, const odcp::FlowConstraints& flows, double grid_step) {
  return grid_impl<true>(prob, flows, grid_step);
}

GridResult brute_force_qp_serial(const odcp::DispatchProblem& prob, const odcp::FlowConstraints& flows,
                                 double grid_step) {
  return grid_impl<false>(prob, flows, grid_step);
}

QpInstance random_qp_instance(std::uint64_t seed, std::uint64_t index) {
  Rng rng(seed, RngStream::trial, index);
  const int n = static_cast<int>(rng.uniform_int(2, 3));
  const int n_bus = n + static_cast<int>(rng.uniform_int(1, 3));
  QpInstance inst;
  auto& f = inst.feeder;
  f.buses.push_back({0, 0.0, 0.0, net::BusKind::substation, 1.0});
  for (int b = 1; b <= n_bus; ++b) {
    const double p = rng.uniform(0.0, 2.0);
    f.buses.push_back({b, p, 0.5 * p, net::BusKind::load, 1.0});
  }
  for (int b = 1; b <= n_bus; ++b) {
    const int parent = static_cast<int>(rng.uniform_int(0, b - 1));
    const bool flip = rng.next_bit();
    f.lines.push_back({b, flip ? b : parent, flip ? parent : b, 0.01, 0.02, HUGE_VAL});
  }
  // Distinct DER buses by partial shuffle.
  std::vector<int> pool(n_bus);
  std::iota(pool.begin(), pool.end(), 1);
  for (int i = 0; i < n; ++i) {
    const auto j = rng.uniform_int(i, n_bus - 1);
    std::swap(pool[i], pool[j]);
    f.der_buses.push_back(pool[i]);
    f.buses[pool[i]].kind = net::BusKind::der_unity_pf;
  }
  f.der_p_min.resize(n);
  f.der_p_max.resize(n);
  f.der_q_min = Vector::Zero(n);
  f.der_q_max = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    f.der_p_min[i] = rng.uniform(0.0, 5.0);
    f.der_p_max[i] = f.der_p_min[i] + 0.5;
  }
  net::validate_and_index(f);

  auto& p = inst.prob;
  p.box = f.der_box();
  p.p_tilde.resize(n);
  p.phi_hat.resize(n);
  Vector p_ref(n);
  for (int i = 0; i < n; ++i) {
    p.p_tilde[i] = rng.uniform(p.box.lower[i], p.box.upper[i]);
    p.phi_hat[i] = rng.uniform(0.8, 1.2);
    p_ref[i] = rng.uniform(p.box.lower[i], p.box.upper[i]);
  }
  p.y_now = rng.uniform(-10.0, 10.0);
  p.p_d = f.nominal_p_load();
  p.cost.quadratic = Vector(n);
  p.cost.linear = Vector(n);
  for (int i = 0; i < n; ++i) {
    p.cost.quadratic[i] = rng.uniform(0.5, 1.5);
    p.cost.linear[i] = rng.uniform(-0.5, 0.5);
  }
  p.flow_limits = Vector::Constant(f.line_count(), HUGE_VAL);
  const bool infeasible = rng.uniform_int(0, 4) == 0;
  if (infeasible) {
    p.y_star = p.y_now + p.phi_hat.dot(p.box.upper - p.p_tilde) + rng.uniform(0.5, 2.0);
  } else {
    p.y_star = p.y_now + p.phi_hat.dot(p_ref - p.p_tilde);
  }
  // One monitored line, loose enough that p_ref stays strictly feasible.
  const int line = static_cast<int>(rng.uniform_int(0, f.line_count() - 1));
  const Vector flows = net::line_flows_approx(f, net::map_injections(f, p_ref, p.p_d));
  p.flow_limits[line] = std::abs(flows[line]) + rng.uniform(0.02, 0.3);
  return inst;
}

StatTestReport check_qp_oracle(std::uint64_t seed, long n_instances, double grid_step, double gap_tol,
                               double kkt_tol) {
  StatTestReport r;
  r.name = "odcp_oracle";
  r.threshold = 1.0;
  r.confidence = "every instance: objective gap and KKT residual within tolerance, infeasibility agreement";
  r.reproduce = "dercoord verify --suite qp" + seed_arg(seed);
  long ok = 0, infeasible = 0;
  double worst_gap = 0.0, worst_kkt = 0.0, worst_primal = 0.0;
  std::string first_failure;
  for (long i = 0; i < n_instances; ++i) {
    const auto inst = random_qp_instance(seed, static_cast<std::uint64_t>(i));
    const auto flows = odcp::build_flow_constraints(inst.prob, inst.feeder);
    const auto qp = odcp::solve_odcp(inst.prob, flows);
    const auto grid = brute_force_qp(inst.prob, flows, grid_step);
    bool pass = false;
    if (!qp.feasible() && !grid.feasible) {
      pass = true;
      ++infeasible;
    } else if (qp.feasible() && grid.feasible) {
      const double gap = grid.objective - qp.qp.objective;
      worst_gap = std::max(worst_gap, std::abs(gap));
      worst_kkt = std::max(worst_kkt, qp.qp.kkt.max());
      worst_primal = std::max(worst_primal, qp.qp.kkt.primal);
      pass = gap <= gap_tol && gap >= -1e-9 && qp.qp.kkt.max() <= kkt_tol;
    }
    if (pass) {
      ++ok;
    } else if (first_failure.empty()) {
      first_failure = "instance " + std::to_string(i) + ": solver " + odcp::to_string(qp.qp.status) +
                      ", grid " + (grid.feasible ? "feasible" : "infeasible");
    }
  }
  r.n_trials = n_instances;
  r.pass_fraction = n_instances ? static_cast<double>(ok) / static_cast<double>(n_instances) : 0.0;
  r.stats["max_objective_gap"] = worst_gap;
  r.stats["max_kkt_residual"] = worst_kkt;
  r.stats["max_primal_residual"] = worst_primal;
  r.stats["infeasible_instances"] = static_cast<double>(infeasible);
  r.stats["grid_step"] = grid_step;
  r.note = first_failure;
  r.decide();
  return r;
}

std::vector<StatTestReport> lemma_suite(std::uint64_t seed) {
  std::vector<StatTestReport> out;
  auto add = [&](StatTestReport r, const std::string& name) {
    r.name = name;
    out.push_back(std::move(r));
  };
  add(check_product_convergence(seed, 0.99, 100000, 1000, 0.99), "product_convergence_x0.99");
  add(check_product_convergence(seed, 0.5, 100, 1000, 1.0, std::ldexp(1.0, -20)), "product_convergence_x0.5");
  add(check_product_convergence(seed, 0.999999, 100, 100, 0.99), "product_convergence_power_edge");
  add(check_bounded_sum(seed, 0.5, 2000, 20000, 0.99), "bounded_sum_x0.5");
  add(check_bounded_sum(seed, 0.9, 2000, 1000, 0.99), "bounded_sum_x0.9");
  return out;
}

std::vector<StatTestReport> theorem_suite(std::uint64_t seed, long seeds, const std::string& data_dir) {
  std::vector<StatTestReport> out;
  RateConfig rate;
  rate.seed = seed;
  rate.n_seeds = std::min<long>(seeds, 50);
  out.push_back(check_corollary1(rate));
  EstimationConfig est;
  est.seed = seed;
  est.n_seeds = seeds;
  out.push_back(check_theorem2_linear(est));
  const auto case1 = scenario::load(std::filesystem::path(data_dir) / "scenarios" / "case1.toml");
  out.push_back(check_trichotomy(seed, 300, &case1));
  auto cfg = case1.cfg;
  cfg.delta = 1e-4;
  cfg.max_iters = 600;
  out.push_back(check_theorem2(scenario::build_scenario(cfg), std::min<long>(seeds, 50), 1e-2, 0.9, 0.01, seed));
  return out;
}

std::vector<StatTestReport> qp_suite(std::uint64_t seed) { return {check_qp_oracle(seed, 100)}; }

}  // namespace dercoord::verify

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


#include "dercoord/sim.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dercoord/estimator.hpp"
#include "dercoord/odcp.hpp"
#include "dercoord/parallel.hpp"
#include "dercoord/rng.hpp"

namespace dercoord::sim {

const char* to_string(Phase phase) { return phase == Phase::est ? "est" : "odcp"; }

const char* to_string(Termination t) {
  switch (t) {
    case Termination::delta: return "delta";
    case Termination::max_iters: return "max_iters";
    case Termination::stall: return "stall";
    case Termination::plant_failure: return "plant_failure";
    case Termination::dispatch: return "dispatch";
  }
  return "delta";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Runner {
 public:
  Runner(const scenario::Scenario& sc, std::uint64_t seed) : sc_(sc), rng_(seed, RngStream::mask) {
    trace_.header.config_hash = hex64(sc.config_hash);
    trace_.header.feeder_hash = hex64(sc.feeder_hash);
    trace_.header.seed = seed;
    trace_.header.n = sc.size();
    trace_.header.rng = std::string(Rng::kName);
  }

  // Row 0. Returns false if the plant fails at u0.
  bool start() {
    const int n = sc_.size();
    est_ = estimator::SensitivityEstimate::make(sc_.phi0, sc_.cfg.b_lo, sc_.cfg.b_hi);
    u_ = sc_.u0;
    if (!measure(u_, y_)) return false;
    u_prev_ = u_;
    y_prev_ = y_;
    push(Vector::Zero(n), kNaN, Phase::est);
    return true;
  }

  // Fast iterations until a stop condition or `budget` iterations.
  Termination fast(long budget) {
    const auto& ctl = sc_.controller;
    const int n = sc_.size();
    long stalled = 0;
    for (long done = 0; done < budget; ++done) {
      if (std::abs(e()) <= ctl.delta) return Termination::delta;
      if (k_ >= ctl.max_iters) return Termination::max_iters;
      // Estimation step on the last observed increment.
      const Vector du = u_ - u_prev_;
      const double dy = y_ - y_prev_;
      const auto alpha = estimator::step_size(sc_.estimator, du);
      est_ = estimator::estimation_step(est_, du, dy, alpha);
      // Control step.
      const Vector w = ctl.randomized ? controller::sample_mask(rng_, n) : controller::full_mask(n);
      const Vector u_next = controller::tracking_step(u_, e(), est_.phi_hat, w, ctl.beta, sc_.box);
      double y_next = 0.0;
      if (!measure(u_next, y_next)) return Termination::plant_failure;
      stalled = (u_next - u_).squaredNorm() < sc_.estimator.alpha_guard ? stalled + 1 : 0;
      u_prev_ = u_;
      y_prev_ = y_;
      u_ = u_next;
      y_ = y_next;
      ++k_;
      push(w, alpha ? *alpha : kNaN, Phase::est);
      if (stalled >= sc_.cfg.stall_window) return Termination::stall;
    }
    if (std::abs(e()) <= ctl.delta) return Termination::delta;
    return k_ >= ctl.max_iters ? Termination::max_iters : Termination::dispatch;
  }

  // One slow-timescale solve; the DERs jump to its result when feasible.
  bool dispatch() {
    odcp::DispatchProblem prob;
    prob.y_now = y_;
    prob.p_tilde = u_;
    prob.phi_hat = est_.phi_hat;
    prob.y_star = sc_.cfg.y_star;
    prob.box = sc_.box;
    prob.cost = sc_.cost;
    odcp::DispatchResult res;
    DispatchRecord rec;
    if (sc_.feeder) {
      prob.flow_limits = sc_.flow_limits;
      prob.p_d = sc_.loads.p_d;
      const auto flows = odcp::build_flow_constraints(prob, *sc_.feeder);
      res = odcp::solve_odcp(prob, flows);
      for (int l : flows.lines) rec.lines.push_back(sc_.feeder->lines[l].id);
    } else {
      res = odcp::solve_odcp(prob, odcp::FlowConstraints{});
    }
    rec.status = odcp::to_string(res.qp.status);
    rec.message = res.qp.message;
    if (res.feasible()) {
      rec.p = res.p;
      rec.flows = res.flows;
      rec.objective = res.qp.objective;
      rec.kkt = res.qp.kkt.max();
      rec.active = res.active_labels;
      // Guard against round-off just outside the box.
      const Vector u_next = estimator::project_box(res.p, sc_.box.lower, sc_.box.upper);
      double y_next = 0.0;
      if (!measure(u_next, y_next)) {
        rec.k = k_;
        trace_.dispatches.push_back(rec);
        return false;
      }
      u_prev_ = u_;
      y_prev_ = y_;
      u_ = u_next;
      y_ = y_next;
    }
    ++k_;
    rec.k = k_;
    push(Vector::Zero(sc_.size()), kNaN, Phase::odcp);
    trace_.dispatches.push_back(std::move(rec));
    return true;
  }

  SimTrace finish(Termination why) {
    trace_.termination = why;
    if (!trace_.rows.empty()) {
      trace_.equilibrium = controller::classify_equilibrium(u_, e(), sc_.box, sc_.controller.delta);
    }
    trace_.header.termination = to_string(why);
    trace_.header.equilibrium = controller::to_string(trace_.equilibrium);
    return std::move(trace_);
  }

 private:
  double e() const { return y_ - sc_.cfg.y_star; }

  bool measure(const Vector& u, double& y) {
    try {
      y = sc_.plant->measure(u);
      return true;
    } catch (const ConvergenceError& err) {
      trace_.header.plant_failed = true;
      trace_.header.failure = err.what();
      return false;
    }
  }

  void push(const Vector& w, double alpha, Phase phase) {
    trace_.rows.push_back({k_, u_, y_, e(), est_.phi_hat, w, alpha, phase});
  }

  const scenario::Scenario& sc_;
  Rng rng_;
  SimTrace trace_;
  estimator::SensitivityEstimate est_;
  Vector u_, u_prev_;
  double y_ = 0.0, y_prev_ = 0.0;
  long k_ = 0;
};

}  // namespace

SimTrace run_estimation_phase(const scenario::Scenario& sc, std::optional<std::uint64_t> seed) {
  return run_two_timescale(sc, 0, seed);
}

SimTrace run_two_timescale(const scenario::Scenario& sc, long n_slow, std::optional<std::uint64_t> seed) {
  if (n_slow < 0) throw ValidationError("n_slow must be non-negative");
  Runner run(sc, seed.value_or(sc.cfg.seed));
  if (!run.start()) return run.finish(Termination::plant_failure);
  if (n_slow == 0) {
    const auto why = run.fast(std::numeric_limits<long>::max());
    return run.finish(why);
  }
  for (long s = 0; s < n_slow; ++s) {
    const auto why = run.fast(sc.cfg.slow_period);
    if (why == Termination::plant_failure) return run.finish(why);
    if (!run.dispatch()) return run.finish(Termination::plant_failure);
  }
  return run.finish(Termination::dispatch);
}

namespace {

template <bool Parallel>
std::vector<Vector> oracle_impl(const plant::Plant& plant, const SimTrace& trace) {
  std::vector<Vector> out(trace.rows.size());
  auto body = [&](std::ptrdiff_t i) { out[i] = plant.sensitivity(trace.rows[i].u); };
  if constexpr (Parallel) {
    parallel_for(static_cast<std::ptrdiff_t>(out.size()), body);
  } else {
    serial_for(static_cast<std::ptrdiff_t>(out.size()), body);
  }
  return out;
}

template <bool Parallel>
std::vector<SimTrace> batch_impl(const scenario::Scenario& sc, const std::vector<std::uint64_t>& seeds) {
  std::vector<SimTrace> out(seeds.size());
  auto body = [&](std::ptrdiff_t i) { out[i] = run_two_timescale(sc, sc.cfg.n_slow, seeds[i]); };
  if constexpr (Parallel) {
    parallel_for(static_cast<std::ptrdiff_t>(seeds.size()), body);
  } else {
    serial_for(static_cast<std::ptrdiff_t>(seeds.size()), body);
  }
  return out;
}

}  // namespace

std::vector<Vector> oracle_series(const plant::Plant& plant, const SimTrace& trace) {
  return oracle_impl<true>(plant, trace);
}

std::vector<Vector> oracle_series_serial(const plant::Plant& plant, const SimTrace& trace) {
  return oracle_impl<false>(plant, trace);
}

Metrics compute_metrics(const SimTrace& trace, const std::vector<Vector>& oracle, double delta,
                        const OverloadModel& overload) {
  if (oracle.size() != trace.rows.size()) {
    throw std::invalid_argument("oracle series has " + std::to_string(oracle.size()) + " entries for " +
                                std::to_string(trace.rows.size()) + " trace rows");
  }
  Metrics m;
  m.mae.reserve(trace.rows.size());
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& row = trace.rows[i];
    if (oracle[i].size() != row.phi_hat.size()) throw std::invalid_argument("oracle vector length mismatch");
    const auto n = row.phi_hat.size();
    m.mae.push_back(n ? (row.phi_hat - oracle[i]).cwiseAbs().sum() / static_cast<double>(n) : 0.0);
    if (m.iterations_to_delta < 0 && std::abs(row.e) <= delta) m.iterations_to_delta = row.k;
  }
  if (!trace.rows.empty()) {
    m.terminal_e = trace.rows.back().e;
    m.terminal_mae = m.mae.back();
  }
  if (overload.feeder) {
    const auto& feeder = *overload.feeder;
    m.overload_duration.assign(feeder.line_count(), 0);
    for (const auto& row : trace.rows) {
      const Vector f = net::line_flows_approx(feeder, net::map_injections(feeder, row.u, overload.p_d));
      for (int l = 0; l < feeder.line_count(); ++l) {
        if (std::abs(f[l]) > overload.limits[l]) ++m.overload_duration[l];
      }
    }
  }
  return m;
}

OverloadModel overload_model(const scenario::Scenario& sc) {
  if (!sc.feeder) return {};
  return {sc.feeder.get(), sc.loads.p_d, sc.flow_limits};
}

std::vector<SimTrace> run_batch(const scenario::Scenario& sc, const std::vector<std::uint64_t>& seeds) {
  return batch_impl<true>(sc, seeds);
}

std::vector<SimTrace> run_batch_serial(const scenario::Scenario& sc, const std::vector<std::uint64_t>& seeds) {
  return batch_impl<false>(sc, seeds);
}

}  // namespace dercoord::sim

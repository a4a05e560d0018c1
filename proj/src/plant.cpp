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


#include "dercoord/plant.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "dercoord/parallel.hpp"

namespace dercoord::plant {

namespace {

using cplx = std::complex<double>;

struct SweepState {
  std::vector<cplx> v;  // bus voltages, index 0..N
  std::vector<cplx> j;  // current from parent into bus b through its line
  double mismatch = 0.0;
  int sweeps = 0;
};

// Fixed-point sweep for given complex injections s (pu, index 1..N).
void sweep(const net::FeederModel& feeder, const std::vector<cplx>& z, const std::vector<cplx>& s,
           SweepState& st, const PowerFlowOptions& options) {
  const auto& topo = feeder.topology;
  const int n_bus = feeder.bus_count();
  std::vector<cplx> inj(n_bus + 1);
  for (int it = 0; it < options.max_sweeps; ++it) {
    ++st.sweeps;
    for (int b = 1; b <= n_bus; ++b) inj[b] = std::conj(s[b] / st.v[b]);
    std::fill(st.j.begin(), st.j.end(), cplx{});
    for (auto r = topo.order.rbegin(); r != topo.order.rend(); ++r) {
      const int b = *r;
      st.j[b] -= inj[b];
      if (topo.parent[b] > 0) st.j[topo.parent[b]] += st.j[b];
    }
    double delta = 0.0;
    for (int b : topo.order) {
      const cplx next = st.v[topo.parent[b]] - z[b] * st.j[b];
      delta = std::max(delta, std::abs(next - st.v[b]));
      st.v[b] = next;
    }
    if (!std::isfinite(delta)) break;
    if (delta < options.voltage_tol) {
      // Bus power balance with the final voltages and the last line currents.
      double worst = 0.0;
      for (int b = 1; b <= n_bus; ++b) {
        cplx out = -st.j[b];
        for (int c : topo.children[b]) out += st.j[c];
        worst = std::max(worst, std::abs(st.v[b] * std::conj(out) - s[b]));
      }
      st.mismatch = worst;
      if (worst < options.mismatch_tol) return;
      break;
    }
  }
  throw ConvergenceError("power flow did not converge within " + std::to_string(options.max_sweeps) + " sweeps");
}

}  // namespace

LoadProfile LoadProfile::nominal(const net::FeederModel& feeder) {
  return {feeder.nominal_p_load(), feeder.nominal_q_load()};
}

OperatingPoint solve_power_flow(const net::FeederModel& feeder, const Vector& u, const LoadProfile& loads,
                                const PowerFlowOptions& options) {
  const int n_bus = feeder.bus_count();
  const int n_der = feeder.der_count();
  if (u.size() != n_der) throw ValidationError("setpoint vector length does not match the DER count");
  if (loads.p_d.size() != n_bus || loads.q_d.size() != n_bus) {
    throw ValidationError("load profile length does not match the bus count");
  }
  if (!u.allFinite() || !feeder.der_box().contains(u, 1e-9)) {
    throw ValidationError("DER setpoints outside their active-power limits");
  }
  const double base = feeder.s_base_kva;
  const auto& topo = feeder.topology;

  std::vector<cplx> z(n_bus + 1);
  for (int b : topo.order) {
    const auto& line = feeder.lines[topo.parent_line[b]];
    z[b] = {line.r, line.x};
  }
  std::vector<cplx> s(n_bus + 1);
  for (int b = 1; b <= n_bus; ++b) s[b] = cplx(-loads.p_d[b - 1], -loads.q_d[b - 1]) / base;
  for (int i = 0; i < n_der; ++i) s[feeder.der_buses[i]] += u[i] / base;

  std::vector<int> pv;  // DER indices holding voltage
  for (int i = 0; i < n_der; ++i) {
    if (feeder.buses[feeder.der_buses[i]].kind == net::BusKind::der_const_voltage) pv.push_back(i);
  }
  const int m = static_cast<int>(pv.size());

  SweepState st;
  st.v.assign(n_bus + 1, cplx(feeder.buses[0].v_set, 0.0));
  st.j.assign(n_bus + 1, cplx{});
  Vector q = Vector::Zero(m);  // pu

  auto solve_with = [&](const Vector& q_pv) {
    std::vector<cplx> s_total = s;
    for (int a = 0; a < m; ++a) s_total[feeder.der_buses[pv[a]]] += cplx(0.0, q_pv[a]);
    sweep(feeder, z, s_total, st, options);
  };
  auto voltage_gap = [&]() {
    Vector f(m);
    for (int a = 0; a < m; ++a) {
      const int bus = feeder.der_buses[pv[a]];
      f[a] = feeder.buses[bus].v_set - std::abs(st.v[bus]);
    }
    return f;
  };

  solve_with(q);
  if (m > 0) {
    // Chord matrix from shared-path reactance, refined by Broyden updates.
    auto path = [&](int b) {
      std::vector<char> on(n_bus + 1, 0);
      for (; b > 0; b = topo.parent[b]) on[b] = 1;
      return on;
    };
    std::vector<std::vector<char>> paths;
    for (int a = 0; a < m; ++a) paths.push_back(path(feeder.der_buses[pv[a]]));
    Matrix jac = Matrix::Zero(m, m);
    for (int a = 0; a < m; ++a) {
      for (int c = 0; c < m; ++c) {
        for (int b = 1; b <= n_bus; ++b) {
          if (paths[a][b] && paths[c][b]) jac(a, c) += z[b].imag();
        }
      }
    }
    Vector q_lo(m), q_hi(m);
    for (int a = 0; a < m; ++a) {
      q_lo[a] = feeder.der_q_min[pv[a]] / base;
      q_hi[a] = feeder.der_q_max[pv[a]] / base;
    }
    Vector f = voltage_gap();
    bool converged = f.cwiseAbs().maxCoeff() < options.pv_tol;
    for (int it = 0; it < options.max_pv_iters && !converged; ++it) {
      Vector step = jac.fullPivLu().solve(f);
      if (!step.allFinite()) break;
      const Vector q_next = (q + step).cwiseMax(q_lo).cwiseMin(q_hi);
      step = q_next - q;
      if (step.squaredNorm() == 0.0) break;  // pinned at the reactive limits
      q = q_next;
      solve_with(q);
      const Vector f_next = voltage_gap();
      jac += ((f - f_next) - jac * step) * step.transpose() / step.squaredNorm();
      f = f_next;
      converged = f.cwiseAbs().maxCoeff() < options.pv_tol;
    }
    if (!converged) {
      for (int a = 0; a < m; ++a) {
        if (q[a] <= q_lo[a] || q[a] >= q_hi[a]) {
          throw ConvergenceError("reactive range violation at constant-voltage bus " +
                                 std::to_string(feeder.der_buses[pv[a]]));
        }
      }
      throw ConvergenceError("constant-voltage buses did not reach their setpoints");
    }
  }

  OperatingPoint op;
  op.v_mag.resize(n_bus + 1);
  op.v_ang.resize(n_bus + 1);
  for (int b = 0; b <= n_bus; ++b) {
    op.v_mag[b] = std::abs(st.v[b]);
    op.v_ang[b] = std::arg(st.v[b]);
  }
  cplx head{};
  for (int c : topo.children[0]) head += st.j[c];
  op.y = -(st.v[0] * std::conj(head)).real() * base;
  op.q_der = Vector::Zero(n_der);
  for (int a = 0; a < m; ++a) op.q_der[pv[a]] = q[a] * base;
  op.line_p.resize(feeder.line_count());
  double losses = 0.0;
  for (int l = 0; l < feeder.line_count(); ++l) {
    const int child = topo.line_child[l];
    const int parent = topo.parent[child];
    const cplx current = st.j[child];
    if (topo.line_sign[l] > 0) {
      op.line_p[l] = (st.v[parent] * std::conj(current)).real() * base;
    } else {
      op.line_p[l] = (st.v[child] * std::conj(-current)).real() * base;
    }
    losses += z[child].real() * std::norm(current);
  }
  op.losses = losses * base;
  op.max_mismatch = st.mismatch;
  op.sweeps = st.sweeps;
  return op;
}

namespace {

template <bool Parallel>
Vector fd_impl(const net::FeederModel& feeder, const Vector& u, const LoadProfile& loads, double h) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
  const int n = feeder.der_count();
  if (u.size() != n) throw ValidationError("setpoint vector length does not match the DER count");
  // Each DER needs two extra evaluations; offsets are in units of h.
  std::vector<std::array<int, 2>> offsets(n);
  std::vector<int> kind(n);  // 0 central, 1 forward, -1 backward
  bool need_base = false;
  for (int i = 0; i < n; ++i) {
    const bool up = u[i] + h <= feeder.der_p_max[i];
    const bool down = u[i] - h >= feeder.der_p_min[i];
    if (up && down) {
      kind[i] = 0;
      offsets[i] = {1, -1};
    } else if (u[i] + 2 * h <= feeder.der_p_max[i]) {
      kind[i] = 1;
      offsets[i] = {1, 2};
      need_base = true;
    } else if (u[i] - 2 * h >= feeder.der_p_min[i]) {
      kind[i] = -1;
      offsets[i] = {-1, -2};
      need_base = true;
    } else {
      throw ValidationError("DER " + std::to_string(i) + " box is narrower than the finite-difference stencil");
    }
  }
  std::vector<double> value(2 * n);
  auto evaluate = [&](std::ptrdiff_t t) {
    const int i = static_cast<int>(t / 2);
    Vector probe = u;
    probe[i] += offsets[i][t % 2] * h;
    probe[i] = std::clamp(probe[i], feeder.der_p_min[i], feeder.der_p_max[i]);
    value[t] = solve_power_flow(feeder, probe, loads).y;
  };
  if constexpr (Parallel) {
    parallel_for(2 * n, evaluate);
  } else {
    serial_for(2 * n, evaluate);
  }
  const double y0 = need_base ? solve_power_flow(feeder, u, loads).y : 0.0;
  Vector phi(n);
  for (int i = 0; i < n; ++i) {
    const double a = value[2 * i], b = value[2 * i + 1];
    if (kind[i] == 0) {
      phi[i] = (a - b) / (2 * h);
    } else if (kind[i] == 1) {
      phi[i] = (-3 * y0 + 4 * a - b) / (2 * h);
    } else {
      phi[i] = (3 * y0 - 4 * a + b) / (2 * h);
    }
  }
  return phi;
}

}  // namespace

Vector fd_sensitivity(const net::FeederModel& feeder, const Vector& u, const LoadProfile& loads, double h_step) {
  return fd_impl<true>(feeder, u, loads, h_step);
}

Vector fd_sensitivity_serial(const net::FeederModel& feeder, const Vector& u, const LoadProfile& loads,
                             double h_step) {
  return fd_impl<false>(feeder, u, loads, h_step);
}

FeederPlant::FeederPlant(std::shared_ptr<const net::FeederModel> feeder, LoadProfile loads, double fd_step)
    : feeder_(std::move(feeder)), loads_(std::move(loads)), fd_step_(fd_step), box_(feeder_->der_box()) {}

double FeederPlant::measure(const Vector& u) const { return solve(u).y; }

OperatingPoint FeederPlant::solve(const Vector& u) const { return solve_power_flow(*feeder_, u, loads_); }

Vector FeederPlant::sensitivity(const Vector& u) const { return fd_sensitivity(*feeder_, u, loads_, fd_step_); }

LinearPlant::LinearPlant(Vector phi, double offset, Box box)
    : phi_(std::move(phi)), offset_(offset), box_(std::move(box)) {
  if (box_.size() != phi_.size()) throw ValidationError("linear plant box does not match its sensitivity length");
}

}  // namespace dercoord::plant

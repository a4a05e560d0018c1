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


#pragma once

#include <string>
#include <vector>

#include "dercoord/common.hpp"
#include "dercoord/net.hpp"

// Slow-timescale optimal dispatch: a small strictly convex QP solved by a
// dual active-set method (Goldfarb-Idnani) with an explicit KKT check.
namespace dercoord::odcp {

// min 0.5 x'Hx + c'x  s.t.  A x = b,  G x <= h
struct QuadraticProgram {
  Matrix H;
  Vector c;
  Matrix A;
  Vector b;
  Matrix G;
  Vector h;
};

enum class QpStatus { optimal, infeasible, unbounded };
std::string to_string(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double max() const;
};

struct QpResult {
  QpStatus status = QpStatus::infeasible;
  Vector x;
  double objective = 0.0;
  std::vector<int> active;  // indices into the rows of G
  Vector eq_multipliers;
  Vector ineq_multipliers;  // length rows(G), zero when inactive
  KktResiduals kkt;
  int iterations = 0;
  std::string message;
};

QpResult solve_qp(const QuadraticProgram& qp);
KktResiduals kkt_residuals(const QuadraticProgram& qp, const Vector& x, const Vector& eq_mult,
                           const Vector& ineq_mult);

// c(p) = sum_i quadratic_i (p_i - p_tilde_i)^2 + linear_i p_i
struct Cost {
  Vector quadratic;
  Vector linear;
  static Cost least_change(int n) { return {Vector::Ones(n), Vector::Zero(n)}; }
};

struct DispatchProblem {
  double y_now = 0.0;
  Vector p_tilde;
  Vector phi_hat;
  double y_star = 0.0;
  Box box;
  Vector flow_limits;  // kW per line, +inf means unmonitored
  Vector p_d;          // kW per bus
  Cost cost;

  void validate() const;
  double objective(const Vector& p) const;
  // Right-hand side of phi_hat . p = target.
  double equality_target() const { return y_star - y_now + phi_hat.dot(p_tilde); }
};

// Approximate flows of the monitored lines: flow = sensitivity p + offset.
struct FlowConstraints {
  std::vector<int> lines;  // line indices with a finite limit
  Matrix sensitivity;
  Vector offset;
  Vector limit;
  int size() const { return static_cast<int>(lines.size()); }
};
FlowConstraints build_flow_constraints(const DispatchProblem& prob, const net::FeederModel& feeder);

struct DispatchResult {
  QpResult qp;
  Vector p;          // dispatch, kW
  Vector flows;      // approximate flows of the monitored lines
  std::vector<std::string> active_labels;
  bool feasible() const { return qp.status == QpStatus::optimal; }
};

QuadraticProgram to_qp(const DispatchProblem& prob, const FlowConstraints& flows);
DispatchResult solve_odcp(const DispatchProblem& prob, const FlowConstraints& flows);
DispatchResult solve_odcp(const DispatchProblem& prob, const net::FeederModel& feeder);

}  // namespace dercoord::odcp

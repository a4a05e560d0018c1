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

#include <optional>
#include <string>

#include "dercoord/common.hpp"
#include "dercoord/rng.hpp"

// Fast-timescale randomized tracking controller.
namespace dercoord::controller {

struct ControlState {
  Vector u;           // kW
  double y = 0.0;     // kW, last measurement
  double e = 0.0;     // y - y_star
  Vector u_prev;
  double y_prev = 0.0;
  long k = 0;
};

struct ControllerConfig {
  double beta = 0.02;
  double epsilon = 0.01;
  bool randomized = true;
  double delta = 1.0;  // kW
  long max_iters = 1000;

  // Checks beta against the admissible interval unless allow_unsafe_beta.
  void validate(int n, double b_lo, double b_hi, bool allow_unsafe_beta) const;
};

// Bernoulli(0.5) diagonal of the update mask, as a 0/1 vector.
Vector sample_mask(Rng& rng, int n);
inline Vector full_mask(int n) { return Vector::Ones(n); }

// proj_U(u - beta e (w .* phi_hat))
Vector tracking_step(const Vector& u, double e, const Vector& phi_hat, const Vector& mask, double beta,
                     const Box& bounds);
ControlState tracking_step(const ControlState& state, const Vector& phi_hat, const Vector& mask, double beta,
                           const Box& bounds);

struct BetaInterval {
  double lower;
  double upper;
  bool contains(double beta) const { return beta > lower && beta < upper; }
  bool empty() const { return !(lower < upper); }
};

// Tracking guarantee: (eps / b_lo^2, 1 / (n b_hi^2)), requires
// 0 < eps < b_lo^2 / (n b_hi^2).
BetaInterval beta_bounds(int n, double b_lo, double b_hi, double epsilon);
// Estimation guarantee: (eps / (n b_lo^2), 1 / (n b_hi^2)), requires
// 0 < eps < b_lo^2 / b_hi^2.
BetaInterval beta_bounds_estimation(int n, double b_lo, double b_hi, double epsilon);
// Rate guarantee with a full mask: same interval as beta_bounds but only
// eps > 0 is required, so the result may be empty.
BetaInterval beta_bounds_rate(int n, double b_lo, double b_hi, double epsilon);

// Effective sensitivity reproducing a projected step without projection:
// u_new - u_prev = -beta e (w .* phi_bar) with 0 <= phi_bar <= phi_hat.
struct ProjectionWitness {
  bool exists = false;
  Vector phi_bar;
  double worst_violation = 0.0;  // how far the best candidate leaves [0, phi_hat]
};
ProjectionWitness projection_witness(const Vector& u_prev, const Vector& u_new, double e_prev, double beta,
                                     const Vector& mask, const Vector& phi_hat, double tol = 1e-9);

enum class Equilibrium { tracking, saturated_low, saturated_high, unclassified };
std::string to_string(Equilibrium eq);

Equilibrium classify_equilibrium(const Vector& u, double e, const Box& bounds, double delta, double tol = 1e-9);

}  // namespace dercoord::controller

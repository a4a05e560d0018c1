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


#include "dercoord/controller.hpp"

#include <algorithm>
#include <cmath>

#include "dercoord/estimator.hpp"

namespace dercoord::controller {

void ControllerConfig::validate(int n, double b_lo, double b_hi, bool allow_unsafe_beta) const {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  if (max_iters < 0) throw ValidationError("max_iters must be non-negative");
  if (allow_unsafe_beta) return;
  const auto range = beta_bounds(n, b_lo, b_hi, epsilon);
  if (!range.contains(beta)) {
    throw ValidationError("beta = " + std::to_string(beta) + " outside the admissible interval (" +
                          std::to_string(range.lower) + ", " + std::to_string(range.upper) +
                          "); pass --allow-unsafe-beta to run anyway");
  }
}

Vector sample_mask(Rng& rng, int n) {
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.next_bit() ? 1.0 : 0.0;
  return w;
}

Vector tracking_step(const Vector& u, double e, const Vector& phi_hat, const Vector& mask, double beta,
                     const Box& bounds) {
  if (u.size() != phi_hat.size() || u.size() != mask.size() || u.size() != bounds.size()) {
    throw std::invalid_argument("tracking_step: size mismatch");
  }
  return estimator::project_box(u - beta * e * mask.cwiseProduct(phi_hat), bounds.lower, bounds.upper);
}

ControlState tracking_step(const ControlState& state, const Vector& phi_hat, const Vector& mask, double beta,
                           const Box& bounds) {
  ControlState next = state;
  next.u_prev = state.u;
  next.y_prev = state.y;
  next.u = tracking_step(state.u, state.e, phi_hat, mask, beta, bounds);
  next.k = state.k + 1;
  return next;
}

namespace {

void check_box(int n, double b_lo, double b_hi) {
  if (n <= 0) throw ValidationError("need at least one DER");
  if (!(b_lo > 0.0 && b_lo <= b_hi)) throw ValidationError("sensitivity box needs 0 < b_lo <= b_hi");
}

}  // namespace

BetaInterval beta_bounds(int n, double b_lo, double b_hi, double epsilon) {
  check_box(n, b_lo, b_hi);
  const double cap = b_lo * b_lo / (n * b_hi * b_hi);
  if (!(epsilon > 0.0 && epsilon < cap)) {
    throw ValidationError("epsilon must lie in (0, " + std::to_string(cap) + ")");
  }
  return {epsilon / (b_lo * b_lo), 1.0 / (n * b_hi * b_hi)};
}

BetaInterval beta_bounds_estimation(int n, double b_lo, double b_hi, double epsilon) {
  check_box(n, b_lo, b_hi);
  const double cap = b_lo * b_lo / (b_hi * b_hi);
  if (!(epsilon > 0.0 && epsilon < cap)) {
    throw ValidationError("epsilon must lie in (0, " + std::to_string(cap) + ")");
  }
  return {epsilon / (n * b_lo * b_lo), 1.0 / (n * b_hi * b_hi)};
}

BetaInterval beta_bounds_rate(int n, double b_lo, double b_hi, double epsilon) {
  check_box(n, b_lo, b_hi);
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  return {epsilon / (b_lo * b_lo), 1.0 / (n * b_hi * b_hi)};
}

ProjectionWitness projection_witness(const Vector& u_prev, const Vector& u_new, double e_prev, double beta,
                                     const Vector& mask, const Vector& phi_hat, double tol) {
  const auto n = u_prev.size();
  ProjectionWitness out;
  out.phi_bar = Vector::Zero(n);
  const Vector du = u_new - u_prev;
  const double scale = beta * e_prev;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double slack = tol * (1.0 + std::abs(u_prev[i]));
    if (mask[i] == 0.0 || scale == 0.0) {
      // No update was requested; the iterate must not have moved.
      out.worst_violation = std::max(out.worst_violation, std::abs(du[i]) - slack);
      out.phi_bar[i] = mask[i] == 0.0 ? 0.0 : phi_hat[i];
      continue;
    }
    const double bar = -du[i] / scale;
    out.phi_bar[i] = bar;
    const double rel = slack / std::abs(scale);
    out.worst_violation = std::max({out.worst_violation, -bar - rel, bar - phi_hat[i] - rel});
  }
  out.exists = out.worst_violation <= 0.0;
  return out;
}

std::string to_string(Equilibrium eq) {
  switch (eq) {
    case Equilibrium::tracking: return "tracking";
    case Equilibrium::saturated_low: return "saturated_low";
    case Equilibrium::saturated_high: return "saturated_high";
    case Equilibrium::unclassified: return "unclassified";
  }
  return "unclassified";
}

Equilibrium classify_equilibrium(const Vector& u, double e, const Box& bounds, double delta, double tol) {
  if (std::abs(e) <= delta) return Equilibrium::tracking;
  const bool at_low = ((u - bounds.lower).array().abs() <= tol).all();
  const bool at_high = ((u - bounds.upper).array().abs() <= tol).all();
  if (at_low && e > 0.0) return Equilibrium::saturated_low;
  if (at_high && e < 0.0) return Equilibrium::saturated_high;
  return Equilibrium::unclassified;
}

}  // namespace dercoord::controller

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


#include "dercoord/estimator.hpp"

#include <cmath>

namespace dercoord::estimator {

SensitivityEstimate SensitivityEstimate::make(Vector phi0, double b_lo, double b_hi) {
  if (!(b_lo > 0.0 && b_lo <= b_hi)) throw ValidationError("sensitivity box needs 0 < b_lo <= b_hi");
  if (!((phi0.array() >= b_lo).all() && (phi0.array() <= b_hi).all())) {
    throw ValidationError("initial sensitivity estimate lies outside [b_lo, b_hi]");
  }
  return {std::move(phi0), b_lo, b_hi};
}

void EstimatorConfig::validate() const {
  if (!(b_lo > 0.0 && b_lo <= b_hi)) throw ValidationError("sensitivity box needs 0 < b_lo <= b_hi");
  if (!(alpha_guard > 0.0)) throw ValidationError("alpha_guard must be positive");
  if (alpha_mode == AlphaMode::constant && !(alpha_const > 0.0)) {
    throw ValidationError("constant estimation step must be positive");
  }
  if (alpha_mode == AlphaMode::adaptive && !(alpha_gain > 0.0 && alpha_gain < 2.0 + 1e-12)) {
    throw ValidationError("adaptive step gain must lie in (0, 2]");
  }
}

Vector project_box(const Vector& v, const Vector& lo, const Vector& hi) {
  if (v.size() != lo.size() || v.size() != hi.size()) throw std::invalid_argument("project_box: size mismatch");
  return v.cwiseMax(lo).cwiseMin(hi);
}

Vector project_box(const Vector& v, double lo, double hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

std::optional<double> adaptive_alpha(const Vector& delta_u, double guard, double gain) {
  const double norm2 = delta_u.squaredNorm();
  if (!(norm2 >= guard)) return std::nullopt;
  return gain / norm2;
}

std::optional<double> step_size(const EstimatorConfig& cfg, const Vector& delta_u) {
  if (cfg.alpha_mode == AlphaMode::adaptive) return adaptive_alpha(delta_u, cfg.alpha_guard, cfg.alpha_gain);
  if (!(delta_u.squaredNorm() >= cfg.alpha_guard)) return std::nullopt;
  return cfg.alpha_const;
}

SensitivityEstimate estimation_step(const SensitivityEstimate& est, const Vector& delta_u_prev, double delta_y_prev,
                                    std::optional<double> alpha) {
  if (delta_u_prev.size() != est.phi_hat.size()) throw std::invalid_argument("estimation_step: size mismatch");
  if (!alpha) return est;
  const double residual = delta_u_prev.dot(est.phi_hat) - delta_y_prev;
  SensitivityEstimate next = est;
  next.phi_hat = project_box(est.phi_hat - *alpha * residual * delta_u_prev, est.b_lo, est.b_hi);
  return next;
}

double predict_output(const SensitivityEstimate& est, double y_prev, const Vector& u, const Vector& u_prev) {
  if (u.size() != est.phi_hat.size() || u_prev.size() != u.size()) {
    throw std::invalid_argument("predict_output: size mismatch");
  }
  return y_prev + est.phi_hat.dot(u - u_prev);
}

}  // namespace dercoord::estimator

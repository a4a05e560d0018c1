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

#include "dercoord/common.hpp"

// Online sensitivity estimator: one projected-gradient step per iteration on
// the squared one-step output prediction error.
namespace dercoord::estimator {

struct SensitivityEstimate {
  Vector phi_hat;
  double b_lo = 0.8;
  double b_hi = 1.2;

  // Starts at `phi0`, which must already lie in the box.
  static SensitivityEstimate make(Vector phi0, double b_lo, double b_hi);
};

enum class AlphaMode { adaptive, constant };

struct EstimatorConfig {
  double b_lo = 0.8;
  double b_hi = 1.2;
  AlphaMode alpha_mode = AlphaMode::adaptive;
  double alpha_const = 0.0;
  // Adaptive step is gain / |du|^2. Gain 1 lands exactly on the secant
  // solution; gain 2 reflects the estimate across it (norm preserving).
  double alpha_gain = 1.0;
  double alpha_guard = 1e-12;  // |du|^2 below this skips the update

  void validate() const;
};

Vector project_box(const Vector& v, const Vector& lo, const Vector& hi);
Vector project_box(const Vector& v, double lo, double hi);

// gain / |du|^2, or nullopt when |du|^2 < guard (no excitation, skip).
std::optional<double> adaptive_alpha(const Vector& delta_u, double guard, double gain = 2.0);

// Step size the configured rule yields for this excitation; nullopt skips.
std::optional<double> step_size(const EstimatorConfig& cfg, const Vector& delta_u);

// phi <- proj_B(phi - alpha du (du.phi - dy)). A missing alpha returns est.
SensitivityEstimate estimation_step(const SensitivityEstimate& est, const Vector& delta_u_prev, double delta_y_prev,
                                    std::optional<double> alpha);

// y_prev + phi_hat . (u - u_prev)
double predict_output(const SensitivityEstimate& est, double y_prev, const Vector& u, const Vector& u_prev);

}  // namespace dercoord::estimator

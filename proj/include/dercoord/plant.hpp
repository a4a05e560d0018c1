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

#include <memory>

#include "dercoord/common.hpp"
#include "dercoord/net.hpp"

// Nonlinear ground-truth plant: AC power flow on a radial feeder by
// backward/forward sweep, plus a finite-difference sensitivity oracle.
namespace dercoord::plant {

struct LoadProfile {
  Vector p_d;  // kW, length N, negative entries model uncontrollable generation
  Vector q_d;  // kVAr

  static LoadProfile nominal(const net::FeederModel& feeder);
};

struct OperatingPoint {
  Vector v_mag;      // pu, length N+1
  Vector v_ang;      // rad, length N+1
  double y = 0.0;    // kW, positive means the feeder exports
  Vector q_der;      // kVAr, length n
  Vector line_p;     // kW at the sending end, positive in the line's direction
  double losses = 0.0;       // kW
  double max_mismatch = 0.0; // pu
  int sweeps = 0;
};

struct PowerFlowOptions {
  int max_sweeps = 100;
  double voltage_tol = 1e-12;  // pu, on the largest voltage update of a sweep
  double mismatch_tol = 1e-8;  // pu
  int max_pv_iters = 60;
  double pv_tol = 1e-12;       // pu, on |V| - setpoint at constant-voltage buses
};

// Always starts from a flat profile, so the result depends on the inputs
// alone. Throws ConvergenceError when the sweep diverges or a constant-voltage
// DER runs out of reactive range, ValidationError on bad inputs.
OperatingPoint solve_power_flow(const net::FeederModel& feeder, const Vector& u, const LoadProfile& loads,
                                const PowerFlowOptions& options = {});

inline double measure_output(const OperatingPoint& op) { return op.y; }

// Central differences of y w.r.t. each DER; falls back to a one-sided
// three-point stencil for a DER whose box is too close.
Vector fd_sensitivity(const net::FeederModel& feeder, const Vector& u, const LoadProfile& loads,
                      double h_step = 0.1);
Vector fd_sensitivity_serial(const net::FeederModel& feeder, const Vector& u, const LoadProfile& loads,
                             double h_step = 0.1);

// What the simulator drives. measure() is the only thing the controller and
// estimator see; sensitivity() is the oracle for scoring.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual int size() const = 0;
  virtual const Box& box() const = 0;
  virtual double measure(const Vector& u) const = 0;
  virtual Vector sensitivity(const Vector& u) const = 0;
};

class FeederPlant final : public Plant {
 public:
  FeederPlant(std::shared_ptr<const net::FeederModel> feeder, LoadProfile loads, double fd_step = 0.1);

  int size() const override { return feeder_->der_count(); }
  const Box& box() const override { return box_; }
  double measure(const Vector& u) const override;
  Vector sensitivity(const Vector& u) const override;
  OperatingPoint solve(const Vector& u) const;

  const net::FeederModel& feeder() const { return *feeder_; }
  const LoadProfile& loads() const { return loads_; }

 private:
  std::shared_ptr<const net::FeederModel> feeder_;
  LoadProfile loads_;
  double fd_step_;
  Box box_;
};

// y = phi . u + offset
class LinearPlant final : public Plant {
 public:
  LinearPlant(Vector phi, double offset, Box box);

  int size() const override { return static_cast<int>(phi_.size()); }
  const Box& box() const override { return box_; }
  double measure(const Vector& u) const override { return phi_.dot(u) + offset_; }
  Vector sensitivity(const Vector&) const override { return phi_; }
  const Vector& phi() const { return phi_; }
  double offset() const { return offset_; }

 private:
  Vector phi_;
  double offset_;
  Box box_;
};

}  // namespace dercoord::plant

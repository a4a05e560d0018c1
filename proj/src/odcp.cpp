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


#include "dercoord/odcp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dercoord::odcp {

std::string to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::unbounded: return "unbounded";
  }
  return "infeasible";
}

double KktResiduals::max() const { return std::max({stationarity, primal, dual, complementarity}); }

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Vector& x, const Vector& eq_mult,
                           const Vector& ineq_mult) {
  KktResiduals r;
  // H x + c + A' lambda + G' mu = 0 with mu >= 0.
  Vector grad = qp.H * x + qp.c;
  if (qp.A.rows() > 0) grad += qp.A.transpose() * eq_mult;
  if (qp.G.rows() > 0) grad += qp.G.transpose() * ineq_mult;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (qp.A.rows() > 0) r.primal = (qp.A * x - qp.b).cwiseAbs().maxCoeff();
  if (qp.G.rows() > 0) {
    const Vector slack = qp.G * x - qp.h;
    r.primal = std::max(r.primal, slack.maxCoeff());
    r.dual = std::max(0.0, -ineq_mult.minCoeff());
    r.complementarity = slack.cwiseProduct(ineq_mult).cwiseAbs().maxCoeff();
  }
  return r;
}

namespace {

struct KktSolve {
  Vector x;
  Vector mult;  // one per column of N, in order
  bool ok = false;
};

// Solves [H N; N' 0][x; m] = [rhs_x; rhs_m].
KktSolve kkt_solve(const Matrix& H, const Matrix& N, const Vector& rhs_x, const Vector& rhs_m) {
  const auto n = H.rows();
  const auto m = N.cols();
  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, m) = N;
  K.bottomLeftCorner(m, n) = N.transpose();
  Vector rhs(n + m);
  rhs << rhs_x, rhs_m;
  Eigen::FullPivLU<Matrix> lu(K);
  KktSolve out;
  if (!lu.isInvertible()) return out;
  const Vector sol = lu.solve(rhs);
  out.x = sol.head(n);
  out.mult = sol.tail(m);
  out.ok = sol.allFinite();
  return out;
}

}  // namespace

// Constraints are handled internally as n_j' x >= d_j (negated G rows).
// Equalities stay active throughout and never leave the working set.
QpResult solve_qp(const QuadraticProgram& qp) {
  const auto n = qp.H.rows();
  const auto n_eq = qp.A.rows();
  const auto n_in = qp.G.rows();
  QpResult res;
  res.ineq_multipliers = Vector::Zero(n_in);
  res.eq_multipliers = Vector::Zero(n_eq);
  if (qp.H.cols() != n || qp.c.size() != n || (n_eq && qp.A.cols() != n) || qp.b.size() != n_eq ||
      (n_in && qp.G.cols() != n) || qp.h.size() != n_in) {
    throw std::invalid_argument("solve_qp: inconsistent dimensions");
  }
  Eigen::LLT<Matrix> llt(qp.H);
  if (llt.info() != Eigen::Success) {
    res.status = QpStatus::unbounded;
    res.message = "Hessian is not positive definite";
    return res;
  }

  std::vector<int> active;  // inequality indices in the working set
  Vector u_ineq;            // their multipliers (>= 0)

  auto normals = [&]() {
    Matrix N(n, n_eq + static_cast<Eigen::Index>(active.size()));
    if (n_eq) N.leftCols(n_eq) = qp.A.transpose();
    for (std::size_t j = 0; j < active.size(); ++j) N.col(n_eq + j) = -qp.G.row(active[j]).transpose();
    return N;
  };

  // Equality-constrained minimizer as the starting point.
  Vector x;
  {
    const Matrix N = n_eq ? Matrix(qp.A.transpose()) : Matrix(n, 0);
    const auto s = kkt_solve(qp.H, N, -qp.c, qp.b);
    if (!s.ok) {
      res.status = QpStatus::infeasible;
      res.message = "equality constraints are inconsistent";
      return res;
    }
    x = s.x;
  }

  const double scale = 1.0 + (n_in ? qp.h.cwiseAbs().maxCoeff() : 0.0);
  const double feas_tol = 1e-11 * scale;
  const int max_iter = 50 * static_cast<int>(n + n_in + 1);
  int iter = 0;
  while (true) {
    // Most violated inequality outside the working set.
    int p = -1;
    double worst = feas_tol;
    for (Eigen::Index j = 0; j < n_in; ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      const double viol = qp.G.row(j).dot(x) - qp.h[j];
      if (viol > worst) {
        worst = viol;
        p = static_cast<int>(j);
      }
    }
    if (p < 0) break;
    const Vector np = -qp.G.row(p).transpose();
    double u_p = 0.0;
    bool added = false;
    while (!added) {
      if (++iter > max_iter) {
        res.status = QpStatus::infeasible;
        res.message = "active-set iteration limit reached";
        res.iterations = iter;
        return res;
      }
      const Matrix N = normals();
      const auto s = kkt_solve(qp.H, N, np, Vector::Zero(N.cols()));
      if (!s.ok) {
        res.status = QpStatus::infeasible;
        res.message = "singular working set";
        res.iterations = iter;
        return res;
      }
      // H z + N r = n_p, N'z = 0. Step x += t z, dual u -= t r, u_p += t.
      const Vector z = s.x;
      const Vector r = s.mult;
      double t1 = std::numeric_limits<double>::infinity();
      int drop = -1;
      for (std::size_t j = 0; j < active.size(); ++j) {
        const double rj = r[n_eq + j];
        if (rj > 1e-14 && u_ineq[j] / rj < t1) {
          t1 = u_ineq[j] / rj;
          drop = static_cast<int>(j);
        }
      }
      const double zz = z.dot(np);
      const double viol = qp.G.row(p).dot(x) - qp.h[p];
      double t2 = std::numeric_limits<double>::infinity();
      if (z.cwiseAbs().maxCoeff() > 1e-13 * (1.0 + np.cwiseAbs().maxCoeff()) && zz > 0.0) t2 = viol / zz;
      if (!std::isfinite(t1) && !std::isfinite(t2)) {
        res.status = QpStatus::infeasible;
        res.active = active;
        res.active.push_back(p);
        res.message = "constraint " + std::to_string(p) +
                      " cannot be satisfied together with the equalities and the working set";
        res.x = x;
        res.iterations = iter;
        return res;
      }
      const double t = std::min(t1, t2);
      x += t * z;
      for (std::size_t j = 0; j < active.size(); ++j) u_ineq[j] -= t * r[n_eq + j];
      u_p += t;
      if (t2 <= t1) {
        active.push_back(p);
        u_ineq.conservativeResize(static_cast<Eigen::Index>(active.size()));
        u_ineq[u_ineq.size() - 1] = u_p;
        added = true;
      } else {
        active.erase(active.begin() + drop);
        Vector kept(static_cast<Eigen::Index>(active.size()));
        for (Eigen::Index j = 0, w = 0; j < u_ineq.size(); ++j) {
          if (j != drop) kept[w++] = u_ineq[j];
        }
        u_ineq = kept;
      }
    }
  }

  // Polish: re-solve the KKT system on the final working set.
  {
    const Matrix N = normals();
    Vector rhs_m(N.cols());
    if (n_eq) rhs_m.head(n_eq) = qp.b;
    for (std::size_t j = 0; j < active.size(); ++j) rhs_m[n_eq + j] = -qp.h[active[j]];
    const auto s = kkt_solve(qp.H, N, -qp.c, rhs_m);
    if (s.ok) {
      x = s.x;
      // H x + c = N m with m from the solve convention H x + N m' = -c.
      if (n_eq) res.eq_multipliers = s.mult.head(n_eq);
      for (std::size_t j = 0; j < active.size(); ++j) res.ineq_multipliers[active[j]] = -s.mult[n_eq + j];
    } else {
      if (n_eq) res.eq_multipliers.setZero();
      for (std::size_t j = 0; j < active.size(); ++j) res.ineq_multipliers[active[j]] = u_ineq[j];
    }
  }
  // Sign convention of the residual check: grad + A'l + G'mu = 0, mu >= 0.
  // kkt_solve returned H x + N m = -c where N holds A' and -G' columns, so
  // l = m_eq and mu = -m_ineq, which the assignment above already applied.
  res.status = QpStatus::optimal;
  res.x = x;
  res.active = active;
  std::sort(res.active.begin(), res.active.end());
  res.objective = 0.5 * x.dot(qp.H * x) + qp.c.dot(x);
  res.kkt = kkt_residuals(qp, x, res.eq_multipliers, res.ineq_multipliers);
  res.iterations = iter;
  return res;
}

void DispatchProblem::validate() const {
  const auto n = p_tilde.size();
  if (phi_hat.size() != n || box.size() != n || cost.quadratic.size() != n || cost.linear.size() != n) {
    throw ValidationError("dispatch problem vectors disagree in length");
  }
  if (!((box.lower.array() <= box.upper.array()).all())) throw ValidationError("dispatch box is inverted");
  if (!((cost.quadratic.array() > 0.0).all())) {
    throw ValidationError("quadratic cost coefficients must be strictly positive");
  }
  if (flow_limits.size() && !((flow_limits.array() > 0.0).all())) {
    throw ValidationError("flow limits must be positive");
  }
  if (!std::isfinite(y_now) || !std::isfinite(y_star) || !phi_hat.allFinite()) {
    throw ValidationError("dispatch problem has non-finite data");
  }
}

double DispatchProblem::objective(const Vector& p) const {
  return cost.quadratic.dot((p - p_tilde).cwiseAbs2()) + cost.linear.dot(p);
}

FlowConstraints build_flow_constraints(const DispatchProblem& prob, const net::FeederModel& feeder) {
  FlowConstraints fc;
  if (prob.flow_limits.size() != feeder.line_count()) {
    throw ValidationError("flow limit vector length does not match the line count");
  }
  if (prob.p_d.size() != feeder.bus_count()) throw ValidationError("load vector length does not match the bus count");
  const Matrix full = net::der_flow_sensitivity(feeder);
  const Vector base = net::line_flows_approx(feeder, -prob.p_d);
  for (int l = 0; l < feeder.line_count(); ++l) {
    if (std::isfinite(prob.flow_limits[l])) fc.lines.push_back(l);
  }
  const auto m = static_cast<Eigen::Index>(fc.lines.size());
  fc.sensitivity.resize(m, feeder.der_count());
  fc.offset.resize(m);
  fc.limit.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    fc.sensitivity.row(r) = full.row(fc.lines[r]);
    fc.offset[r] = base[fc.lines[r]];
    fc.limit[r] = prob.flow_limits[fc.lines[r]];
  }
  return fc;
}

QuadraticProgram to_qp(const DispatchProblem& prob, const FlowConstraints& flows) {
  const auto n = prob.p_tilde.size();
  const auto m = static_cast<Eigen::Index>(flows.size());
  QuadraticProgram qp;
  qp.H = (2.0 * prob.cost.quadratic).asDiagonal();
  qp.c = prob.cost.linear - 2.0 * prob.cost.quadratic.cwiseProduct(prob.p_tilde);
  qp.A = prob.phi_hat.transpose();
  qp.b = Vector::Constant(1, prob.equality_target());
  qp.G = Matrix::Zero(2 * n + 2 * m, n);
  qp.h = Vector::Zero(2 * n + 2 * m);
  for (Eigen::Index i = 0; i < n; ++i) {
    qp.G(i, i) = -1.0;
    qp.h[i] = -prob.box.lower[i];
    qp.G(n + i, i) = 1.0;
    qp.h[n + i] = prob.box.upper[i];
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    qp.G.row(2 * n + r) = flows.sensitivity.row(r);
    qp.h[2 * n + r] = flows.limit[r] - flows.offset[r];
    qp.G.row(2 * n + m + r) = -flows.sensitivity.row(r);
    qp.h[2 * n + m + r] = flows.limit[r] + flows.offset[r];
  }
  return qp;
}

DispatchResult solve_odcp(const DispatchProblem& prob, const FlowConstraints& flows) {
  prob.validate();
  const auto n = prob.p_tilde.size();
  const auto m = static_cast<Eigen::Index>(flows.size());
  DispatchResult out;
  out.qp = solve_qp(to_qp(prob, flows));
  if (out.qp.status == QpStatus::infeasible) {
    out.qp.message = "equality target unreachable within the DER box and flow limits: " + out.qp.message;
  }
  if (!out.feasible()) return out;
  out.p = out.qp.x;
  // Constant term dropped by the QP form.
  out.qp.objective = prob.objective(out.p);
  out.flows = m ? Vector(flows.sensitivity * out.p + flows.offset) : Vector();
  for (int j : out.qp.active) {
    if (j < n) {
      out.active_labels.push_back("lower:" + std::to_string(j));
    } else if (j < 2 * n) {
      out.active_labels.push_back("upper:" + std::to_string(j - n));
    } else if (j < 2 * n + m) {
      out.active_labels.push_back("flow_max:" + std::to_string(flows.lines[j - 2 * n] + 1));
    } else {
      out.active_labels.push_back("flow_min:" + std::to_string(flows.lines[j - 2 * n - m] + 1));
    }
  }
  return out;
}

DispatchResult solve_odcp(const DispatchProblem& prob, const net::FeederModel& feeder) {
  prob.validate();
  return solve_odcp(prob, build_flow_constraints(prob, feeder));
}

}  // namespace dercoord::odcp

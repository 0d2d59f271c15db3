/* Copyright (C) 2026 the cfcoex authors
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *   http://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <Eigen/Dense>
#include <string>

#include "cfcoex/config.hpp"
#include "cfcoex/moments.hpp"

namespace cfcoex {

// Per-device SINR target: the rate constraint and the decoding floor both
// lower-bound the same SINR, so they merge into max(s, 2^{r N tau_c /
// (tau_u B)} - 1).
double rho_required(double rate_bps, const SystemConfig& cfg);

struct QosTargets {
    double gamma_target = 0.0;   // user SINR implied by the bisection level
    Eigen::VectorXd rho_target;  // per-device floor, >= cfg.sinr_floor

    static QosTargets for_level(double t_bps, const SystemConfig& cfg, int num_devices);
};

struct PowerAllocation {
    Eigen::VectorXd p;          // user transmit powers (W)
    Eigen::VectorXd q;          // device transmit powers (W)
    double objective_t = 0.0;   // achieved max-min broadband rate (bit/s)
    bool feasible = false;
    long iterations = 0;        // fixed-point iterations spent

    // diagnostics
    int bisection_steps = 0;
    double bisection_level = 0.0;          // last feasible level t*
    double certificate_level = 0.0;        // probed level t* + 2 tol
    bool certificate_infeasible = false;   // probe verdict
    double tolerance = 0.0;                // bisection tolerance used
    std::string infeasibility_reason;      // empty when feasible
    double max_constraint_violation = 0.0; // re-evaluated through public SINRs

    std::string to_json() const;
};

// Solver knobs; defaults are part of the artifact contract.
struct SolverOptions {
    long max_iterations = 10000;
    double convergence_rtol = 1e-10;  // per-component relative change
    double cap_rtol = 1e-9;           // slack on power caps / constraint checks
    int max_bisection_steps = 60;
};

// Minimal-power solution of {gamma_u >= gamma_target, rho_d >= rho_target,
// 0 <= p <= Pu, 0 <= q <= Pd} by monotone fixed-point iteration from zero:
// each step solves every terminal's own SINR constraint with equality given
// the others. Iterates are componentwise non-decreasing; the run is
// infeasible when a component crosses its cap or the iteration fails to
// converge.
PowerAllocation feasibility(double t_bps, const UserMoments& um,
                            const DeviceMoments& dm, const SystemConfig& cfg,
                            const SolverOptions& opt = {});

// Bisection on the common user-rate level over [0, t_hi] with
// t_hi = max_u (tau_u/tau_c) B log2(1 + Pu delta_u / xi_u). Emits a
// certificate: the returned level re-checks feasible and level + 2 tol
// re-checks infeasible.
PowerAllocation solve_opc(const UserMoments& um, const DeviceMoments& dm,
                          const SystemConfig& cfg, const SolverOptions& opt = {});

// Benchmarks. UPC fixes every user at full power; FPC scales user powers by
// the inverse aggregate serving LSF raised to theta (cfg.fpc_theta). Both
// then give devices the minimal powers meeting their targets.
PowerAllocation solve_upc(const UserMoments& um, const DeviceMoments& dm,
                          const SystemConfig& cfg, const SolverOptions& opt = {});
PowerAllocation solve_fpc(const UserMoments& um, const DeviceMoments& dm,
                          const SystemConfig& cfg, const Scenario& sc,
                          const SolverOptions& opt = {});

// Largest violation of C1-C3 (and the user level t for OPC results),
// re-evaluated through sinr_user / sinr_device; relative, 0 when satisfied.
double validate_allocation(const PowerAllocation& alloc, double t_bps,
                           const UserMoments& um, const DeviceMoments& dm,
                           const SystemConfig& cfg);

}  // namespace cfcoex

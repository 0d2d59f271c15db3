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
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfcoex/channel.hpp"
#include "cfcoex/config.hpp"
#include "cfcoex/scenario.hpp"
#include "cfcoex/sequences.hpp"

namespace cfcoex {

// Statistical quantities entering the broadband-user SINR under maximum
// ratio combining. Powers are never baked in: the SINR is assembled later
// as a ratio that is linear in the transmit powers.
struct UserMoments {
    Eigen::VectorXd delta;     // desired-signal gain |D_u|^2
    Eigen::VectorXd upsilon;   // channel-uncertainty power
    Eigen::MatrixXd kappa;     // Ku x Ku broadband interference (diag unused)
    Eigen::MatrixXd varkappa;  // Ku x Kd device-on-user interference
    Eigen::VectorXd xi;        // noise power
};

// Device-side analog after despreading. nu follows the printed closed form
// verbatim, which is known to disagree with the sampled ground truth (it
// can even go negative); the Monte Carlo estimator is authoritative and the
// comparison report records the gap.
struct DeviceMoments {
    Eigen::VectorXd lambda;  // |S_d|^2
    Eigen::VectorXd nu;      // effective-channel variance (as printed)
    Eigen::MatrixXd eps;     // Kd x Kd device-on-device interference
    Eigen::MatrixXd vareps;  // Kd x Ku user-on-device interference (total over PRBs)
    Eigen::VectorXd chi;     // noise power after despreading
};

class UnsupportedModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Closed-form user moments; valid for arbitrary (also spatially correlated)
// covariance matrices.
UserMoments user_moments_closed(const Scenario& sc, const EstimatorSet& est,
                                const PilotBook& pilots, const SystemConfig& cfg);

// Selects how the device effective-channel variance nu is evaluated.
//
// `as_printed` follows the published closed form verbatim. Its subtracted
// term mixes the dimensionless estimation gain into a power-squared
// bracket, which drives nu enormously negative on physical inputs; the
// value is returned untouched so the comparison report can surface the gap
// against the Monte Carlo ground truth.
//
// `variance_exact` evaluates the same model quantity
//   nu_d = Var(sum_{n,m} b |t^H g|^2)
// through its Gaussian moment expansion (per block: E|x|^4 - (E|x|^2)^2
// with E a^k the chi-square moments of ||ghat||^2). It agrees with the
// Monte Carlo estimator and is the form the power-control pipeline
// consumes: a negative nu in the SINR denominator makes the device SINR at
// the solved powers numerically un-evaluable (the denominator cancels to
// ~1e-28 relative), so re-validation through the public SINR operations
// would be impossible.
enum class DeviceNuForm { as_printed, variance_exact };

// Closed-form device moments, valid for uncorrelated fading only; throws
// UnsupportedModelError on a correlated scenario (use mc_device_moments).
DeviceMoments device_moments_closed(const Scenario& sc, const EstimatorSet& est,
                                    const PilotBook& pilots, const SystemConfig& cfg,
                                    DeviceNuForm nu_form = DeviceNuForm::as_printed);

struct McUserMoments {
    UserMoments mean;
    UserMoments se;  // standard errors (Gaussian approximation for variances)
    long trials = 0;
};

struct McDeviceMoments {
    DeviceMoments mean;
    DeviceMoments se;
    long trials = 0;
};

// Signal-level Monte Carlo oracles: per trial draw fresh channels and
// estimation noise, combine with the estimated channels (MRC), form the
// exact decomposition terms of the received-signal model, and average.
// data_noise_scale multiplies the data-plane AWGN variance only (pilot
// noise untouched); it exists so noise-path linearity can be tested with
// shared randomness.
McUserMoments mc_user_moments(const Scenario& sc, const EstimatorSet& est,
                              const PilotBook& pilots, const SystemConfig& cfg,
                              long trials, std::uint64_t seed,
                              double data_noise_scale = 1.0);

McDeviceMoments mc_device_moments(const Scenario& sc, const EstimatorSet& est,
                                  const PilotBook& pilots, const SpreadingBook& codes,
                                  const SystemConfig& cfg, long trials,
                                  std::uint64_t seed, double data_noise_scale = 1.0);

// SINR of user u:
//   gamma_u = p_u delta_u /
//             (p_u upsilon_u + sum_{k!=u} p_k kappa_{u,k}
//              + sum_d q_d varkappa_{u,d} + xi_u)
Eigen::VectorXd sinr_user(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                          const UserMoments& um);

// Device analog with rho_d = q_d lambda_d / (q_d nu_d + ...).
Eigen::VectorXd sinr_device(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                            const DeviceMoments& dm);

// R_u = (tau_u / tau_c) B log2(1 + gamma_u); devices pay the 1/N spreading
// cost in the pre-log factor.
Eigen::VectorXd rate_user(const Eigen::VectorXd& gamma, const SystemConfig& cfg);
Eigen::VectorXd rate_device(const Eigen::VectorXd& rho, const SystemConfig& cfg);

// Closed-form versus Monte Carlo comparison. Relative gaps use
// |closed - mc| / max(|closed|, |mc|); a pair that is exactly zero on both
// routes (zero channels propagate exactly) reports gap 0. Device
// nu/eps/vareps entries exceeding flag_threshold are flagged rather than
// treated as errors: the sampled estimator is the ground truth there.
struct MomentRecord {
    std::string moment;
    double closed = 0.0;
    double mc = 0.0;
    double mc_stderr = 0.0;
    double rel_gap = 0.0;
    bool flagged = false;
};

std::vector<MomentRecord> compare_user_moments(const UserMoments& closed,
                                               const McUserMoments& mc);
std::vector<MomentRecord> compare_device_moments(const DeviceMoments& closed,
                                                 const McDeviceMoments& mc,
                                                 double flag_threshold = 0.05);

std::string comparison_report_json(const std::vector<MomentRecord>& user,
                                   const std::vector<MomentRecord>& device,
                                   long trials,
                                   const std::vector<std::string>& notes = {});

}  // namespace cfcoex

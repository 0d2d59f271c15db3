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
#include <string>
#include <vector>

#include "cfcoex/config.hpp"
#include "cfcoex/scenario.hpp"
#include "cfcoex/sequences.hpp"

namespace cfcoex {

// One Rayleigh realisation of every link for each of the N resource blocks.
// Links are independent across blocks, terminals and APs; h[n][u][m] is an
// L-vector with covariance R[u][m] (g/Q for devices). Storage is column
// blocks of an L x (N*K*M) matrix.
struct ChannelDraw {
    int num_prbs = 0;
    int num_users = 0;
    int num_devices = 0;
    int num_aps = 0;
    int antennas = 0;

    Eigen::MatrixXcd h;  // L x (N * Ku * M)
    Eigen::MatrixXcd g;  // L x (N * Kd * M)

    Eigen::Index user_col(int n, int u, int m) const {
        return (static_cast<Eigen::Index>(n) * num_users + u) * num_aps + m;
    }
    Eigen::Index device_col(int n, int d, int m) const {
        return (static_cast<Eigen::Index>(n) * num_devices + d) * num_aps + m;
    }

    auto user(int n, int u, int m) const { return h.col(user_col(n, u, m)); }
    auto device(int n, int d, int m) const { return g.col(device_col(n, d, m)); }

    // deterministic text table (one line per link and block) for regression
    // fixtures
    std::string to_text() const;
};

ChannelDraw draw_channels(const Scenario& sc, int num_prbs, std::uint64_t seed);

// Per-link MMSE machinery. For user u at AP m the least-squares pilot
// observation has covariance
//   C[u][m] = sum_k eta_k R[k][m] |phi_k^H phi_u|^2
//           + sum_d zeta_d Q[d][m] |pi_d^H phi_u|^2 + sigma2 I
// and the estimation matrix is A = R C^{-1} (device side: B = Q D^{-1}).
struct EstimatorSet {
    int num_users = 0;
    int num_devices = 0;
    int num_aps = 0;
    int antennas = 0;

    std::vector<Eigen::MatrixXcd> A;  // user MMSE matrices, Ku*M
    std::vector<Eigen::MatrixXcd> C;  // user observation covariances
    std::vector<Eigen::MatrixXcd> B;  // device MMSE matrices, Kd*M
    std::vector<Eigen::MatrixXcd> D;  // device observation covariances

    const Eigen::MatrixXcd& A_of(int u, int m) const { return A[static_cast<std::size_t>(u) * num_aps + m]; }
    const Eigen::MatrixXcd& C_of(int u, int m) const { return C[static_cast<std::size_t>(u) * num_aps + m]; }
    const Eigen::MatrixXcd& B_of(int d, int m) const { return B[static_cast<std::size_t>(d) * num_aps + m]; }
    const Eigen::MatrixXcd& D_of(int d, int m) const { return D[static_cast<std::size_t>(d) * num_aps + m]; }
};

EstimatorSet build_estimators(const Scenario& sc, const PilotBook& pilots,
                              const SystemConfig& cfg);

// MMSE channel estimates for every link and PRB: the pilot observation is
// assembled from the drawn channels of all co-pilot terminals plus fresh
// projected pilot noise (covariance sigma2 I, redrawn per PRB), then scaled
// by sqrt(power) A (resp. B).
struct ChannelEstimates {
    Eigen::MatrixXcd hhat;  // same layout as ChannelDraw::h
    Eigen::MatrixXcd ghat;  // same layout as ChannelDraw::g
};

ChannelEstimates estimate_channels(const ChannelDraw& draw, const EstimatorSet& est,
                                   const PilotBook& pilots, const SystemConfig& cfg,
                                   const Scenario& sc, std::uint64_t noise_seed);

namespace detail {

// Pre-computed square roots of the correlation matrices, for repeated draws.
struct CovarianceFactors {
    int num_aps = 0;
    int antennas = 0;
    std::vector<Eigen::MatrixXcd> user;    // Ku*M lower factors F, R = F F^H
    std::vector<Eigen::MatrixXcd> device;  // Kd*M

    static CovarianceFactors build(const Scenario& sc);
};

// Workspace-reusing kernels used by the Monte Carlo estimators.
void draw_channels_into(const CovarianceFactors& fac, int num_prbs,
                        std::uint64_t seed, ChannelDraw& out);
void estimate_into(const ChannelDraw& draw, const EstimatorSet& est,
                   const PilotBook& pilots, const SystemConfig& cfg,
                   const std::vector<double>& sigma2, std::uint64_t noise_seed,
                   ChannelEstimates& out);

}  // namespace detail

}  // namespace cfcoex

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
#include <functional>
#include <string>
#include <vector>

#include "cfcoex/config.hpp"

namespace cfcoex {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Euclidean distance on the wrap-around square (torus metric): per axis the
// shorter of the direct and the wrapped separation. Both points must lie in
// [0, side)^2.
double wrap_distance(const Point& p1, const Point& p2, double side);

// Micro-urban NLoS path loss, distance floored at 10 m:
//   PL(dB) = 36.7 log10(d) + 22.7 + 26 log10(fc / 1 GHz)
// Throws std::domain_error for non-positive distance.
double path_loss_db(double d_m, double fc_hz);

// Binary mask with ones at the Ms largest entries of lsf_row, ties broken
// towards the lower AP index. Throws std::domain_error when Ms > M.
std::vector<std::uint8_t> associate(const std::vector<double>& lsf_row, int ms);

enum class TerminalKind { user, device };

// Produces the L x L spatial correlation matrix for one link, given its
// large-scale fading coefficient. Must return a Hermitian PSD matrix with
// trace == lsf * L.
using CorrelationProvider = std::function<Eigen::MatrixXcd(
    double lsf, int antennas, TerminalKind kind, int terminal, int ap)>;

// Immutable deployment snapshot: geometry, large-scale fading, per-link
// correlation matrices, association masks, and per-AP noise power.
struct Scenario {
    int num_aps = 0;
    int antennas_per_ap = 0;
    int num_users = 0;
    int num_devices = 0;
    double area_side_m = 0.0;

    std::vector<Point> ap_positions;
    std::vector<Point> user_positions;
    std::vector<Point> device_positions;

    Eigen::MatrixXd alpha;  // Ku x M, trace(R)/L
    Eigen::MatrixXd beta;   // Kd x M

    std::vector<Eigen::MatrixXcd> R;  // Ku*M entries, L x L
    std::vector<Eigen::MatrixXcd> Q;  // Kd*M entries

    std::vector<std::vector<std::uint8_t>> assoc_user;    // a, Ku rows
    std::vector<std::vector<std::uint8_t>> assoc_device;  // b, Kd rows

    std::vector<double> sigma2;  // per-AP noise power (W)

    // true when every R/Q is a scaled identity; gates the closed-form
    // device moments
    bool uncorrelated = true;
    CorrelationModel correlation_model = CorrelationModel::uncorrelated;
    double correlation_coeff = 0.0;

    const Eigen::MatrixXcd& R_of(int u, int m) const { return R[static_cast<std::size_t>(u) * num_aps + m]; }
    const Eigen::MatrixXcd& Q_of(int d, int m) const { return Q[static_cast<std::size_t>(d) * num_aps + m]; }

    std::string to_json() const;
    static Scenario from_json(const std::string& text);
};

// Seed-deterministic deployment: i.i.d. uniform positions on the wrapped
// square, path-loss LSF, correlation matrices from cfg.correlation, top-Ms
// association, sigma2 = N0 * B at every AP. Each entity's randomness is a
// pure function of (seed, entity index), so growing Ku or Kd leaves the
// existing entities' geometry untouched.
Scenario generate_scenario(const SystemConfig& cfg, std::uint64_t seed);

// Same, but with caller-supplied correlation matrices.
Scenario generate_scenario(const SystemConfig& cfg, std::uint64_t seed,
                           const CorrelationProvider& provider,
                           bool provider_is_diagonal);

}  // namespace cfcoex

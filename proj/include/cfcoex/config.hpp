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

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfcoex {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// true iff n == 2^k - 1 for integer k >= 1 (includes n == 1)
inline bool is_mersenne_length(int n) {
    if (n < 1) return false;
    const unsigned v = static_cast<unsigned>(n) + 1u;
    return (v & (v - 1u)) == 0u;
}

enum class CorrelationModel {
    uncorrelated,  // R = alpha * I
    exponential,   // R = alpha * Toeplitz(coeff^|i-j|)
};

// All scalar system parameters. Defaults follow the reference deployment:
// 50 APs x 8 antennas, 10 broadband users, 50 spread-spectrum devices on a
// 1 km^2 wrapped square at 2 GHz / 20 MHz.
struct SystemConfig {
    int num_aps = 50;         // M
    int antennas_per_ap = 8;  // L
    int num_users = 10;       // Ku
    int num_devices = 50;     // Kd
    int num_prbs = 255;       // N, spreading gain (2^n - 1, or 1 = no spreading)
    int serving_aps = 5;      // Ms

    double area_side_m = 1000.0;
    double carrier_freq_hz = 2e9;
    double bandwidth_hz = 20e6;
    double noise_density_dbm_hz = -174.0;

    int coherence_samples = 200;  // tau_c
    int pilot_len = 30;           // tau_p
    int ul_symbols = 85;          // tau_u

    double max_user_power_w = dbm_to_watt(20.0);    // Pu
    double max_device_power_w = dbm_to_watt(10.0);  // Pd

    // Per-terminal training powers; empty means "fill with the class cap".
    std::vector<double> pilot_power_user;    // eta_u
    std::vector<double> pilot_power_device;  // zeta_d

    double qos_rate_bps = 10e3;                // r
    double sinr_floor = db_to_linear(-6.7);    // s (linear)

    bool shadow_fading = false;
    double shadow_std_db = 4.0;

    CorrelationModel correlation = CorrelationModel::uncorrelated;
    double correlation_coeff = 0.5;

    double fpc_theta = 0.5;

    double noise_power_w() const {
        return dbm_to_watt(noise_density_dbm_hz) * bandwidth_hz;
    }

    double pilot_power_of_user(int u) const {
        return pilot_power_user.empty() ? max_user_power_w : pilot_power_user.at(u);
    }
    double pilot_power_of_device(int d) const {
        return pilot_power_device.empty() ? max_device_power_w
                                          : pilot_power_device.at(d);
    }

    // Throws ConfigError on any violated invariant.
    void validate() const;
};

// Frame split rule: tau_p = ceil((Ku+Kd)/2), tau_u = floor((tau_c - tau_p)/2).
// Throws ConfigError when the pilot block does not fit the coherence frame.
struct TauSplit {
    int tau_p;
    int tau_u;
};
TauSplit derive_tau(int num_users, int num_devices, int coherence_samples);

}  // namespace cfcoex

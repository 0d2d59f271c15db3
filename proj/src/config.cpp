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
#include "cfcoex/config.hpp"

namespace cfcoex {

namespace {
void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}
}  // namespace

void SystemConfig::validate() const {
    require(num_aps >= 1, "num_aps must be >= 1");
    require(antennas_per_ap >= 1, "antennas_per_ap must be >= 1");
    require(num_users >= 1, "num_users must be >= 1");
    require(num_devices >= 1, "num_devices must be >= 1");
    require(num_prbs >= 1, "num_prbs must be >= 1");
    require(serving_aps >= 1, "serving_aps must be >= 1");
    require(serving_aps <= num_aps, "serving_aps must not exceed num_aps");
    require(is_mersenne_length(num_prbs),
            "num_prbs must be 2^n - 1 (got " + std::to_string(num_prbs) + ")");

    require(area_side_m > 0.0, "area_side_m must be positive");
    require(carrier_freq_hz > 0.0, "carrier_freq_hz must be positive");
    require(bandwidth_hz > 0.0, "bandwidth_hz must be positive");

    require(coherence_samples >= 1, "coherence_samples must be >= 1");
    require(pilot_len >= 1, "pilot_len must be >= 1");
    require(ul_symbols >= 1, "ul_symbols must be >= 1");
    require(pilot_len + ul_symbols <= coherence_samples,
            "pilot_len + ul_symbols must not exceed coherence_samples");

    require(max_user_power_w > 0.0, "max_user_power_w must be positive");
    require(max_device_power_w > 0.0, "max_device_power_w must be positive");

    if (!pilot_power_user.empty()) {
        require(static_cast<int>(pilot_power_user.size()) == num_users,
                "pilot_power_user must have one entry per user");
        for (double p : pilot_power_user)
            require(p > 0.0, "pilot powers must be positive");
    }
    if (!pilot_power_device.empty()) {
        require(static_cast<int>(pilot_power_device.size()) == num_devices,
                "pilot_power_device must have one entry per device");
        for (double p : pilot_power_device)
            require(p > 0.0, "pilot powers must be positive");
    }

    require(qos_rate_bps >= 0.0, "qos_rate_bps must be nonnegative");
    require(sinr_floor >= 0.0, "sinr_floor must be nonnegative");
    require(shadow_std_db >= 0.0, "shadow_std_db must be nonnegative");
    require(correlation_coeff >= 0.0 && correlation_coeff < 1.0,
            "correlation_coeff must lie in [0, 1)");
    require(fpc_theta >= 0.0 && fpc_theta <= 1.0,
            "fpc_theta must lie in [0, 1]");
}

TauSplit derive_tau(int num_users, int num_devices, int coherence_samples) {
    const int k = num_users + num_devices;
    const int tau_p = (k + 1) / 2;
    if (tau_p >= coherence_samples)
        throw ConfigError("pilot block (" + std::to_string(tau_p) +
                          ") does not fit in coherence frame (" +
                          std::to_string(coherence_samples) + ")");
    const int tau_u = (coherence_samples - tau_p) / 2;
    return {tau_p, tau_u};
}

}  // namespace cfcoex

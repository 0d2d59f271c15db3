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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfcoex/config.hpp"
#include "cfcoex/moments.hpp"

namespace cfcoex {

enum class SweepVariable { none, Kd, Ku, Ms, N };
enum class Scheme { OPC, UPC, FPC };

std::string to_string(SweepVariable v);
std::string to_string(Scheme s);

// A full experiment description: base configuration, sweep axis, schemes,
// scenario count and seeding. Round-trips through JSON (the CLI spec-file
// format; see README for the schema).
struct ExperimentSpec {
    SystemConfig config;
    bool auto_tau = true;  // derive tau_p/tau_u from Ku+Kd at each sweep point

    SweepVariable sweep_variable = SweepVariable::none;
    std::vector<int> sweep_values;  // ignored (one point) for `none`

    std::vector<Scheme> schemes = {Scheme::OPC, Scheme::UPC, Scheme::FPC};
    int num_scenarios = 100;
    std::uint64_t master_seed = 1;
    long mc_trials = 100000;
    std::string output_prefix = "cfcoex_run";

    // Throws ConfigError when any sweep point yields an invalid system.
    void validate() const;

    // Configuration at one sweep point (tau re-derived when auto_tau).
    SystemConfig config_at(int sweep_value) const;

    static ExperimentSpec from_json(const std::string& text);
    std::string to_json() const;
};

struct ResultRow {
    int sweep_value = 0;
    Scheme scheme = Scheme::OPC;
    int scenario_index = 0;
    std::uint64_t seed = 0;
    bool feasible = false;
    double min_user_rate_bps = 0.0;    // valid when feasible
    double max_device_power_w = 0.0;   // valid when feasible
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::string csv;           // byte-deterministic table
    std::string summary_json;  // per-(value, scheme) medians and CDF samples
    bool any_feasible = false;
};

// Full pipeline per (sweep value, scenario, scheme): deployment, MMSE
// estimators, closed-form moments, power control; every row re-validated
// through the public SINR operations. Deterministic in (spec, master_seed);
// scenario geometry is shared across sweep values for paired comparisons.
ExperimentResult run_experiment(const ExperimentSpec& spec);

class OracleBudgetError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct OracleResult {
    std::vector<MomentRecord> user;
    std::vector<MomentRecord> device;  // empty when closed forms are gated off
    bool device_closed_skipped = false;
    std::string report_json;
};

// Monte Carlo versus closed-form comparison on the spec's base instance
// (scenario index 0). Refuses oversized instances: the cost estimate
// trials * N * M * L * (Ku + Kd + Kd*(Ku+Kd+1)) must stay within 2e11.
OracleResult run_oracle_check(const ExperimentSpec& spec);

// Named experiment presets reproducing the reference figure sweeps at desk
// scale, plus the default oracle instance.
std::map<std::string, ExperimentSpec> presets();

}  // namespace cfcoex

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
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cfcoex/experiment.hpp"

namespace {

// exit codes: 0 ok, 2 config error, 3 infeasible everywhere, 4 MC budget
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitBudget = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cfcoex::ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

cfcoex::ExperimentSpec load_spec(const std::string& spec_path,
                                 const std::string& preset_name) {
    if (!preset_name.empty()) {
        const auto all = cfcoex::presets();
        const auto it = all.find(preset_name);
        if (it == all.end())
            throw cfcoex::ConfigError("unknown preset '" + preset_name +
                                      "' (see `cfcoex presets`)");
        return it->second;
    }
    if (spec_path.empty())
        throw cfcoex::ConfigError("either a spec file or --preset is required");
    return cfcoex::ExperimentSpec::from_json(read_file(spec_path));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uplink cell-free massive MIMO coexistence simulator"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string preset_name;
    std::string output_prefix;

    auto* run = app.add_subcommand("run", "run an experiment sweep");
    run->add_option("spec", spec_path, "experiment spec file (JSON)");
    run->add_option("--preset", preset_name, "use a named preset instead of a file");
    run->add_option("--output-prefix", output_prefix, "override the output prefix");

    auto* oracle = app.add_subcommand(
        "oracle", "compare closed-form moments against the Monte Carlo oracle");
    oracle->add_option("spec", spec_path, "experiment spec file (JSON)");
    oracle->add_option("--preset", preset_name, "use a named preset instead of a file");
    oracle->add_option("--output-prefix", output_prefix, "override the output prefix");

    std::string preset_to_show;
    auto* presets_cmd = app.add_subcommand("presets", "list or print experiment presets");
    presets_cmd->add_option("name", preset_to_show, "print this preset's spec JSON");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate-config", "validate a spec file");
    validate->add_option("spec", validate_path, "experiment spec file (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            cfcoex::ExperimentSpec spec = load_spec(spec_path, preset_name);
            if (!output_prefix.empty()) spec.output_prefix = output_prefix;
            const cfcoex::ExperimentResult result = cfcoex::run_experiment(spec);
            write_file(spec.output_prefix + ".csv", result.csv);
            write_file(spec.output_prefix + "_summary.json", result.summary_json);
            std::cout << "wrote " << spec.output_prefix << ".csv and "
                      << spec.output_prefix << "_summary.json (" << result.rows.size()
                      << " rows)\n";
            if (!result.any_feasible) {
                std::cerr << "error: no feasible instance in the whole run\n";
                return kExitInfeasible;
            }
            return kExitOk;
        }

        if (oracle->parsed()) {
            cfcoex::ExperimentSpec spec = load_spec(spec_path, preset_name);
            if (!output_prefix.empty()) spec.output_prefix = output_prefix;
            const cfcoex::OracleResult result = cfcoex::run_oracle_check(spec);
            const std::string path = spec.output_prefix + "_oracle.json";
            write_file(path, result.report_json);
            int flagged = 0;
            double worst_user = 0.0;
            for (const auto& r : result.user) worst_user = std::max(worst_user, r.rel_gap);
            for (const auto& r : result.device) flagged += r.flagged ? 1 : 0;
            std::cout << "wrote " << path << "\n"
                      << "worst user-moment relative gap: " << worst_user << "\n"
                      << "flagged device moments: " << flagged << "\n";
            if (result.device_closed_skipped)
                std::cout << "note: closed-form device moments skipped "
                             "(correlated fading); Monte Carlo values reported\n";
            return kExitOk;
        }

        if (presets_cmd->parsed()) {
            const auto all = cfcoex::presets();
            if (preset_to_show.empty()) {
                for (const auto& [name, spec] : all)
                    std::cout << name << ": sweep " << cfcoex::to_string(spec.sweep_variable)
                              << ", " << spec.num_scenarios << " scenarios\n";
            } else {
                const auto it = all.find(preset_to_show);
                if (it == all.end())
                    throw cfcoex::ConfigError("unknown preset '" + preset_to_show + "'");
                std::cout << it->second.to_json() << "\n";
            }
            return kExitOk;
        }

        if (validate->parsed()) {
            const cfcoex::ExperimentSpec spec =
                cfcoex::ExperimentSpec::from_json(read_file(validate_path));
            std::cout << spec.to_json() << "\n";
            return kExitOk;
        }
    } catch (const cfcoex::OracleBudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const cfcoex::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}

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
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "cfcoex/channel.hpp"
#include "cfcoex/powercontrol.hpp"
#include "cfcoex/rng.hpp"
#include "cfcoex/sequences.hpp"

using namespace cfcoex;

namespace {

struct Instance {
    SystemConfig cfg;
    Scenario sc;
    UserMoments um;
    DeviceMoments dm;
};

Instance make_instance(std::uint64_t seed, int m = 10, int l = 2, int ku = 4,
                       int kd = 8, int n = 15) {
    Instance inst;
    inst.cfg.num_aps = m;
    inst.cfg.antennas_per_ap = l;
    inst.cfg.num_users = ku;
    inst.cfg.num_devices = kd;
    inst.cfg.num_prbs = n;
    inst.cfg.serving_aps = std::min(5, m);
    const TauSplit tau = derive_tau(ku, kd, inst.cfg.coherence_samples);
    inst.cfg.pilot_len = tau.tau_p;
    inst.cfg.ul_symbols = tau.tau_u;

    inst.sc = generate_scenario(inst.cfg, derive_seed(seed, rngtag::scenario, 0));
    const PilotBook pilots = build_pilot_book(inst.cfg.pilot_len, ku, kd,
                                              derive_seed(seed, rngtag::pilot_book, 0));
    const EstimatorSet est = build_estimators(inst.sc, pilots, inst.cfg);
    inst.um = user_moments_closed(inst.sc, est, pilots, inst.cfg);
    inst.dm = device_moments_closed(inst.sc, est, pilots, inst.cfg,
                                    DeviceNuForm::variance_exact);
    return inst;
}

}  // namespace

TEST_CASE("required device SINR from the rate constraint") {
    SystemConfig cfg;
    cfg.num_prbs = 255;
    cfg.coherence_samples = 200;
    cfg.ul_symbols = 85;
    cfg.bandwidth_hz = 20e6;

    // 10 kb/s target: exponent 0.3, so 2^0.3 - 1
    CHECK(rho_required(1e4, cfg) == doctest::Approx(0.2311444133).epsilon(1e-8));
    CHECK(rho_required(0.0, cfg) == 0.0);
    CHECK_THROWS_AS(rho_required(-1.0, cfg), std::domain_error);

    // the rate constraint binds over the -6.7 dB decoding floor
    const QosTargets qt = QosTargets::for_level(0.0, cfg, 3);
    CHECK(qt.gamma_target == 0.0);
    for (int d = 0; d < 3; ++d) {
        CHECK(qt.rho_target(d) >= cfg.sinr_floor);
        CHECK(qt.rho_target(d) == doctest::Approx(0.2311444133).epsilon(1e-8));
    }
}

TEST_CASE("feasibility at level zero gives minimal device powers") {
    const Instance inst = make_instance(1);
    const PowerAllocation alloc = feasibility(0.0, inst.um, inst.dm, inst.cfg);
    REQUIRE(alloc.feasible);
    CHECK(alloc.p.maxCoeff() == 0.0);
    CHECK(alloc.q.minCoeff() > 0.0);
    CHECK(alloc.q.maxCoeff() <= inst.cfg.max_device_power_w * (1.0 + 1e-9));

    // minimality: shaving any component breaks its own constraint
    const QosTargets qt = QosTargets::for_level(0.0, inst.cfg,
                                                static_cast<int>(alloc.q.size()));
    for (int d = 0; d < alloc.q.size(); ++d) {
        Eigen::VectorXd q = alloc.q;
        q(d) *= 1.0 - 1e-6;
        const Eigen::VectorXd rho = sinr_device(alloc.p, q, inst.dm);
        CHECK(rho(d) < qt.rho_target(d));
    }
}

TEST_CASE("levels beyond the interference-free bound are infeasible") {
    const Instance inst = make_instance(2);
    const double prelog = static_cast<double>(inst.cfg.ul_symbols) /
                          inst.cfg.coherence_samples * inst.cfg.bandwidth_hz;
    double t_cap = 0.0;
    for (int u = 0; u < inst.um.delta.size(); ++u)
        t_cap = std::max(t_cap, prelog * std::log2(1.0 + inst.cfg.max_user_power_w *
                                                             inst.um.delta(u) /
                                                             inst.um.xi(u)));
    const PowerAllocation res = feasibility(1.01 * t_cap, inst.um, inst.dm, inst.cfg);
    CHECK_FALSE(res.feasible);
    CHECK_FALSE(res.infeasibility_reason.empty());
}

TEST_CASE("feasibility is monotone in the level") {
    const Instance inst = make_instance(3);
    const PowerAllocation opt = solve_opc(inst.um, inst.dm, inst.cfg);
    REQUIRE(opt.feasible);
    const double t = opt.bisection_level;
    CHECK(feasibility(0.25 * t, inst.um, inst.dm, inst.cfg).feasible);
    CHECK(feasibility(0.5 * t, inst.um, inst.dm, inst.cfg).feasible);
    CHECK(feasibility(0.75 * t, inst.um, inst.dm, inst.cfg).feasible);
    CHECK_FALSE(feasibility(4.0 * t, inst.um, inst.dm, inst.cfg).feasible);
}

TEST_CASE("the optimum balances every user at the target SINR") {
    const Instance inst = make_instance(4);
    const PowerAllocation opt = solve_opc(inst.um, inst.dm, inst.cfg);
    REQUIRE(opt.feasible);
    const Eigen::VectorXd gamma = sinr_user(opt.p, opt.q, inst.um);
    for (int u = 1; u < gamma.size(); ++u)
        CHECK(std::abs(gamma(u) - gamma(0)) / gamma(0) < 1e-6);

    // minimality at the optimum: every power is pinned by its constraint
    const QosTargets qt = QosTargets::for_level(opt.bisection_level, inst.cfg,
                                                static_cast<int>(opt.q.size()));
    for (int u = 0; u < opt.p.size(); ++u) {
        Eigen::VectorXd p = opt.p;
        p(u) *= 1.0 - 1e-6;
        CHECK(sinr_user(p, opt.q, inst.um)(u) < qt.gamma_target);
    }
    for (int d = 0; d < opt.q.size(); ++d) {
        Eigen::VectorXd q = opt.q;
        q(d) *= 1.0 - 1e-6;
        CHECK(sinr_device(opt.p, q, inst.dm)(d) < qt.rho_target(d));
    }
}

TEST_CASE("bisection certificate and re-validated constraints") {
    for (std::uint64_t seed : {5, 6, 7}) {
        const Instance inst = make_instance(seed);
        const PowerAllocation opt = solve_opc(inst.um, inst.dm, inst.cfg);
        REQUIRE(opt.feasible);
        CHECK(opt.certificate_infeasible);
        CHECK(opt.max_constraint_violation <= 1e-9);
        CHECK(feasibility(opt.bisection_level, inst.um, inst.dm, inst.cfg).feasible);
        CHECK_FALSE(feasibility(opt.certificate_level, inst.um, inst.dm, inst.cfg).feasible);
        CHECK(opt.bisection_steps <= 60);
    }
}

TEST_CASE("a lone user gets its full-power rate") {
    const Instance base = make_instance(8, 6, 2, 1, 4, 15);

    // emulate an empty device population: the solvers accept size-zero
    // device moments
    DeviceMoments none;
    none.lambda.resize(0);
    none.nu.resize(0);
    none.eps.resize(0, 0);
    none.vareps.resize(0, 1);
    none.chi.resize(0);
    UserMoments um = base.um;
    um.varkappa.resize(um.varkappa.rows(), 0);

    const PowerAllocation opt = solve_opc(um, none, base.cfg);
    REQUIRE(opt.feasible);
    const double pu = base.cfg.max_user_power_w;
    const double gamma_max =
        pu * base.um.delta(0) / (pu * base.um.upsilon(0) + base.um.xi(0));
    Eigen::VectorXd g(1);
    g << gamma_max;
    const double expected = rate_user(g, base.cfg)(0);
    CHECK(std::abs(opt.objective_t - expected) <= 2.0 * opt.tolerance + 1e-6);
}

TEST_CASE("benchmarks comply with the caps and are dominated") {
    int compared_upc = 0, compared_fpc = 0;
    for (std::uint64_t seed = 10; seed < 18; ++seed) {
        const Instance inst = make_instance(seed);
        const PowerAllocation opc = solve_opc(inst.um, inst.dm, inst.cfg);
        REQUIRE(opc.feasible);

        const PowerAllocation upc = solve_upc(inst.um, inst.dm, inst.cfg);
        if (upc.feasible) {
            ++compared_upc;
            for (int u = 0; u < upc.p.size(); ++u)
                CHECK(upc.p(u) == inst.cfg.max_user_power_w);
            CHECK(opc.objective_t >= upc.objective_t * (1.0 - 1e-9));
            CHECK(upc.max_constraint_violation <= 1e-9);
        }

        const PowerAllocation fpc = solve_fpc(inst.um, inst.dm, inst.cfg, inst.sc);
        if (fpc.feasible) {
            ++compared_fpc;
            CHECK(fpc.p.maxCoeff() <= inst.cfg.max_user_power_w * (1.0 + 1e-12));
            CHECK(opc.objective_t >= fpc.objective_t * (1.0 - 1e-9));
        }
    }
    CHECK(compared_upc > 0);
    CHECK(compared_fpc > 0);
}

TEST_CASE("fractional control orders powers against aggregate LSF") {
    const Instance inst = make_instance(21);
    SystemConfig cfg = inst.cfg;

    cfg.fpc_theta = 0.0;  // degenerates to uniform
    const PowerAllocation flat = solve_fpc(inst.um, inst.dm, cfg, inst.sc);
    for (int u = 0; u < flat.p.size(); ++u)
        CHECK(flat.p(u) == doctest::Approx(cfg.max_user_power_w));

    cfg.fpc_theta = 0.5;
    const PowerAllocation frac = solve_fpc(inst.um, inst.dm, cfg, inst.sc);
    Eigen::VectorXd agg(inst.cfg.num_users);
    for (int u = 0; u < inst.cfg.num_users; ++u) {
        double s = 0.0;
        for (int m = 0; m < inst.cfg.num_aps; ++m)
            if (inst.sc.assoc_user[u][static_cast<std::size_t>(m)])
                s += inst.sc.alpha(u, m);
        agg(u) = s;
    }
    int strongest = 0, weakest = 0;
    agg.maxCoeff(&strongest);
    agg.minCoeff(&weakest);
    CHECK(frac.p(strongest) <= frac.p(weakest));
    CHECK(frac.p(weakest) == doctest::Approx(cfg.max_user_power_w));
}

TEST_CASE("unreachable targets are reported, not crashed") {
    Instance inst = make_instance(22);
    SystemConfig hard = inst.cfg;
    hard.qos_rate_bps = 5e6;  // far beyond what the devices can carry
    const PowerAllocation res = solve_opc(inst.um, inst.dm, hard);
    CHECK_FALSE(res.feasible);
    CHECK_FALSE(res.infeasibility_reason.empty());
}

TEST_CASE("allocation serialises with its diagnostics") {
    const Instance inst = make_instance(23);
    const PowerAllocation opt = solve_opc(inst.um, inst.dm, inst.cfg);
    const auto j = nlohmann::json::parse(opt.to_json());
    CHECK(j.at("feasible").get<bool>());
    CHECK(j.at("p_w").size() == 4);
    CHECK(j.at("q_w").size() == 8);
    CHECK(j.contains("certificate"));
    CHECK(j.at("bisection_level_bps").get<double>() > 0.0);
}

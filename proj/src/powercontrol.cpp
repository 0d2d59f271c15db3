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
#include "cfcoex/powercontrol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cfcoex {

double rho_required(double rate_bps, const SystemConfig& cfg) {
    if (rate_bps < 0.0)
        throw std::domain_error("rho_required: rate must be nonnegative");
    const double exponent = rate_bps * static_cast<double>(cfg.num_prbs) *
                            static_cast<double>(cfg.coherence_samples) /
                            (static_cast<double>(cfg.ul_symbols) * cfg.bandwidth_hz);
    return std::exp2(exponent) - 1.0;
}

QosTargets QosTargets::for_level(double t_bps, const SystemConfig& cfg,
                                 int num_devices) {
    QosTargets qt;
    const double exponent = t_bps * static_cast<double>(cfg.coherence_samples) /
                            (static_cast<double>(cfg.ul_symbols) * cfg.bandwidth_hz);
    qt.gamma_target = std::exp2(exponent) - 1.0;
    const double rho = std::max(cfg.sinr_floor, rho_required(cfg.qos_rate_bps, cfg));
    qt.rho_target = Eigen::VectorXd::Constant(num_devices, rho);
    return qt;
}

namespace {

struct FixedPointProblem {
    // p+ = Mpp p + Mpq q + cp; q+ = Mqq q + Mqp p + cq
    Eigen::MatrixXd mpp, mpq, mqq, mqp;
    Eigen::VectorXd cp, cq;
    Eigen::VectorXd p_cap, q_cap;
    bool users_fixed = false;
    Eigen::VectorXd p_fixed;
    std::string setup_error;  // nonempty when a target is unreachable outright
};

FixedPointProblem build_problem(double gamma_target, const Eigen::VectorXd& rho_target,
                                const UserMoments& um, const DeviceMoments& dm,
                                const SystemConfig& cfg) {
    const int ku = static_cast<int>(um.delta.size());
    const int kd = static_cast<int>(dm.lambda.size());

    FixedPointProblem fp;
    fp.p_cap = Eigen::VectorXd::Constant(ku, cfg.max_user_power_w);
    fp.q_cap = Eigen::VectorXd::Constant(kd, cfg.max_device_power_w);
    fp.mpp.setZero(ku, ku);
    fp.mpq.setZero(ku, kd);
    fp.mqq.setZero(kd, kd);
    fp.mqp.setZero(kd, ku);
    fp.cp.setZero(ku);
    fp.cq.setZero(kd);

    for (int u = 0; u < ku; ++u) {
        const double den = um.delta(u) - gamma_target * um.upsilon(u);
        if (!(den > 0.0)) {
            fp.setup_error = "user " + std::to_string(u) +
                             ": SINR target exceeds the interference-free limit";
            return fp;
        }
        const double scale = gamma_target / den;
        for (int k = 0; k < ku; ++k)
            if (k != u) fp.mpp(u, k) = scale * um.kappa(u, k);
        for (int d = 0; d < kd; ++d) fp.mpq(u, d) = scale * um.varkappa(u, d);
        fp.cp(u) = scale * um.xi(u);
    }
    for (int d = 0; d < kd; ++d) {
        const double den = dm.lambda(d) - rho_target(d) * dm.nu(d);
        if (!(den > 0.0)) {
            fp.setup_error = "device " + std::to_string(d) +
                             ": SINR target exceeds the interference-free limit";
            return fp;
        }
        const double scale = rho_target(d) / den;
        for (int k = 0; k < kd; ++k)
            if (k != d) fp.mqq(d, k) = scale * dm.eps(d, k);
        for (int u = 0; u < ku; ++u) fp.mqp(d, u) = scale * dm.vareps(d, u);
        fp.cq(d) = scale * dm.chi(d);
    }
    return fp;
}

// Monotone iteration from the zero vector; converges to the minimal fixed
// point when one exists. Crossing a power cap proves infeasibility because
// the minimal solution lower-bounds every feasible point.
PowerAllocation iterate(const FixedPointProblem& fp, const SolverOptions& opt) {
    PowerAllocation out;
    const int ku = static_cast<int>(fp.cp.size());
    const int kd = static_cast<int>(fp.cq.size());
    out.p = fp.users_fixed ? fp.p_fixed : Eigen::VectorXd::Zero(ku);
    out.q = Eigen::VectorXd::Zero(kd);

    if (!fp.setup_error.empty()) {
        out.feasible = false;
        out.infeasibility_reason = fp.setup_error;
        return out;
    }

    Eigen::VectorXd p_next(ku), q_next(kd);
    for (long it = 0; it < opt.max_iterations; ++it) {
        if (fp.users_fixed)
            p_next = fp.p_fixed;
        else
            p_next = fp.mpp * out.p + fp.mpq * out.q + fp.cp;
        q_next = fp.mqq * out.q + fp.mqp * out.p + fp.cq;
        out.iterations = it + 1;

        for (int u = 0; u < ku && !fp.users_fixed; ++u)
            if (p_next(u) < out.p(u))
                throw std::logic_error("feasibility: iterate decreased (user)");
        for (int d = 0; d < kd; ++d)
            if (q_next(d) < out.q(d))
                throw std::logic_error("feasibility: iterate decreased (device)");

        // beyond-tolerance cap crossing: infeasible
        for (int u = 0; u < ku; ++u)
            if (p_next(u) > fp.p_cap(u) * (1.0 + opt.cap_rtol)) {
                out.p = p_next;
                out.q = q_next;
                out.feasible = false;
                out.infeasibility_reason =
                    "user " + std::to_string(u) + " exceeds its power cap";
                return out;
            }
        for (int d = 0; d < kd; ++d)
            if (q_next(d) > fp.q_cap(d) * (1.0 + opt.cap_rtol)) {
                out.p = p_next;
                out.q = q_next;
                out.feasible = false;
                out.infeasibility_reason =
                    "device " + std::to_string(d) + " exceeds its power cap";
                return out;
            }

        double max_rel = 0.0;
        for (int u = 0; u < ku; ++u) {
            const double diff = p_next(u) - out.p(u);
            if (diff != 0.0)
                max_rel = std::max(max_rel, diff / std::max(p_next(u),
                                                            std::numeric_limits<double>::min()));
        }
        for (int d = 0; d < kd; ++d) {
            const double diff = q_next(d) - out.q(d);
            if (diff != 0.0)
                max_rel = std::max(max_rel, diff / std::max(q_next(d),
                                                            std::numeric_limits<double>::min()));
        }
        out.p = p_next;
        out.q = q_next;
        if (max_rel <= opt.convergence_rtol) {
            out.p = out.p.cwiseMin(fp.p_cap);
            out.q = out.q.cwiseMin(fp.q_cap);
            out.feasible = true;
            return out;
        }
    }
    out.feasible = false;
    out.infeasibility_reason = "fixed point did not converge within " +
                               std::to_string(opt.max_iterations) + " iterations";
    return out;
}

double min_user_rate(const PowerAllocation& alloc, const UserMoments& um,
                     const SystemConfig& cfg) {
    return rate_user(sinr_user(alloc.p, alloc.q, um), cfg).minCoeff();
}

}  // namespace

PowerAllocation feasibility(double t_bps, const UserMoments& um,
                            const DeviceMoments& dm, const SystemConfig& cfg,
                            const SolverOptions& opt) {
    if (t_bps < 0.0) throw std::domain_error("feasibility: level must be nonnegative");
    const int kd = static_cast<int>(dm.lambda.size());
    const QosTargets qt = QosTargets::for_level(t_bps, cfg, kd);
    FixedPointProblem fp = build_problem(qt.gamma_target, qt.rho_target, um, dm, cfg);
    PowerAllocation alloc = iterate(fp, opt);
    if (alloc.feasible) alloc.objective_t = t_bps;
    return alloc;
}

PowerAllocation solve_opc(const UserMoments& um, const DeviceMoments& dm,
                          const SystemConfig& cfg, const SolverOptions& opt) {
    const double prelog = static_cast<double>(cfg.ul_symbols) /
                          static_cast<double>(cfg.coherence_samples) * cfg.bandwidth_hz;
    double t_hi = 0.0;
    for (int u = 0; u < static_cast<int>(um.delta.size()); ++u)
        t_hi = std::max(t_hi, prelog * std::log2(1.0 + cfg.max_user_power_w *
                                                           um.delta(u) / um.xi(u)));
    const double tol = std::max(1.0, 1e-6 * t_hi);

    PowerAllocation best = feasibility(0.0, um, dm, cfg, opt);
    long total_iters = best.iterations;
    if (!best.feasible) {
        best.infeasibility_reason =
            "infeasible at zero user rate: " + best.infeasibility_reason;
        best.tolerance = tol;
        return best;
    }

    double lo = 0.0;
    double hi = t_hi;
    int steps = 0;

    PowerAllocation probe_hi = feasibility(t_hi, um, dm, cfg, opt);
    total_iters += probe_hi.iterations;
    if (probe_hi.feasible) {
        best = probe_hi;
        lo = t_hi;
    } else {
        while (hi - lo > tol && steps < opt.max_bisection_steps) {
            const double mid = 0.5 * (lo + hi);
            PowerAllocation trial = feasibility(mid, um, dm, cfg, opt);
            total_iters += trial.iterations;
            ++steps;
            if (trial.feasible) {
                best = trial;
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    best.objective_t = min_user_rate(best, um, cfg);
    best.iterations = total_iters;
    best.bisection_steps = steps;
    best.bisection_level = lo;
    best.tolerance = tol;

    PowerAllocation probe = feasibility(lo + 2.0 * tol, um, dm, cfg, opt);
    best.certificate_level = lo + 2.0 * tol;
    best.certificate_infeasible = !probe.feasible;
    best.max_constraint_violation = validate_allocation(best, lo, um, dm, cfg);
    return best;
}

namespace {

PowerAllocation solve_with_fixed_users(const Eigen::VectorXd& p_fixed,
                                       const UserMoments& um, const DeviceMoments& dm,
                                       const SystemConfig& cfg,
                                       const SolverOptions& opt) {
    const int kd = static_cast<int>(dm.lambda.size());
    const QosTargets qt = QosTargets::for_level(0.0, cfg, kd);
    FixedPointProblem fp = build_problem(qt.gamma_target, qt.rho_target, um, dm, cfg);
    fp.users_fixed = true;
    fp.p_fixed = p_fixed;
    PowerAllocation alloc = iterate(fp, opt);
    if (alloc.feasible) {
        alloc.objective_t = min_user_rate(alloc, um, cfg);
        alloc.max_constraint_violation = validate_allocation(alloc, -1.0, um, dm, cfg);
    }
    return alloc;
}

}  // namespace

PowerAllocation solve_upc(const UserMoments& um, const DeviceMoments& dm,
                          const SystemConfig& cfg, const SolverOptions& opt) {
    const int ku = static_cast<int>(um.delta.size());
    return solve_with_fixed_users(
        Eigen::VectorXd::Constant(ku, cfg.max_user_power_w), um, dm, cfg, opt);
}

PowerAllocation solve_fpc(const UserMoments& um, const DeviceMoments& dm,
                          const SystemConfig& cfg, const Scenario& sc,
                          const SolverOptions& opt) {
    const int ku = static_cast<int>(um.delta.size());
    Eigen::VectorXd agg(ku);
    for (int u = 0; u < ku; ++u) {
        double s = 0.0;
        for (int m = 0; m < sc.num_aps; ++m)
            if (sc.assoc_user[u][static_cast<std::size_t>(m)]) s += sc.alpha(u, m);
        agg(u) = s;
    }
    // Normalise at the weakest user so the strongest aggregate LSF gets the
    // lowest power and nobody exceeds the cap.
    const double ref = agg.minCoeff();
    Eigen::VectorXd p(ku);
    for (int u = 0; u < ku; ++u) {
        const double scaled =
            cfg.max_user_power_w * std::pow(agg(u) / ref, -cfg.fpc_theta);
        p(u) = std::clamp(scaled, 0.0, cfg.max_user_power_w);
    }
    return solve_with_fixed_users(p, um, dm, cfg, opt);
}

double validate_allocation(const PowerAllocation& alloc, double t_bps,
                           const UserMoments& um, const DeviceMoments& dm,
                           const SystemConfig& cfg) {
    double viol = 0.0;
    for (int u = 0; u < static_cast<int>(alloc.p.size()); ++u) {
        viol = std::max(viol, (alloc.p(u) - cfg.max_user_power_w) / cfg.max_user_power_w);
        viol = std::max(viol, -alloc.p(u) / cfg.max_user_power_w);
    }
    for (int d = 0; d < static_cast<int>(alloc.q.size()); ++d) {
        viol = std::max(viol, (alloc.q(d) - cfg.max_device_power_w) / cfg.max_device_power_w);
        viol = std::max(viol, -alloc.q(d) / cfg.max_device_power_w);
    }

    const QosTargets qt =
        QosTargets::for_level(std::max(t_bps, 0.0), cfg, static_cast<int>(alloc.q.size()));
    if (t_bps > 0.0 && qt.gamma_target > 0.0) {
        const Eigen::VectorXd gamma = sinr_user(alloc.p, alloc.q, um);
        for (int u = 0; u < gamma.size(); ++u)
            viol = std::max(viol, (qt.gamma_target - gamma(u)) / qt.gamma_target);
    }
    const Eigen::VectorXd rho = sinr_device(alloc.p, alloc.q, dm);
    for (int d = 0; d < rho.size(); ++d)
        if (qt.rho_target(d) > 0.0)
            viol = std::max(viol, (qt.rho_target(d) - rho(d)) / qt.rho_target(d));
    return std::max(viol, 0.0);
}

std::string PowerAllocation::to_json() const {
    nlohmann::json j;
    j["schema"] = "cfcoex.allocation.v1";
    j["feasible"] = feasible;
    j["objective_t_bps"] = objective_t;
    j["p_w"] = std::vector<double>(p.data(), p.data() + p.size());
    j["q_w"] = std::vector<double>(q.data(), q.data() + q.size());
    j["iterations"] = iterations;
    j["bisection_steps"] = bisection_steps;
    j["bisection_level_bps"] = bisection_level;
    j["tolerance_bps"] = tolerance;
    j["certificate"] = {{"probe_level_bps", certificate_level},
                        {"probe_infeasible", certificate_infeasible}};
    j["max_constraint_violation"] = max_constraint_violation;
    if (!infeasibility_reason.empty()) j["infeasibility_reason"] = infeasibility_reason;
    return j.dump(2);
}

}  // namespace cfcoex

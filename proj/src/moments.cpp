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
#include "cfcoex/moments.hpp"

#include <cmath>
#include <complex>

#include <nlohmann/json.hpp>

#include "cfcoex/rng.hpp"

namespace cfcoex {

namespace {

using cplx = std::complex<double>;

struct Kahan {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

// Online mean/variance (Welford); M2 is nonnegative by construction, so the
// sampled variance can never go negative through cancellation.
struct WelfordC {
    long n = 0;
    cplx mean{0.0, 0.0};
    double m2 = 0.0;
    void add(cplx x) {
        ++n;
        const cplx d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += (std::conj(d) * (x - mean)).real();
    }
    double variance() const { return n > 0 ? m2 / static_cast<double>(n) : 0.0; }
};

struct WelfordR {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 0 ? m2 / static_cast<double>(n) : 0.0; }
};

// Mean of a per-trial power sample |z|^2 with its exact standard error.
struct PowerAcc {
    Kahan s1, s2;
    long n = 0;
    void add(double v) {
        s1.add(v);
        s2.add(v * v);
        ++n;
    }
    double mean() const { return n > 0 ? s1.sum / static_cast<double>(n) : 0.0; }
    double se() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var = std::max(s2.sum / static_cast<double>(n) - m * m, 0.0);
        return std::sqrt(var / static_cast<double>(n));
    }
};

double real_trace(const Eigen::MatrixXcd& m) { return m.trace().real(); }

}  // namespace

UserMoments user_moments_closed(const Scenario& sc, const EstimatorSet& est,
                                const PilotBook& pilots, const SystemConfig& cfg) {
    const int m_aps = sc.num_aps;
    const int ku = sc.num_users;
    const int kd = sc.num_devices;

    UserMoments um;
    um.delta.setZero(ku);
    um.upsilon.setZero(ku);
    um.kappa.setZero(ku, ku);
    um.varkappa.setZero(ku, kd);
    um.xi.setZero(ku);

    for (int u = 0; u < ku; ++u) {
        const double eta_u = cfg.pilot_power_of_user(u);
        cplx sum_ar{0.0, 0.0};
        double sum_arr = 0.0;
        double sum_noise = 0.0;
        Eigen::VectorXcd sum_ark = Eigen::VectorXcd::Zero(ku);   // tr(A_u R_k)
        Eigen::VectorXd sum_arrk = Eigen::VectorXd::Zero(ku);    // tr(A_u R_u R_k)
        Eigen::VectorXcd sum_aqd = Eigen::VectorXcd::Zero(kd);   // tr(A_u Q_d)
        Eigen::VectorXd sum_arqd = Eigen::VectorXd::Zero(kd);    // tr(A_u R_u Q_d)

        for (int m = 0; m < m_aps; ++m) {
            if (!sc.assoc_user[u][static_cast<std::size_t>(m)]) continue;
            const Eigen::MatrixXcd& a = est.A_of(u, m);
            const Eigen::MatrixXcd& r = sc.R_of(u, m);
            const Eigen::MatrixXcd ar = a * r;

            sum_ar += ar.trace();
            sum_arr += real_trace(ar * r);
            sum_noise += sc.sigma2[static_cast<std::size_t>(m)] * real_trace(ar);

            for (int k = 0; k < ku; ++k) {
                if (k == u) continue;
                const Eigen::MatrixXcd& rk = sc.R_of(k, m);
                sum_arrk(k) += real_trace(ar * rk);
                if (pilots.gram_uu(k, u) != 0.0) sum_ark(k) += (a * rk).trace();
            }
            for (int d = 0; d < kd; ++d) {
                const Eigen::MatrixXcd& qd = sc.Q_of(d, m);
                sum_arqd(d) += real_trace(ar * qd);
                if (pilots.gram_ud(u, d) != 0.0) sum_aqd(d) += (a * qd).trace();
            }
        }

        um.delta(u) = eta_u * eta_u * std::norm(sum_ar);
        um.upsilon(u) = eta_u * sum_arr;
        um.xi(u) = eta_u * sum_noise;

        for (int k = 0; k < ku; ++k) {
            if (k == u) continue;
            const double g2 = pilots.gram_uu(k, u) * pilots.gram_uu(k, u);
            um.kappa(u, k) = eta_u * sum_arrk(k) +
                             eta_u * cfg.pilot_power_of_user(k) * g2 * std::norm(sum_ark(k));
        }
        for (int d = 0; d < kd; ++d) {
            const double g2 = pilots.gram_ud(u, d) * pilots.gram_ud(u, d);
            um.varkappa(u, d) = eta_u * sum_arqd(d) +
                                eta_u * cfg.pilot_power_of_device(d) * g2 * std::norm(sum_aqd(d));
        }
    }
    return um;
}

DeviceMoments device_moments_closed(const Scenario& sc, const EstimatorSet& est,
                                    const PilotBook& pilots, const SystemConfig& cfg,
                                    DeviceNuForm nu_form) {
    if (!sc.uncorrelated)
        throw UnsupportedModelError(
            "device_moments_closed: closed forms hold for uncorrelated fading only; "
            "use mc_device_moments for correlated scenarios");

    const int m_aps = sc.num_aps;
    const int l = sc.antennas_per_ap;
    const int ku = sc.num_users;
    const int kd = sc.num_devices;
    const double n_prbs = cfg.num_prbs;
    const double ld = l;

    DeviceMoments dm;
    dm.lambda.setZero(kd);
    dm.nu.setZero(kd);
    dm.eps.setZero(kd, kd);
    dm.vareps.setZero(kd, ku);
    dm.chi.setZero(kd);

    for (int d = 0; d < kd; ++d) {
        const double zeta_d = cfg.pilot_power_of_device(d);

        double sum_lambda = 0.0;
        double sum_nu = 0.0;
        double sum_chi = 0.0;
        Eigen::VectorXd sum_eps_nc = Eigen::VectorXd::Zero(kd);   // non-coherent
        Eigen::VectorXd sum_eps_coh = Eigen::VectorXd::Zero(kd);  // inside |.|^2
        Eigen::VectorXd sum_vareps_nc = Eigen::VectorXd::Zero(ku);
        Eigen::VectorXd sum_vareps_coh = Eigen::VectorXd::Zero(ku);

        for (int m = 0; m < m_aps; ++m) {
            if (!sc.assoc_device[d][static_cast<std::size_t>(m)]) continue;
            const double sigma2 = sc.sigma2[static_cast<std::size_t>(m)];
            const double bhat = real_trace(est.B_of(d, m)) / ld;

            // btil[k] and atil[u] are the co-pilot power leakages into the
            // observation of device d at AP m; bbar is their total plus noise.
            double bbar = sigma2;
            for (int k = 0; k < kd; ++k) {
                const double g = pilots.gram_dd(k, d);
                if (g != 0.0)
                    bbar += cfg.pilot_power_of_device(k) * sc.beta(k, m) * g * g;
            }
            for (int u = 0; u < ku; ++u) {
                const double g = pilots.gram_ud(u, d);
                if (g != 0.0)
                    bbar += cfg.pilot_power_of_user(u) * sc.alpha(u, m) * g * g;
            }
            const double btdd = zeta_d * sc.beta(d, m);

            const double bhat2 = bhat * bhat;
            const double bhat4 = bhat2 * bhat2;

            sum_lambda += bhat2 * btdd * (bbar + ld * btdd);
            sum_chi += bhat4 * btdd * bbar * sigma2 * ((ld + 1.0) * btdd + bbar);
            if (nu_form == DeviceNuForm::as_printed) {
                sum_nu += bhat4 * btdd * btdd *
                          (ld * (ld + 1.0) * btdd * btdd +
                           2.0 * bbar * (2.0 * (ld + 1.0) * btdd + bbar) -
                           ld * (bbar + ld * bhat) * (bbar + ld * bhat));
            } else {
                // per-block variance of |ghat^H g|^2 with x = E per-antenna
                // estimate power and e the estimation-error power
                const double x = bhat * btdd;
                const double e = sc.beta(d, m) - x;
                const double x2 = x * x;
                const double e2 = ld * (ld + 1.0) * x2 + ld * x * e;
                const double e4 = ld * (ld + 1.0) * (ld + 2.0) * (ld + 3.0) * x2 * x2 +
                                  4.0 * e * ld * (ld + 1.0) * (ld + 2.0) * x2 * x +
                                  2.0 * e * e * ld * (ld + 1.0) * x2;
                sum_nu += e4 - e2 * e2;
            }

            for (int k = 0; k < kd; ++k) {
                if (k == d) continue;
                const double g = pilots.gram_dd(k, d);
                const double btil_k =
                    cfg.pilot_power_of_device(k) * sc.beta(k, m) * g * g;
                sum_eps_nc(k) +=
                    bhat4 * btdd * sc.beta(k, m) *
                    ((ld + 1.0) * bbar * bbar +
                     (ld + 1.0) * (ld + 1.0) * bbar * (btdd + btil_k) +
                     ld * (2.0 * ld + 1.0) * btdd * btil_k);
                if (g != 0.0) sum_eps_coh(k) += bhat2 * btdd * sc.beta(k, m);
            }
            for (int u = 0; u < ku; ++u) {
                const double g = pilots.gram_ud(u, d);
                const double atil_u =
                    cfg.pilot_power_of_user(u) * sc.alpha(u, m) * g * g;
                sum_vareps_nc(u) +=
                    bhat4 * btdd * sc.alpha(u, m) *
                    ((ld + 1.0) * bbar * bbar +
                     (ld + 1.0) * (ld + 1.0) * bbar * (btdd + atil_u) +
                     ld * (2.0 * ld + 1.0) * btdd * atil_u);
                if (g != 0.0) sum_vareps_coh(u) += bhat2 * btdd * sc.alpha(u, m);
            }
        }

        const double l2 = ld * ld;
        const double l4 = l2 * l2;
        dm.lambda(d) = n_prbs * n_prbs * l2 * sum_lambda * sum_lambda;
        dm.nu(d) = (nu_form == DeviceNuForm::as_printed)
                       ? n_prbs * ld * (ld + 1.0) * sum_nu
                       : n_prbs * sum_nu;
        dm.chi(d) = n_prbs * ld * (ld + 1.0) * zeta_d * sum_chi;

        for (int k = 0; k < kd; ++k) {
            if (k == d) continue;
            const double g = pilots.gram_dd(k, d);
            dm.eps(d, k) = n_prbs * ld * zeta_d * sum_eps_nc(k) +
                           l4 * zeta_d * cfg.pilot_power_of_device(k) * g * g *
                               sum_eps_coh(k) * sum_eps_coh(k);
        }
        for (int u = 0; u < ku; ++u) {
            const double g = pilots.gram_ud(u, d);
            dm.vareps(d, u) = n_prbs * ld * zeta_d * sum_vareps_nc(u) +
                              n_prbs * l4 * zeta_d * cfg.pilot_power_of_user(u) * g * g *
                                  sum_vareps_coh(u) * sum_vareps_coh(u);
        }
    }
    return dm;
}

McUserMoments mc_user_moments(const Scenario& sc, const EstimatorSet& est,
                              const PilotBook& pilots, const SystemConfig& cfg,
                              long trials, std::uint64_t seed,
                              double data_noise_scale) {
    if (trials < 1) throw std::domain_error("mc_user_moments: trials must be >= 1");

    const int m_aps = sc.num_aps;
    const int l = sc.antennas_per_ap;
    const int ku = sc.num_users;
    const int kd = sc.num_devices;

    const auto fac = detail::CovarianceFactors::build(sc);

    std::vector<WelfordC> acc_x(static_cast<std::size_t>(ku));
    std::vector<PowerAcc> acc_kappa(static_cast<std::size_t>(ku) * ku);
    std::vector<PowerAcc> acc_vkappa(static_cast<std::size_t>(ku) * kd);
    std::vector<PowerAcc> acc_xi(static_cast<std::size_t>(ku));

    // The moments are per-PRB quantities with identical distribution on
    // every PRB, so each trial realises a single block.
    ChannelDraw draw;
    ChannelEstimates hat;
    Eigen::MatrixXcd wnoise(l, m_aps);

    for (long t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed =
            derive_seed(seed, rngtag::mc_trial, static_cast<std::uint64_t>(t));
        detail::draw_channels_into(fac, 1, trial_seed, draw);
        detail::estimate_into(draw, est, pilots, cfg, sc.sigma2, trial_seed, hat);

        RngStream wrng(derive_seed(trial_seed, rngtag::data_noise));
        for (int m = 0; m < m_aps; ++m) {
            const double s = std::sqrt(data_noise_scale * sc.sigma2[static_cast<std::size_t>(m)]);
            for (int i = 0; i < l; ++i) wnoise(i, m) = s * wrng.cgaussian();
        }

        for (int u = 0; u < ku; ++u) {
            cplx x{0.0, 0.0};
            cplx w{0.0, 0.0};
            Eigen::VectorXcd ik = Eigen::VectorXcd::Zero(ku);
            Eigen::VectorXcd id = Eigen::VectorXcd::Zero(kd);
            for (int m = 0; m < m_aps; ++m) {
                if (!sc.assoc_user[u][static_cast<std::size_t>(m)]) continue;
                const auto fu = hat.hhat.col(draw.user_col(0, u, m));
                x += fu.dot(draw.user(0, u, m));
                w += fu.dot(wnoise.col(m));
                for (int k = 0; k < ku; ++k)
                    if (k != u) ik(k) += fu.dot(draw.user(0, k, m));
                for (int d = 0; d < kd; ++d) id(d) += fu.dot(draw.device(0, d, m));
            }
            acc_x[static_cast<std::size_t>(u)].add(x);
            acc_xi[static_cast<std::size_t>(u)].add(std::norm(w));
            for (int k = 0; k < ku; ++k)
                if (k != u)
                    acc_kappa[static_cast<std::size_t>(u) * ku + k].add(std::norm(ik(k)));
            for (int d = 0; d < kd; ++d)
                acc_vkappa[static_cast<std::size_t>(u) * kd + d].add(std::norm(id(d)));
        }
    }

    McUserMoments out;
    out.trials = trials;
    auto& mean = out.mean;
    auto& se = out.se;
    mean.delta.setZero(ku);
    mean.upsilon.setZero(ku);
    mean.kappa.setZero(ku, ku);
    mean.varkappa.setZero(ku, kd);
    mean.xi.setZero(ku);
    se = mean;

    const double sqrt_t = std::sqrt(static_cast<double>(trials));
    for (int u = 0; u < ku; ++u) {
        const auto& ax = acc_x[static_cast<std::size_t>(u)];
        const double var = ax.variance();
        const double mean_se = std::sqrt(var) / sqrt_t;
        mean.delta(u) = std::norm(ax.mean);
        se.delta(u) = 2.0 * std::abs(ax.mean) * mean_se;
        mean.upsilon(u) = var;
        se.upsilon(u) = var * std::sqrt(2.0 / static_cast<double>(trials));

        mean.xi(u) = acc_xi[static_cast<std::size_t>(u)].mean();
        se.xi(u) = acc_xi[static_cast<std::size_t>(u)].se();
        for (int k = 0; k < ku; ++k) {
            if (k == u) continue;
            const auto& a = acc_kappa[static_cast<std::size_t>(u) * ku + k];
            mean.kappa(u, k) = a.mean();
            se.kappa(u, k) = a.se();
        }
        for (int d = 0; d < kd; ++d) {
            const auto& a = acc_vkappa[static_cast<std::size_t>(u) * kd + d];
            mean.varkappa(u, d) = a.mean();
            se.varkappa(u, d) = a.se();
        }
    }
    return out;
}

McDeviceMoments mc_device_moments(const Scenario& sc, const EstimatorSet& est,
                                  const PilotBook& pilots, const SpreadingBook& codes,
                                  const SystemConfig& cfg, long trials,
                                  std::uint64_t seed, double data_noise_scale) {
    if (trials < 1) throw std::domain_error("mc_device_moments: trials must be >= 1");
    if (static_cast<int>(codes.chips.size()) != sc.num_devices)
        throw std::invalid_argument("mc_device_moments: spreading book does not match scenario");
    if (codes.length != cfg.num_prbs)
        throw std::invalid_argument("mc_device_moments: spreading length differs from num_prbs");

    const int m_aps = sc.num_aps;
    const int l = sc.antennas_per_ap;
    const int ku = sc.num_users;
    const int kd = sc.num_devices;
    const int n_prbs = cfg.num_prbs;

    const auto fac = detail::CovarianceFactors::build(sc);

    // Association lists keep the inner loops over serving APs only.
    std::vector<std::vector<int>> serving(static_cast<std::size_t>(kd));
    for (int d = 0; d < kd; ++d)
        for (int m = 0; m < m_aps; ++m)
            if (sc.assoc_device[d][static_cast<std::size_t>(m)])
                serving[static_cast<std::size_t>(d)].push_back(m);

    std::vector<WelfordR> acc_s(static_cast<std::size_t>(kd));
    std::vector<PowerAcc> acc_chi(static_cast<std::size_t>(kd));
    std::vector<PowerAcc> acc_eps(static_cast<std::size_t>(kd) * kd);
    std::vector<PowerAcc> acc_vareps(static_cast<std::size_t>(kd) * ku);

    ChannelDraw draw;
    ChannelEstimates hat;
    Eigen::MatrixXcd wnoise(l, static_cast<Eigen::Index>(n_prbs) * m_aps);
    Eigen::MatrixXcd jdev(kd, kd);       // J_{d,k} accumulated over (n, m)
    Eigen::VectorXcd jrow(ku);           // J_{d,u}[n] accumulated over m
    Eigen::MatrixXd vareps_trial(kd, ku);
    Eigen::VectorXd ssum(kd);
    Eigen::VectorXcd wsum(kd);

    for (long t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed =
            derive_seed(seed, rngtag::mc_trial, static_cast<std::uint64_t>(t));
        detail::draw_channels_into(fac, n_prbs, trial_seed, draw);
        detail::estimate_into(draw, est, pilots, cfg, sc.sigma2, trial_seed, hat);

        RngStream wrng(derive_seed(trial_seed, rngtag::data_noise));
        for (int n = 0; n < n_prbs; ++n)
            for (int m = 0; m < m_aps; ++m) {
                const double s =
                    std::sqrt(data_noise_scale * sc.sigma2[static_cast<std::size_t>(m)]);
                for (int i = 0; i < l; ++i)
                    wnoise(i, static_cast<Eigen::Index>(n) * m_aps + m) = s * wrng.cgaussian();
            }

        jdev.setZero();
        vareps_trial.setZero();
        ssum.setZero();
        wsum.setZero();

        for (int n = 0; n < n_prbs; ++n) {
            for (int d = 0; d < kd; ++d) {
                const double cd = codes.chip(d, n);
                jrow.setZero();
                for (int m : serving[static_cast<std::size_t>(d)]) {
                    const auto td = hat.ghat.col(draw.device_col(n, d, m));
                    // tg = t^H g, mu = g^H t
                    const cplx tg = td.dot(draw.device(n, d, m));
                    const cplx mu = std::conj(tg);
                    ssum(d) += std::norm(tg);
                    wsum(d) += cd * mu *
                               td.dot(wnoise.col(static_cast<Eigen::Index>(n) * m_aps + m));
                    for (int k = 0; k < kd; ++k) {
                        if (k == d) continue;
                        jdev(d, k) += cd * codes.chip(k, n) * mu *
                                      td.dot(draw.device(n, k, m));
                    }
                    for (int u = 0; u < ku; ++u)
                        jrow(u) += mu * td.dot(draw.user(n, u, m));
                }
                for (int u = 0; u < ku; ++u)
                    vareps_trial(d, u) += std::norm(cd * jrow(u));
            }
        }

        for (int d = 0; d < kd; ++d) {
            acc_s[static_cast<std::size_t>(d)].add(ssum(d));
            acc_chi[static_cast<std::size_t>(d)].add(std::norm(wsum(d)));
            for (int k = 0; k < kd; ++k)
                if (k != d)
                    acc_eps[static_cast<std::size_t>(d) * kd + k].add(std::norm(jdev(d, k)));
            for (int u = 0; u < ku; ++u)
                acc_vareps[static_cast<std::size_t>(d) * ku + u].add(vareps_trial(d, u));
        }
    }

    McDeviceMoments out;
    out.trials = trials;
    auto& mean = out.mean;
    auto& se = out.se;
    mean.lambda.setZero(kd);
    mean.nu.setZero(kd);
    mean.eps.setZero(kd, kd);
    mean.vareps.setZero(kd, ku);
    mean.chi.setZero(kd);
    se = mean;

    const double sqrt_t = std::sqrt(static_cast<double>(trials));
    for (int d = 0; d < kd; ++d) {
        const auto& as = acc_s[static_cast<std::size_t>(d)];
        const double var = as.variance();
        mean.lambda(d) = as.mean * as.mean;
        se.lambda(d) = 2.0 * std::abs(as.mean) * std::sqrt(var) / sqrt_t;
        mean.nu(d) = var;
        se.nu(d) = var * std::sqrt(2.0 / static_cast<double>(trials));

        mean.chi(d) = acc_chi[static_cast<std::size_t>(d)].mean();
        se.chi(d) = acc_chi[static_cast<std::size_t>(d)].se();
        for (int k = 0; k < kd; ++k) {
            if (k == d) continue;
            const auto& a = acc_eps[static_cast<std::size_t>(d) * kd + k];
            mean.eps(d, k) = a.mean();
            se.eps(d, k) = a.se();
        }
        for (int u = 0; u < ku; ++u) {
            const auto& a = acc_vareps[static_cast<std::size_t>(d) * ku + u];
            mean.vareps(d, u) = a.mean();
            se.vareps(d, u) = a.se();
        }
    }
    return out;
}

Eigen::VectorXd sinr_user(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                          const UserMoments& um) {
    const int ku = static_cast<int>(um.delta.size());
    const int kd = static_cast<int>(um.varkappa.cols());
    Eigen::VectorXd gamma(ku);
    for (int u = 0; u < ku; ++u) {
        double den = p(u) * um.upsilon(u) + um.xi(u);
        for (int k = 0; k < ku; ++k)
            if (k != u) den += p(k) * um.kappa(u, k);
        for (int d = 0; d < kd; ++d) den += q(d) * um.varkappa(u, d);
        gamma(u) = p(u) * um.delta(u) / den;
    }
    return gamma;
}

Eigen::VectorXd sinr_device(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                            const DeviceMoments& dm) {
    const int kd = static_cast<int>(dm.lambda.size());
    const int ku = static_cast<int>(dm.vareps.cols());
    Eigen::VectorXd rho(kd);
    for (int d = 0; d < kd; ++d) {
        double den = q(d) * dm.nu(d) + dm.chi(d);
        for (int k = 0; k < kd; ++k)
            if (k != d) den += q(k) * dm.eps(d, k);
        for (int u = 0; u < ku; ++u) den += p(u) * dm.vareps(d, u);
        rho(d) = q(d) * dm.lambda(d) / den;
    }
    return rho;
}

Eigen::VectorXd rate_user(const Eigen::VectorXd& gamma, const SystemConfig& cfg) {
    const double prelog = static_cast<double>(cfg.ul_symbols) /
                          static_cast<double>(cfg.coherence_samples) * cfg.bandwidth_hz;
    return prelog * (gamma.array() + 1.0).log2().matrix();
}

Eigen::VectorXd rate_device(const Eigen::VectorXd& rho, const SystemConfig& cfg) {
    const double prelog = static_cast<double>(cfg.ul_symbols) /
                          static_cast<double>(cfg.coherence_samples) * cfg.bandwidth_hz /
                          static_cast<double>(cfg.num_prbs);
    return prelog * (rho.array() + 1.0).log2().matrix();
}

namespace {

// Plain relative error. A zero denominator only happens when closed and
// sampled values are both exactly zero (zero channels propagate exactly
// through both routes), which is the "exact zero" case the report must not
// penalise.
double relative_gap(double closed, double mc) {
    const double denom = std::max(std::abs(closed), std::abs(mc));
    return denom == 0.0 ? 0.0 : std::abs(closed - mc) / denom;
}

std::string entry_name(const char* base, int i) {
    return std::string(base) + "[" + std::to_string(i) + "]";
}
std::string entry_name(const char* base, int i, int j) {
    return std::string(base) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
}

}  // namespace

std::vector<MomentRecord> compare_user_moments(const UserMoments& closed,
                                               const McUserMoments& mc) {
    const int ku = static_cast<int>(closed.delta.size());
    const int kd = static_cast<int>(closed.varkappa.cols());
    std::vector<MomentRecord> rec;

    auto push = [&](std::string name, double c, double m, double se) {
        rec.push_back({std::move(name), c, m, se, relative_gap(c, m), false});
    };

    for (int u = 0; u < ku; ++u)
        push(entry_name("delta", u), closed.delta(u), mc.mean.delta(u), mc.se.delta(u));
    for (int u = 0; u < ku; ++u)
        push(entry_name("upsilon", u), closed.upsilon(u), mc.mean.upsilon(u), mc.se.upsilon(u));
    for (int u = 0; u < ku; ++u)
        for (int k = 0; k < ku; ++k)
            if (k != u)
                push(entry_name("kappa", u, k), closed.kappa(u, k), mc.mean.kappa(u, k), mc.se.kappa(u, k));
    for (int u = 0; u < ku; ++u)
        for (int d = 0; d < kd; ++d)
            push(entry_name("varkappa", u, d), closed.varkappa(u, d), mc.mean.varkappa(u, d), mc.se.varkappa(u, d));
    for (int u = 0; u < ku; ++u)
        push(entry_name("xi", u), closed.xi(u), mc.mean.xi(u), mc.se.xi(u));
    return rec;
}

std::vector<MomentRecord> compare_device_moments(const DeviceMoments& closed,
                                                 const McDeviceMoments& mc,
                                                 double flag_threshold) {
    const int kd = static_cast<int>(closed.lambda.size());
    const int ku = static_cast<int>(closed.vareps.cols());
    std::vector<MomentRecord> rec;

    auto push = [&](std::string name, bool can_flag, double c, double m, double se) {
        const double gap = relative_gap(c, m);
        rec.push_back({std::move(name), c, m, se, gap,
                       can_flag && gap > flag_threshold});
    };

    for (int d = 0; d < kd; ++d)
        push(entry_name("lambda", d), false, closed.lambda(d), mc.mean.lambda(d), mc.se.lambda(d));
    for (int d = 0; d < kd; ++d)
        push(entry_name("nu", d), true, closed.nu(d), mc.mean.nu(d), mc.se.nu(d));
    for (int d = 0; d < kd; ++d)
        for (int k = 0; k < kd; ++k)
            if (k != d)
                push(entry_name("epsilon", d, k), true, closed.eps(d, k), mc.mean.eps(d, k), mc.se.eps(d, k));
    for (int d = 0; d < kd; ++d)
        for (int u = 0; u < ku; ++u)
            push(entry_name("varepsilon", d, u), true, closed.vareps(d, u), mc.mean.vareps(d, u), mc.se.vareps(d, u));
    for (int d = 0; d < kd; ++d)
        push(entry_name("chi", d), false, closed.chi(d), mc.mean.chi(d), mc.se.chi(d));
    return rec;
}

std::string comparison_report_json(const std::vector<MomentRecord>& user,
                                   const std::vector<MomentRecord>& device,
                                   long trials,
                                   const std::vector<std::string>& notes) {
    nlohmann::json j;
    j["schema"] = "cfcoex.moment_report.v1";
    j["trials"] = trials;
    auto dump = [](const std::vector<MomentRecord>& recs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : recs) {
            nlohmann::json e;
            e["moment"] = r.moment;
            e["closed"] = r.closed;
            e["mc"] = r.mc;
            e["mc_stderr"] = r.mc_stderr;
            e["rel_gap"] = r.rel_gap;
            e["flagged"] = r.flagged;
            arr.push_back(std::move(e));
        }
        return arr;
    };
    j["user"] = dump(user);
    j["device"] = dump(device);
    j["notes"] = notes;
    return j.dump(2);
}

}  // namespace cfcoex

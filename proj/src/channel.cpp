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
#include "cfcoex/channel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "cfcoex/rng.hpp"

namespace cfcoex {

namespace detail {

namespace {

// Hermitian PSD square root via eigendecomposition; tolerates singular
// matrices (zero LSF links). Diagonal matrices short-circuit to sqrt of the
// diagonal.
Eigen::MatrixXcd psd_factor(const Eigen::MatrixXcd& cov) {
    const int l = static_cast<int>(cov.rows());
    if (cov.isDiagonal(0.0)) {
        Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(l, l);
        for (int i = 0; i < l; ++i) {
            const double v = cov(i, i).real();
            f(i, i) = std::sqrt(std::max(v, 0.0));
        }
        return f;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("psd_factor: eigendecomposition failed");
    Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * vals.asDiagonal();
}

void fill_cgaussian(RngStream& rng, Eigen::VectorXcd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.cgaussian();
}

}  // namespace

CovarianceFactors CovarianceFactors::build(const Scenario& sc) {
    CovarianceFactors fac;
    fac.num_aps = sc.num_aps;
    fac.antennas = sc.antennas_per_ap;
    fac.user.resize(sc.R.size());
    for (std::size_t i = 0; i < sc.R.size(); ++i) fac.user[i] = psd_factor(sc.R[i]);
    fac.device.resize(sc.Q.size());
    for (std::size_t i = 0; i < sc.Q.size(); ++i) fac.device[i] = psd_factor(sc.Q[i]);
    return fac;
}

void draw_channels_into(const CovarianceFactors& fac, int num_prbs,
                        std::uint64_t seed, ChannelDraw& out) {
    const int m_aps = fac.num_aps;
    const int l = fac.antennas;
    const int ku = static_cast<int>(fac.user.size()) / m_aps;
    const int kd = static_cast<int>(fac.device.size()) / m_aps;

    out.num_prbs = num_prbs;
    out.num_users = ku;
    out.num_devices = kd;
    out.num_aps = m_aps;
    out.antennas = l;
    out.h.resize(l, static_cast<Eigen::Index>(num_prbs) * ku * m_aps);
    out.g.resize(l, static_cast<Eigen::Index>(num_prbs) * kd * m_aps);

    RngStream rng(derive_seed(seed, rngtag::channel_draw));
    Eigen::VectorXcd white(l);
    for (int n = 0; n < num_prbs; ++n) {
        for (int u = 0; u < ku; ++u)
            for (int m = 0; m < m_aps; ++m) {
                fill_cgaussian(rng, white);
                out.h.col(out.user_col(n, u, m)).noalias() =
                    fac.user[static_cast<std::size_t>(u) * m_aps + m] * white;
            }
        for (int d = 0; d < kd; ++d)
            for (int m = 0; m < m_aps; ++m) {
                fill_cgaussian(rng, white);
                out.g.col(out.device_col(n, d, m)).noalias() =
                    fac.device[static_cast<std::size_t>(d) * m_aps + m] * white;
            }
    }
}

void estimate_into(const ChannelDraw& draw, const EstimatorSet& est,
                   const PilotBook& pilots, const SystemConfig& cfg,
                   const std::vector<double>& sigma2, std::uint64_t noise_seed,
                   ChannelEstimates& out) {
    const int m_aps = draw.num_aps;
    const int l = draw.antennas;
    const int ku = draw.num_users;
    const int kd = draw.num_devices;
    const int n_prbs = draw.num_prbs;
    const int tau_p = pilots.tau_p;

    out.hhat.resize(l, draw.h.cols());
    out.ghat.resize(l, draw.g.cols());

    RngStream rng(derive_seed(noise_seed, rngtag::pilot_noise));

    // Projections of the pilot-block noise onto the orthonormal base
    // vectors are i.i.d. CN(0, sigma2 I); one draw per (PRB, AP, base
    // vector), shared by all terminals on that base vector.
    Eigen::MatrixXcd noise(l, tau_p);
    Eigen::VectorXcd obs(l);

    for (int n = 0; n < n_prbs; ++n)
        for (int m = 0; m < m_aps; ++m) {
            const double sigma = std::sqrt(sigma2[static_cast<std::size_t>(m)]);
            for (int p = 0; p < tau_p; ++p)
                for (int i = 0; i < l; ++i) noise(i, p) = sigma * rng.cgaussian();

            for (int u = 0; u < ku; ++u) {
                obs = noise.col(pilots.user_pilot[u]);
                for (int k = 0; k < ku; ++k)
                    if (pilots.gram_uu(k, u) != 0.0)
                        obs += std::sqrt(cfg.pilot_power_of_user(k)) *
                               pilots.gram_uu(k, u) * draw.user(n, k, m);
                for (int d = 0; d < kd; ++d)
                    if (pilots.gram_ud(u, d) != 0.0)
                        obs += std::sqrt(cfg.pilot_power_of_device(d)) *
                               pilots.gram_ud(u, d) * draw.device(n, d, m);
                out.hhat.col(draw.user_col(n, u, m)).noalias() =
                    std::sqrt(cfg.pilot_power_of_user(u)) * (est.A_of(u, m) * obs);
            }

            for (int d = 0; d < kd; ++d) {
                obs = noise.col(pilots.device_pilot[d]);
                for (int k = 0; k < kd; ++k)
                    if (pilots.gram_dd(k, d) != 0.0)
                        obs += std::sqrt(cfg.pilot_power_of_device(k)) *
                               pilots.gram_dd(k, d) * draw.device(n, k, m);
                for (int u = 0; u < ku; ++u)
                    if (pilots.gram_ud(u, d) != 0.0)
                        obs += std::sqrt(cfg.pilot_power_of_user(u)) *
                               pilots.gram_ud(u, d) * draw.user(n, u, m);
                out.ghat.col(draw.device_col(n, d, m)).noalias() =
                    std::sqrt(cfg.pilot_power_of_device(d)) * (est.B_of(d, m) * obs);
            }
        }
}

}  // namespace detail

std::string ChannelDraw::to_text() const {
    std::ostringstream os;
    os << "prbs " << num_prbs << " users " << num_users << " devices "
       << num_devices << " aps " << num_aps << " antennas " << antennas << '\n';
    char buf[64];
    auto dump = [&](char kind, const Eigen::MatrixXcd& mat, int terminals) {
        for (int n = 0; n < num_prbs; ++n)
            for (int k = 0; k < terminals; ++k)
                for (int m = 0; m < num_aps; ++m) {
                    os << kind << ' ' << n << ' ' << k << ' ' << m;
                    const Eigen::Index col =
                        (static_cast<Eigen::Index>(n) * terminals + k) * num_aps + m;
                    for (int i = 0; i < antennas; ++i) {
                        const std::complex<double> v = mat(i, col);
                        std::snprintf(buf, sizeof(buf), " %.17g %.17g", v.real(),
                                      v.imag());
                        os << buf;
                    }
                    os << '\n';
                }
    };
    dump('h', h, num_users);
    dump('g', g, num_devices);
    return os.str();
}

ChannelDraw draw_channels(const Scenario& sc, int num_prbs, std::uint64_t seed) {
    if (num_prbs < 1)
        throw std::domain_error("draw_channels: num_prbs must be >= 1");
    const auto fac = detail::CovarianceFactors::build(sc);
    ChannelDraw out;
    detail::draw_channels_into(fac, num_prbs, seed, out);
    return out;
}

EstimatorSet build_estimators(const Scenario& sc, const PilotBook& pilots,
                              const SystemConfig& cfg) {
    const int m_aps = sc.num_aps;
    const int l = sc.antennas_per_ap;
    const int ku = sc.num_users;
    const int kd = sc.num_devices;

    if (static_cast<int>(pilots.user_pilot.size()) != ku ||
        static_cast<int>(pilots.device_pilot.size()) != kd)
        throw std::invalid_argument("build_estimators: pilot book does not match scenario");

    EstimatorSet est;
    est.num_users = ku;
    est.num_devices = kd;
    est.num_aps = m_aps;
    est.antennas = l;
    est.A.resize(static_cast<std::size_t>(ku) * m_aps);
    est.C.resize(static_cast<std::size_t>(ku) * m_aps);
    est.B.resize(static_cast<std::size_t>(kd) * m_aps);
    est.D.resize(static_cast<std::size_t>(kd) * m_aps);

    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(l, l);

    for (int m = 0; m < m_aps; ++m) {
        const double s2 = sc.sigma2[static_cast<std::size_t>(m)];

        // Covariance of the observation on each base vector is shared by
        // the terminals assigned to it; assemble per base vector once.
        std::vector<Eigen::MatrixXcd> per_pilot(
            static_cast<std::size_t>(pilots.tau_p),
            Eigen::MatrixXcd::Zero(l, l));
        for (int k = 0; k < ku; ++k)
            per_pilot[static_cast<std::size_t>(pilots.user_pilot[k])] +=
                cfg.pilot_power_of_user(k) * sc.R_of(k, m);
        for (int d = 0; d < kd; ++d)
            per_pilot[static_cast<std::size_t>(pilots.device_pilot[d])] +=
                cfg.pilot_power_of_device(d) * sc.Q_of(d, m);

        for (int u = 0; u < ku; ++u) {
            const std::size_t idx = static_cast<std::size_t>(u) * m_aps + m;
            Eigen::MatrixXcd c = per_pilot[static_cast<std::size_t>(pilots.user_pilot[u])] + s2 * eye;
            Eigen::LLT<Eigen::MatrixXcd> llt(c);
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("build_estimators: observation covariance not positive definite");
            // A = R C^{-1} = (C^{-1} R)^H since both are Hermitian
            est.A[idx] = llt.solve(sc.R_of(u, m)).adjoint();
            est.C[idx] = std::move(c);
        }
        for (int d = 0; d < kd; ++d) {
            const std::size_t idx = static_cast<std::size_t>(d) * m_aps + m;
            Eigen::MatrixXcd c = per_pilot[static_cast<std::size_t>(pilots.device_pilot[d])] + s2 * eye;
            Eigen::LLT<Eigen::MatrixXcd> llt(c);
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("build_estimators: observation covariance not positive definite");
            est.B[idx] = llt.solve(sc.Q_of(d, m)).adjoint();
            est.D[idx] = std::move(c);
        }
    }
    return est;
}

ChannelEstimates estimate_channels(const ChannelDraw& draw, const EstimatorSet& est,
                                   const PilotBook& pilots, const SystemConfig& cfg,
                                   const Scenario& sc, std::uint64_t noise_seed) {
    if (draw.num_users != est.num_users || draw.num_devices != est.num_devices ||
        draw.num_aps != est.num_aps || draw.antennas != est.antennas)
        throw std::invalid_argument("estimate_channels: draw and estimator shapes differ");
    ChannelEstimates out;
    detail::estimate_into(draw, est, pilots, cfg, sc.sigma2, noise_seed, out);
    return out;
}

}  // namespace cfcoex

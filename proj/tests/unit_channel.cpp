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

#include <algorithm>

#include "cfcoex/channel.hpp"
#include "test_helpers.hpp"

using namespace cfcoex;
using cfcoex::testing::manual_pilots;
using cfcoex::testing::manual_scenario;

TEST_CASE("channel draws are deterministic in the seed") {
    Eigen::MatrixXd alpha(1, 2), beta(1, 2);
    alpha << 1.0, 0.5;
    beta << 0.25, 0.125;
    const Scenario sc = manual_scenario(alpha, beta, 2, 1.0);

    const ChannelDraw a = draw_channels(sc, 3, 5);
    const ChannelDraw b = draw_channels(sc, 3, 5);
    CHECK(a.h == b.h);
    CHECK(a.g == b.g);
    const ChannelDraw c = draw_channels(sc, 3, 6);
    CHECK(a.h != c.h);
}

TEST_CASE("zero covariance gives the zero channel") {
    Eigen::MatrixXd alpha(1, 1), beta(1, 1);
    alpha << 0.0;
    beta << 1.0;
    const Scenario sc = manual_scenario(alpha, beta, 3, 1.0);
    const ChannelDraw d = draw_channels(sc, 4, 9);
    CHECK(d.h.norm() == 0.0);
    CHECK(d.g.norm() > 0.0);
}

TEST_CASE("sample covariance converges to the model covariance") {
    Eigen::MatrixXd alpha(1, 1), beta(1, 1);
    alpha << 0.7;
    beta << 0.2;
    const Scenario sc = manual_scenario(alpha, beta, 2, 1.0);

    // blocks are i.i.d., so one long draw provides the sample
    const int n = 100000;
    const ChannelDraw d = draw_channels(sc, n, 33);
    Eigen::Matrix2cd cov = Eigen::Matrix2cd::Zero();
    for (int i = 0; i < n; ++i) {
        const auto v = d.user(i, 0, 0);
        cov += v * v.adjoint();
    }
    cov /= n;
    const Eigen::Matrix2cd target = 0.7 * Eigen::Matrix2cd::Identity();
    CHECK((cov - target).norm() / target.norm() < 0.02);
}

TEST_CASE("correlated draws reproduce the off-diagonal structure") {
    SystemConfig cfg;
    cfg.num_aps = 1;
    cfg.antennas_per_ap = 2;
    cfg.num_users = 1;
    cfg.num_devices = 1;
    cfg.serving_aps = 1;
    cfg.pilot_len = 2;
    cfg.ul_symbols = 98;
    cfg.correlation = CorrelationModel::exponential;
    cfg.correlation_coeff = 0.5;
    const Scenario sc = generate_scenario(cfg, 4);

    const int n = 100000;
    const ChannelDraw d = draw_channels(sc, n, 12);
    Eigen::Matrix2cd cov = Eigen::Matrix2cd::Zero();
    for (int i = 0; i < n; ++i) {
        const auto v = d.user(i, 0, 0);
        cov += v * v.adjoint();
    }
    cov /= n;
    CHECK((cov - sc.R_of(0, 0)).norm() / sc.R_of(0, 0).norm() < 0.02);
}

TEST_CASE("estimator matrices solve the textbook single-link case") {
    // eta = 1, alpha = 1, sigma2 = 1, orthogonal pilots: C = 2 I, A = 0.5 I
    Eigen::MatrixXd alpha(1, 1), beta(1, 1);
    alpha << 1.0;
    beta << 0.5;
    Scenario sc = manual_scenario(alpha, beta, 2, 1.0);
    const PilotBook pilots = manual_pilots(2, {0}, {1});
    SystemConfig cfg;
    cfg.num_aps = 1;
    cfg.antennas_per_ap = 2;
    cfg.num_users = 1;
    cfg.num_devices = 1;
    cfg.serving_aps = 1;
    cfg.pilot_len = 2;
    cfg.ul_symbols = 98;
    cfg.pilot_power_user = {1.0};
    cfg.pilot_power_device = {1.0};

    const EstimatorSet est = build_estimators(sc, pilots, cfg);
    const Eigen::MatrixXcd expect_c = 2.0 * Eigen::MatrixXcd::Identity(2, 2);
    CHECK((est.C_of(0, 0) - expect_c).norm() < 1e-14);
    CHECK((est.A_of(0, 0) - 0.5 * Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-14);

    // device side: D = 0.5 I + I = 1.5 I, B = beta / bbar = 1/3
    CHECK((est.B_of(0, 0) - (0.5 / 1.5) * Eigen::MatrixXcd::Identity(2, 2)).norm() <
          1e-14);
}

TEST_CASE("pilot sharing adds the contamination term to C") {
    Eigen::MatrixXd alpha(2, 1), beta(1, 1);
    alpha << 1.0, 0.25;
    beta << 0.0;
    Scenario sc = manual_scenario(alpha, beta, 2, 1.0);
    SystemConfig cfg;
    cfg.num_aps = 1;
    cfg.antennas_per_ap = 2;
    cfg.num_users = 2;
    cfg.num_devices = 1;
    cfg.serving_aps = 1;
    cfg.pilot_len = 4;
    cfg.ul_symbols = 96;
    cfg.pilot_power_user = {1.0, 2.0};
    cfg.pilot_power_device = {1.0};

    const PilotBook shared = manual_pilots(4, {0, 0}, {1});
    const EstimatorSet est_shared = build_estimators(sc, shared, cfg);
    // C = eta_0 R_0 + eta_1 R_1 + sigma2 I = (1 + 0.5 + 1) I
    CHECK((est_shared.C_of(0, 0) - 2.5 * Eigen::MatrixXcd::Identity(2, 2)).norm() <
          1e-14);

    const PilotBook orth = manual_pilots(4, {0, 2}, {1});
    const EstimatorSet est_orth = build_estimators(sc, orth, cfg);
    CHECK((est_orth.C_of(0, 0) - 2.0 * Eigen::MatrixXcd::Identity(2, 2)).norm() <
          1e-14);
}

TEST_CASE("estimator vanishes as the noise dominates") {
    Eigen::MatrixXd alpha(1, 1), beta(1, 1);
    alpha << 1.0;
    beta << 1.0;
    Scenario sc = manual_scenario(alpha, beta, 2, 1e12);
    const PilotBook pilots = manual_pilots(2, {0}, {1});
    SystemConfig cfg;
    cfg.num_aps = 1;
    cfg.antennas_per_ap = 2;
    cfg.num_users = 1;
    cfg.num_devices = 1;
    cfg.serving_aps = 1;
    cfg.pilot_len = 2;
    cfg.ul_symbols = 98;
    cfg.pilot_power_user = {1.0};
    cfg.pilot_power_device = {1.0};
    const EstimatorSet est = build_estimators(sc, pilots, cfg);
    CHECK(est.A_of(0, 0).norm() < 1e-11);
}

TEST_CASE("MMSE identities hold for the sampled estimates") {
    // single user, orthogonal pilots; the error covariance must approach
    // R - eta A C A^H and the estimate must decorrelate from the error
    Eigen::MatrixXd alpha(1, 1), beta(1, 1);
    alpha << 2.0;
    beta << 1.0;
    Scenario sc = manual_scenario(alpha, beta, 2, 1.5);
    const PilotBook pilots = manual_pilots(2, {0}, {1});
    SystemConfig cfg;
    cfg.num_aps = 1;
    cfg.antennas_per_ap = 2;
    cfg.num_users = 1;
    cfg.num_devices = 1;
    cfg.serving_aps = 1;
    cfg.pilot_len = 2;
    cfg.ul_symbols = 98;
    cfg.pilot_power_user = {0.8};
    cfg.pilot_power_device = {0.6};

    const EstimatorSet est = build_estimators(sc, pilots, cfg);
    const int n = 50000;
    const ChannelDraw draw = draw_channels(sc, n, 3);
    const ChannelEstimates hat = estimate_channels(draw, est, pilots, cfg, sc, 4);

    Eigen::Matrix2cd err_cov = Eigen::Matrix2cd::Zero();
    Eigen::Matrix2cd cross = Eigen::Matrix2cd::Zero();
    Eigen::Matrix2cd est_cov = Eigen::Matrix2cd::Zero();
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2cd h = draw.user(i, 0, 0);
        const Eigen::Vector2cd hh = hat.hhat.col(draw.user_col(i, 0, 0));
        const Eigen::Vector2cd e = h - hh;
        err_cov += e * e.adjoint();
        cross += hh * e.adjoint();
        est_cov += hh * hh.adjoint();
    }
    err_cov /= n;
    cross /= n;
    est_cov /= n;

    const double eta = 0.8;
    const Eigen::Matrix2cd a = est.A_of(0, 0);
    const Eigen::Matrix2cd closed_err =
        sc.R_of(0, 0) - eta * a * est.C_of(0, 0) * a.adjoint();
    const Eigen::Matrix2cd closed_est = eta * a * est.C_of(0, 0) * a.adjoint();

    CHECK((err_cov - closed_err).norm() / closed_err.norm() < 0.03);
    CHECK(cross.norm() / closed_est.norm() < 0.03);
    CHECK((est_cov - closed_est).norm() / closed_est.norm() < 0.03);
}

TEST_CASE("zero channels and zero noise produce zero estimates") {
    Eigen::MatrixXd alpha(1, 1), beta(1, 1);
    alpha << 0.0;
    beta << 0.0;
    Scenario sc = manual_scenario(alpha, beta, 2, 1.0);
    const PilotBook pilots = manual_pilots(2, {0}, {1});
    SystemConfig cfg;
    cfg.num_aps = 1;
    cfg.antennas_per_ap = 2;
    cfg.num_users = 1;
    cfg.num_devices = 1;
    cfg.serving_aps = 1;
    cfg.pilot_len = 2;
    cfg.ul_symbols = 98;

    EstimatorSet est;
    est.num_users = 1;
    est.num_devices = 1;
    est.num_aps = 1;
    est.antennas = 2;
    est.A = {0.5 * Eigen::MatrixXcd::Identity(2, 2)};
    est.C = {Eigen::MatrixXcd::Identity(2, 2)};
    est.B = {0.5 * Eigen::MatrixXcd::Identity(2, 2)};
    est.D = {Eigen::MatrixXcd::Identity(2, 2)};

    const ChannelDraw draw = draw_channels(sc, 2, 1);
    ChannelEstimates hat;
    detail::estimate_into(draw, est, pilots, cfg, {0.0}, 7, hat);
    CHECK(hat.hhat.norm() == 0.0);
    CHECK(hat.ghat.norm() == 0.0);
}

TEST_CASE("draws export as a deterministic fixture table") {
    Eigen::MatrixXd alpha(1, 1), beta(1, 1);
    alpha << 0.5;
    beta << 0.25;
    const Scenario sc = manual_scenario(alpha, beta, 2, 1.0);
    const ChannelDraw a = draw_channels(sc, 2, 6);
    const ChannelDraw b = draw_channels(sc, 2, 6);
    const std::string text = a.to_text();
    CHECK(text == b.to_text());
    CHECK(text.rfind("prbs 2 users 1 devices 1 aps 1 antennas 2", 0) == 0);
    // one header plus one line per (kind, block, terminal, AP)
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 2);
}

TEST_CASE("estimates are deterministic in the noise seed") {
    Eigen::MatrixXd alpha(2, 2), beta(1, 2);
    alpha << 1.0, 0.5, 0.25, 2.0;
    beta << 0.5, 0.5;
    Scenario sc = manual_scenario(alpha, beta, 2, 0.3);
    const PilotBook pilots = manual_pilots(3, {0, 1}, {2});
    SystemConfig cfg;
    cfg.num_aps = 2;
    cfg.antennas_per_ap = 2;
    cfg.num_users = 2;
    cfg.num_devices = 1;
    cfg.serving_aps = 2;
    cfg.pilot_len = 3;
    cfg.ul_symbols = 97;

    const EstimatorSet est = build_estimators(sc, pilots, cfg);
    const ChannelDraw draw = draw_channels(sc, 3, 2);
    const ChannelEstimates a = estimate_channels(draw, est, pilots, cfg, sc, 11);
    const ChannelEstimates b = estimate_channels(draw, est, pilots, cfg, sc, 11);
    const ChannelEstimates c = estimate_channels(draw, est, pilots, cfg, sc, 12);
    CHECK(a.hhat == b.hhat);
    CHECK(a.ghat == b.ghat);
    CHECK(a.hhat != c.hhat);
}

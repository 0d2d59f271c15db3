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
#include "cfcoex/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cfcoex/rng.hpp"

namespace cfcoex {

using json = nlohmann::json;

double wrap_distance(const Point& p1, const Point& p2, double side) {
    double dx = std::abs(p1.x - p2.x);
    double dy = std::abs(p1.y - p2.y);
    dx = std::min(dx, side - dx);
    dy = std::min(dy, side - dy);
    return std::hypot(dx, dy);
}

double path_loss_db(double d_m, double fc_hz) {
    if (d_m <= 0.0)
        throw std::domain_error("path_loss_db: distance must be positive");
    const double d = std::max(d_m, 10.0);
    return 36.7 * std::log10(d) + 22.7 + 26.0 * std::log10(fc_hz / 1e9);
}

std::vector<std::uint8_t> associate(const std::vector<double>& lsf_row, int ms) {
    const int m = static_cast<int>(lsf_row.size());
    if (ms > m)
        throw std::domain_error("associate: Ms exceeds the number of APs");
    if (ms < 0) throw std::domain_error("associate: Ms must be nonnegative");

    std::vector<int> idx(lsf_row.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (lsf_row[a] != lsf_row[b]) return lsf_row[a] > lsf_row[b];
        return a < b;
    });

    std::vector<std::uint8_t> mask(lsf_row.size(), 0);
    for (int i = 0; i < ms; ++i) mask[static_cast<std::size_t>(idx[i])] = 1;
    return mask;
}

namespace {

Point draw_point(std::uint64_t seed, std::uint64_t tag, int index, double side) {
    RngStream rng(derive_seed(seed, tag, static_cast<std::uint64_t>(index)));
    return {rng.uniform(0.0, side), rng.uniform(0.0, side)};
}

Eigen::MatrixXcd exponential_correlation(double lsf, int l, double coeff) {
    Eigen::MatrixXcd r(l, l);
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j)
            r(i, j) = lsf * std::pow(coeff, std::abs(i - j));
    return r;
}

}  // namespace

Scenario generate_scenario(const SystemConfig& cfg, std::uint64_t seed) {
    const bool diag = cfg.correlation == CorrelationModel::uncorrelated;
    const double coeff = cfg.correlation_coeff;
    CorrelationProvider provider = [diag, coeff](double lsf, int l, TerminalKind,
                                                 int, int) -> Eigen::MatrixXcd {
        if (diag)
            return lsf * Eigen::MatrixXcd::Identity(l, l);
        return exponential_correlation(lsf, l, coeff);
    };
    Scenario sc = generate_scenario(cfg, seed, provider, diag);
    sc.correlation_model = cfg.correlation;
    sc.correlation_coeff = diag ? 0.0 : coeff;
    return sc;
}

Scenario generate_scenario(const SystemConfig& cfg, std::uint64_t seed,
                           const CorrelationProvider& provider,
                           bool provider_is_diagonal) {
    cfg.validate();

    const int m_aps = cfg.num_aps;
    const int l = cfg.antennas_per_ap;
    const int ku = cfg.num_users;
    const int kd = cfg.num_devices;

    Scenario sc;
    sc.num_aps = m_aps;
    sc.antennas_per_ap = l;
    sc.num_users = ku;
    sc.num_devices = kd;
    sc.area_side_m = cfg.area_side_m;
    sc.uncorrelated = provider_is_diagonal;

    sc.ap_positions.reserve(m_aps);
    for (int m = 0; m < m_aps; ++m)
        sc.ap_positions.push_back(draw_point(seed, rngtag::ap_position, m, cfg.area_side_m));
    sc.user_positions.reserve(ku);
    for (int u = 0; u < ku; ++u)
        sc.user_positions.push_back(draw_point(seed, rngtag::user_position, u, cfg.area_side_m));
    sc.device_positions.reserve(kd);
    for (int d = 0; d < kd; ++d)
        sc.device_positions.push_back(draw_point(seed, rngtag::device_position, d, cfg.area_side_m));

    auto lsf_of = [&](const Point& p, const Point& ap, double shadow_db) {
        const double dist = wrap_distance(p, ap, cfg.area_side_m);
        const double pl = path_loss_db(std::max(dist, 1e-3), cfg.carrier_freq_hz);
        return std::pow(10.0, -(pl + shadow_db) / 10.0);
    };

    sc.alpha.resize(ku, m_aps);
    sc.R.resize(static_cast<std::size_t>(ku) * m_aps);
    for (int u = 0; u < ku; ++u) {
        RngStream shadow(derive_seed(seed, rngtag::shadow_user, static_cast<std::uint64_t>(u)));
        for (int m = 0; m < m_aps; ++m) {
            const double sh = cfg.shadow_fading ? cfg.shadow_std_db * shadow.gaussian() : 0.0;
            const double lsf = lsf_of(sc.user_positions[u], sc.ap_positions[m], sh);
            Eigen::MatrixXcd r = provider(lsf, l, TerminalKind::user, u, m);
            sc.R[static_cast<std::size_t>(u) * m_aps + m] = r;
            sc.alpha(u, m) = r.trace().real() / l;
        }
    }

    sc.beta.resize(kd, m_aps);
    sc.Q.resize(static_cast<std::size_t>(kd) * m_aps);
    for (int d = 0; d < kd; ++d) {
        RngStream shadow(derive_seed(seed, rngtag::shadow_device, static_cast<std::uint64_t>(d)));
        for (int m = 0; m < m_aps; ++m) {
            const double sh = cfg.shadow_fading ? cfg.shadow_std_db * shadow.gaussian() : 0.0;
            const double lsf = lsf_of(sc.device_positions[d], sc.ap_positions[m], sh);
            Eigen::MatrixXcd q = provider(lsf, l, TerminalKind::device, d, m);
            sc.Q[static_cast<std::size_t>(d) * m_aps + m] = q;
            sc.beta(d, m) = q.trace().real() / l;
        }
    }

    sc.assoc_user.resize(ku);
    for (int u = 0; u < ku; ++u) {
        std::vector<double> row(m_aps);
        for (int m = 0; m < m_aps; ++m) row[static_cast<std::size_t>(m)] = sc.alpha(u, m);
        sc.assoc_user[u] = associate(row, cfg.serving_aps);
    }
    sc.assoc_device.resize(kd);
    for (int d = 0; d < kd; ++d) {
        std::vector<double> row(m_aps);
        for (int m = 0; m < m_aps; ++m) row[static_cast<std::size_t>(m)] = sc.beta(d, m);
        sc.assoc_device[d] = associate(row, cfg.serving_aps);
    }

    sc.sigma2.assign(m_aps, cfg.noise_power_w());
    return sc;
}

namespace {

json points_to_json(const std::vector<Point>& pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back({p.x, p.y});
    return arr;
}

std::vector<Point> points_from_json(const json& arr) {
    std::vector<Point> pts;
    for (const auto& p : arr) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return pts;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows.at(i).at(j).get<double>();
    return m;
}

json masks_to_json(const std::vector<std::vector<std::uint8_t>>& masks) {
    json rows = json::array();
    for (const auto& row : masks) {
        json r = json::array();
        for (auto v : row) r.push_back(static_cast<int>(v));
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<std::vector<std::uint8_t>> masks_from_json(const json& rows) {
    std::vector<std::vector<std::uint8_t>> masks;
    for (const auto& row : rows) {
        std::vector<std::uint8_t> r;
        for (const auto& v : row) r.push_back(static_cast<std::uint8_t>(v.get<int>()));
        masks.push_back(std::move(r));
    }
    return masks;
}

}  // namespace

std::string Scenario::to_json() const {
    json j;
    j["schema"] = "cfcoex.scenario.v1";
    j["num_aps"] = num_aps;
    j["antennas_per_ap"] = antennas_per_ap;
    j["num_users"] = num_users;
    j["num_devices"] = num_devices;
    j["area_side_m"] = area_side_m;
    j["ap_positions"] = points_to_json(ap_positions);
    j["user_positions"] = points_to_json(user_positions);
    j["device_positions"] = points_to_json(device_positions);
    j["alpha"] = matrix_to_json(alpha);
    j["beta"] = matrix_to_json(beta);
    j["assoc_user"] = masks_to_json(assoc_user);
    j["assoc_device"] = masks_to_json(assoc_device);
    j["sigma2"] = sigma2;
    switch (correlation_model) {
        case CorrelationModel::uncorrelated:
            j["correlation"] = {{"model", "uncorrelated"}};
            break;
        case CorrelationModel::exponential:
            j["correlation"] = {{"model", "exponential"}, {"coeff", correlation_coeff}};
            break;
    }
    if (!uncorrelated && correlation_model == CorrelationModel::uncorrelated)
        throw std::runtime_error("Scenario::to_json: custom correlation matrices are not serialisable");
    return j.dump(2);
}

Scenario Scenario::from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "cfcoex.scenario.v1")
        throw std::runtime_error("Scenario::from_json: unknown schema");

    Scenario sc;
    sc.num_aps = j.at("num_aps").get<int>();
    sc.antennas_per_ap = j.at("antennas_per_ap").get<int>();
    sc.num_users = j.at("num_users").get<int>();
    sc.num_devices = j.at("num_devices").get<int>();
    sc.area_side_m = j.at("area_side_m").get<double>();
    sc.ap_positions = points_from_json(j.at("ap_positions"));
    sc.user_positions = points_from_json(j.at("user_positions"));
    sc.device_positions = points_from_json(j.at("device_positions"));
    sc.alpha = matrix_from_json(j.at("alpha"));
    sc.beta = matrix_from_json(j.at("beta"));
    sc.assoc_user = masks_from_json(j.at("assoc_user"));
    sc.assoc_device = masks_from_json(j.at("assoc_device"));
    sc.sigma2 = j.at("sigma2").get<std::vector<double>>();

    const std::string model = j.at("correlation").at("model").get<std::string>();
    const int l = sc.antennas_per_ap;
    if (model == "uncorrelated") {
        sc.correlation_model = CorrelationModel::uncorrelated;
        sc.uncorrelated = true;
        sc.correlation_coeff = 0.0;
    } else if (model == "exponential") {
        sc.correlation_model = CorrelationModel::exponential;
        sc.uncorrelated = false;
        sc.correlation_coeff = j.at("correlation").at("coeff").get<double>();
    } else {
        throw std::runtime_error("Scenario::from_json: unknown correlation model");
    }

    sc.R.resize(static_cast<std::size_t>(sc.num_users) * sc.num_aps);
    for (int u = 0; u < sc.num_users; ++u)
        for (int m = 0; m < sc.num_aps; ++m)
            sc.R[static_cast<std::size_t>(u) * sc.num_aps + m] =
                sc.uncorrelated
                    ? Eigen::MatrixXcd(sc.alpha(u, m) * Eigen::MatrixXcd::Identity(l, l))
                    : exponential_correlation(sc.alpha(u, m), l, sc.correlation_coeff);
    sc.Q.resize(static_cast<std::size_t>(sc.num_devices) * sc.num_aps);
    for (int d = 0; d < sc.num_devices; ++d)
        for (int m = 0; m < sc.num_aps; ++m)
            sc.Q[static_cast<std::size_t>(d) * sc.num_aps + m] =
                sc.uncorrelated
                    ? Eigen::MatrixXcd(sc.beta(d, m) * Eigen::MatrixXcd::Identity(l, l))
                    : exponential_correlation(sc.beta(d, m), l, sc.correlation_coeff);
    return sc;
}

}  // namespace cfcoex

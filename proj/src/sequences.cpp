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
#include "cfcoex/sequences.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cfcoex/rng.hpp"

namespace cfcoex {

namespace {

// One primitive polynomial per degree, given as the exponents of the
// feedback taps of x^n + ... + 1 (degree term listed, constant implied).
// Standard maximal-length LFSR table; gen_mseq verifies maximality at run
// time, so a wrong entry fails loudly instead of producing a bad code.
const std::vector<std::vector<int>> kPrimitiveTaps = {
    {},            // n = 0 unused
    {1},           // x + 1
    {2, 1},        // x^2 + x + 1
    {3, 1},        // x^3 + x + 1
    {4, 1},        // x^4 + x + 1
    {5, 2},        // x^5 + x^2 + 1
    {6, 1},        // x^6 + x + 1
    {7, 1},        // x^7 + x + 1
    {8, 6, 5, 4},  // x^8 + x^6 + x^5 + x^4 + 1
    {9, 4},        // x^9 + x^4 + 1
    {10, 3},       // x^10 + x^3 + 1
    {11, 2},       // x^11 + x^2 + 1
    {12, 6, 4, 1},
    {13, 4, 3, 1},
    {14, 5, 3, 1},
    {15, 1},
    {16, 15, 13, 4},
    {17, 3},
    {18, 7},
    {19, 6, 2, 1},
    {20, 3},
};

}  // namespace

std::vector<std::int8_t> gen_mseq(int n) {
    if (n < 1 || n > 20)
        throw std::domain_error("gen_mseq: n must lie in [1, 20], got " +
                                std::to_string(n));

    const std::size_t period = (std::size_t{1} << n) - 1u;
    std::vector<std::int8_t> chips(period);

    const std::vector<int>& taps = kPrimitiveTaps[static_cast<std::size_t>(n)];
    const std::uint32_t seed_state = (1u << n) - 1u;  // all ones
    std::uint32_t state = seed_state;

    for (std::size_t i = 0; i < period; ++i) {
        const std::uint32_t out = state & 1u;  // bit fed out this step
        chips[i] = out ? std::int8_t{-1} : std::int8_t{1};

        // recurrence a[j+n] = a[j] + sum over middle exponents e of a[j+e];
        // bit e of the state holds a[j+e]
        std::uint32_t fb = state & 1u;
        for (int e : taps)
            if (e < n) fb ^= (state >> e) & 1u;
        state = (state >> 1) | (fb << (n - 1));

        if (state == seed_state && i + 1 != period)
            throw std::logic_error("gen_mseq: tap table entry for n = " +
                                   std::to_string(n) + " is not maximal");
    }
    if (state != seed_state)
        throw std::logic_error("gen_mseq: LFSR period mismatch for n = " +
                               std::to_string(n));
    return chips;
}

long SpreadingBook::correlation(int d, int k) const {
    long acc = 0;
    for (int n = 0; n < length; ++n)
        acc += static_cast<long>(chips[d][n]) * static_cast<long>(chips[k][n]);
    return acc;
}

std::string SpreadingBook::to_text() const {
    std::ostringstream os;
    for (const auto& row : chips) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ' ';
            os << static_cast<int>(row[i]);
        }
        os << '\n';
    }
    return os.str();
}

SpreadingBook build_spreading_book(int n, int num_devices) {
    if (num_devices < 1)
        throw std::domain_error("build_spreading_book: need at least one device");

    SpreadingBook book;
    book.base = gen_mseq(n);
    book.length = static_cast<int>(book.base.size());

    // N == 1 is the no-spreading configuration: a single trivial chip that
    // every device shares. Distinct shifts exist only for N > 1.
    if (book.length > 1 && num_devices > book.length)
        throw std::domain_error(
            "build_spreading_book: " + std::to_string(num_devices) +
            " devices exceed the " + std::to_string(book.length) +
            " distinct cyclic shifts");

    book.chips.resize(num_devices);
    book.shift.resize(num_devices);
    for (int d = 0; d < num_devices; ++d) {
        const int s = (book.length > 1) ? d : 0;
        book.shift[d] = s;
        book.chips[d].resize(book.length);
        for (int i = 0; i < book.length; ++i)
            book.chips[d][i] = book.base[(i + s) % book.length];
    }
    return book;
}

std::string PilotBook::to_text() const {
    std::ostringstream os;
    os << "tau_p " << tau_p << '\n';
    os << "users";
    for (int p : user_pilot) os << ' ' << p;
    os << "\ndevices";
    for (int p : device_pilot) os << ' ' << p;
    os << '\n';
    return os.str();
}

PilotBook build_pilot_book(int tau_p, int num_users, int num_devices,
                           std::uint64_t seed) {
    if (tau_p < 1)
        throw std::domain_error("build_pilot_book: tau_p must be >= 1");

    PilotBook book;
    book.tau_p = tau_p;

    // Orthonormal DFT base vectors; column j is exp(-2*pi*i*j*t/tau_p)/sqrt(tau_p).
    Eigen::MatrixXcd base(tau_p, tau_p);
    const double scale = 1.0 / std::sqrt(static_cast<double>(tau_p));
    for (int j = 0; j < tau_p; ++j)
        for (int t = 0; t < tau_p; ++t) {
            const double ang = -2.0 * EIGEN_PI * static_cast<double>(j) *
                               static_cast<double>(t) / static_cast<double>(tau_p);
            base(t, j) = std::polar(scale, ang);
        }

    // Random permutation of the combined terminal list, then round-robin.
    const int k_total = num_users + num_devices;
    std::vector<int> order(static_cast<std::size_t>(k_total));
    std::iota(order.begin(), order.end(), 0);
    RngStream rng(derive_seed(seed, rngtag::pilot_permutation));
    for (int i = k_total - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.integer() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[i], order[j]);
    }

    book.user_pilot.assign(num_users, -1);
    book.device_pilot.assign(num_devices, -1);
    for (int idx = 0; idx < k_total; ++idx) {
        const int terminal = order[idx];
        const int pilot = idx % tau_p;
        if (terminal < num_users)
            book.user_pilot[terminal] = pilot;
        else
            book.device_pilot[terminal - num_users] = pilot;
    }

    book.phi.resize(tau_p, num_users);
    for (int u = 0; u < num_users; ++u) book.phi.col(u) = base.col(book.user_pilot[u]);
    book.pi.resize(tau_p, num_devices);
    for (int d = 0; d < num_devices; ++d) book.pi.col(d) = base.col(book.device_pilot[d]);

    // Exact Gram tables from the assignment indices: matching base vectors
    // have inner product exactly 1, distinct ones exactly 0.
    book.gram_uu.setZero(num_users, num_users);
    for (int k = 0; k < num_users; ++k)
        for (int u = 0; u < num_users; ++u)
            book.gram_uu(k, u) = (book.user_pilot[k] == book.user_pilot[u]) ? 1.0 : 0.0;

    book.gram_dd.setZero(num_devices, num_devices);
    for (int k = 0; k < num_devices; ++k)
        for (int d = 0; d < num_devices; ++d)
            book.gram_dd(k, d) = (book.device_pilot[k] == book.device_pilot[d]) ? 1.0 : 0.0;

    book.gram_ud.setZero(num_users, num_devices);
    for (int u = 0; u < num_users; ++u)
        for (int d = 0; d < num_devices; ++d)
            book.gram_ud(u, d) = (book.user_pilot[u] == book.device_pilot[d]) ? 1.0 : 0.0;

    return book;
}

}  // namespace cfcoex

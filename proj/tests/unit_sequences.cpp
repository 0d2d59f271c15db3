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

#include <set>
#include <vector>

#include "cfcoex/sequences.hpp"

using namespace cfcoex;

namespace {

// brute-force periodic correlation of +/-1 chip rows
long periodic_correlation(const std::vector<std::int8_t>& a,
                          const std::vector<std::int8_t>& b, int lag) {
    const int n = static_cast<int>(a.size());
    long s = 0;
    for (int i = 0; i < n; ++i)
        s += static_cast<long>(a[i]) * static_cast<long>(b[(i + lag) % n]);
    return s;
}

}  // namespace

TEST_CASE("m-sequence n=3 has the two-valued autocorrelation") {
    const auto seq = gen_mseq(3);
    REQUIRE(seq.size() == 7);
    CHECK(periodic_correlation(seq, seq, 0) == 7);
    for (int lag = 1; lag < 7; ++lag) CHECK(periodic_correlation(seq, seq, lag) == -1);
}

TEST_CASE("m-sequence balance and degenerate lengths") {
    for (int n = 1; n <= 14; ++n) {
        const auto seq = gen_mseq(n);
        REQUIRE(static_cast<int>(seq.size()) == (1 << n) - 1);
        long minus = 0, plus = 0;
        for (auto c : seq) (c == -1 ? minus : plus) += 1;
        CHECK(minus - plus == 1);  // -1 chips outnumber +1 by exactly one
    }
    CHECK(gen_mseq(1).size() == 1);
    CHECK(gen_mseq(8).size() == 255);
}

TEST_CASE("the whole tap table is maximal") {
    // gen_mseq throws internally if the polynomial is not primitive
    for (int n = 15; n <= 20; ++n) CHECK_NOTHROW(gen_mseq(n));
}

TEST_CASE("m-sequence degree is range checked") {
    CHECK_THROWS_AS(gen_mseq(0), std::domain_error);
    CHECK_THROWS_AS(gen_mseq(21), std::domain_error);
    CHECK_THROWS_AS(gen_mseq(-3), std::domain_error);
}

TEST_CASE("spreading book: cyclic shifts correlate to exactly -1") {
    const auto book = build_spreading_book(3, 7);
    REQUIRE(book.length == 7);
    REQUIRE(book.chips.size() == 7);
    for (int d = 0; d < 7; ++d)
        for (int k = 0; k < 7; ++k) {
            const long c = book.correlation(d, k);
            if (d == k)
                CHECK(c == 7);
            else
                CHECK(c == -1);  // |c|/N = 1/7 after normalisation
        }
}

TEST_CASE("spreading book capacity and degenerate cases") {
    CHECK_THROWS_AS(build_spreading_book(3, 8), std::domain_error);

    const auto one = build_spreading_book(3, 1);
    CHECK(one.chips[0] == one.base);

    // N = 1 is the no-spreading configuration: everyone shares one chip
    const auto flat = build_spreading_book(1, 4);
    CHECK(flat.length == 1);
    for (int d = 0; d < 4; ++d) {
        CHECK(flat.shift[d] == 0);
        CHECK(flat.chips[d] == flat.base);
    }

    const auto big = build_spreading_book(8, 50);
    CHECK(big.length == 255);
    std::set<std::vector<std::int8_t>> rows(big.chips.begin(), big.chips.end());
    CHECK(rows.size() == 50);  // all shifts distinct
    for (int d = 0; d < 50; ++d) CHECK(big.shift[d] == d);
}

TEST_CASE("spreading book text export") {
    const auto book = build_spreading_book(2, 2);
    const std::string text = book.to_text();
    CHECK(text.find('\n') != std::string::npos);
    for (char c : text) CHECK((c == '1' || c == '-' || c == ' ' || c == '\n'));
}

TEST_CASE("pilot book: full orthogonality when tau_p covers everyone") {
    const auto book = build_pilot_book(8, 3, 4, 11);
    for (int k = 0; k < 3; ++k)
        for (int u = 0; u < 3; ++u)
            CHECK(book.gram_uu(k, u) == (k == u ? 1.0 : 0.0));
    for (int k = 0; k < 4; ++k)
        for (int d = 0; d < 4; ++d)
            CHECK(book.gram_dd(k, d) == (k == d ? 1.0 : 0.0));
    for (int u = 0; u < 3; ++u)
        for (int d = 0; d < 4; ++d) CHECK(book.gram_ud(u, d) == 0.0);
}

TEST_CASE("pilot book: the reference split reuses every pilot exactly twice") {
    const auto book = build_pilot_book(30, 10, 50, 5);
    std::vector<int> count(30, 0);
    for (int p : book.user_pilot) ++count[static_cast<std::size_t>(p)];
    for (int p : book.device_pilot) ++count[static_cast<std::size_t>(p)];
    for (int c : count) CHECK(c == 2);
}

TEST_CASE("pilot book: columns are unit norm and match the Gram tables") {
    const auto book = build_pilot_book(5, 4, 6, 77);
    for (int u = 0; u < 4; ++u)
        CHECK(std::abs(book.phi.col(u).norm() - 1.0) < 1e-12);
    for (int d = 0; d < 6; ++d)
        CHECK(std::abs(book.pi.col(d).norm() - 1.0) < 1e-12);

    // numeric inner products agree with the exact index-based tables
    for (int k = 0; k < 4; ++k)
        for (int u = 0; u < 4; ++u) {
            const double mag = std::abs(book.phi.col(k).dot(book.phi.col(u)));
            CHECK(std::abs(mag - book.gram_uu(k, u)) < 1e-12);
        }
    for (int u = 0; u < 4; ++u)
        for (int d = 0; d < 6; ++d) {
            const double mag = std::abs(book.phi.col(u).dot(book.pi.col(d)));
            CHECK(std::abs(mag - book.gram_ud(u, d)) < 1e-12);
        }
}

TEST_CASE("pilot book: gram entries are exactly zero or one") {
    const auto book = build_pilot_book(7, 5, 9, 3);
    for (int i = 0; i < book.gram_dd.rows(); ++i)
        for (int j = 0; j < book.gram_dd.cols(); ++j) {
            const double g = book.gram_dd(i, j);
            CHECK((g == 0.0 || g == 1.0));
        }
}

TEST_CASE("pilot book is seed deterministic") {
    const auto a = build_pilot_book(6, 4, 5, 42);
    const auto b = build_pilot_book(6, 4, 5, 42);
    CHECK(a.user_pilot == b.user_pilot);
    CHECK(a.device_pilot == b.device_pilot);
    const auto c = build_pilot_book(6, 4, 5, 43);
    CHECK((a.user_pilot != c.user_pilot || a.device_pilot != c.device_pilot));
}

TEST_CASE("pilot book rejects nonpositive tau_p") {
    CHECK_THROWS_AS(build_pilot_book(0, 1, 1, 1), std::domain_error);
}

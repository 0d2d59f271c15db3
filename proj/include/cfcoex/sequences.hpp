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

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace cfcoex {

// Maximal-length PN sequence of period 2^n - 1 from a Fibonacci LFSR with a
// primitive feedback polynomial (fixed table, all-ones seed). GF(2) symbols
// map 0 -> +1, 1 -> -1, so every chip has unit magnitude.
//
// Identities guaranteed by construction (see tests):
//   * balance: the -1 chips outnumber the +1 chips by exactly one;
//   * periodic autocorrelation: N at lag 0, exactly -1 at any other lag;
//   * distinct cyclic shifts correlate to exactly -1 (magnitude 1/N after
//     normalisation).
// Valid for 1 <= n <= 20; throws std::domain_error otherwise.
std::vector<std::int8_t> gen_mseq(int n);

// PN chip assignments for the device population. Device d transmits cyclic
// shift `shift[d]` of the shared base m-sequence. For N == 1 (no spreading)
// every device carries the trivial one-chip sequence.
struct SpreadingBook {
    int length = 0;                             // N
    std::vector<std::int8_t> base;              // the underlying m-sequence
    std::vector<std::vector<std::int8_t>> chips;  // one row per device
    std::vector<int> shift;                     // device -> cyclic shift

    double chip(int device, int prb) const { return chips[device][prb]; }

    // un-normalised periodic correlation sum_n c_d[n] * c_k[n]
    long correlation(int d, int k) const;

    std::string to_text() const;  // plain chip matrix, one device per row
};

// Devices receive shifts 0..Kd-1. Throws std::domain_error when Kd exceeds
// the number of distinct shifts (only possible for N > 1; N == 1 means no
// spreading and all devices share the trivial sequence).
SpreadingBook build_spreading_book(int n, int num_devices);

// Pilot assignments for users and devices drawn from one shared pool of
// tau_p orthonormal DFT base vectors. Terminals are dealt base vectors
// round-robin along a seeded random permutation, so the reuse factor is
// ceil((Ku+Kd)/tau_p) and inner products are exactly 0 or 1.
struct PilotBook {
    int tau_p = 0;
    Eigen::MatrixXcd phi;  // tau_p x Ku, unit-norm columns
    Eigen::MatrixXcd pi;   // tau_p x Kd

    std::vector<int> user_pilot;    // user -> base vector index
    std::vector<int> device_pilot;  // device -> base vector index

    // |inner product| tables; entries are exactly 0 or 1 by construction
    Eigen::MatrixXd gram_uu;  // Ku x Ku, |phi_k^H phi_u|
    Eigen::MatrixXd gram_dd;  // Kd x Kd, |pi_k^H pi_d|
    Eigen::MatrixXd gram_ud;  // Ku x Kd, |phi_u^H pi_d|

    std::string to_text() const;  // pilot index per terminal
};

PilotBook build_pilot_book(int tau_p, int num_users, int num_devices,
                           std::uint64_t seed);

}  // namespace cfcoex

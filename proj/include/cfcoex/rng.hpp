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

#include <complex>
#include <cmath>
#include <cstdint>
#include <random>

namespace cfcoex {

// splitmix64 step; used to derive independent stream seeds from a master
// seed plus structural indices (trial number, entity index, ...). Every
// random quantity in the library is a pure function of (master seed,
// derivation path), so disjoint trials may be evaluated in any order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(base ^ 0x5bf03635d3c8a7f2ULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    s = splitmix64(s ^ c);
    return s;
}

// Stream-id tags so unrelated draws never alias.
namespace rngtag {
inline constexpr std::uint64_t ap_position = 0x01;
inline constexpr std::uint64_t user_position = 0x02;
inline constexpr std::uint64_t device_position = 0x03;
inline constexpr std::uint64_t shadow_user = 0x04;
inline constexpr std::uint64_t shadow_device = 0x05;
inline constexpr std::uint64_t pilot_permutation = 0x06;
inline constexpr std::uint64_t channel_draw = 0x07;
inline constexpr std::uint64_t pilot_noise = 0x08;
inline constexpr std::uint64_t data_noise = 0x09;
inline constexpr std::uint64_t mc_trial = 0x0a;
inline constexpr std::uint64_t scenario = 0x0b;
inline constexpr std::uint64_t pilot_book = 0x0c;
}  // namespace rngtag

// mt19937_64 with hand-rolled uniform/Gaussian conversion. The standard
// fully specifies the engine but not the distributions, so conversions are
// done here to keep identical seeds bit-identical across toolchains.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    // uniform on [0, 1) with 53-bit resolution
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t integer() { return engine_(); }

    // standard normal via Box-Muller; one value per call, spare cached
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // CN(0, 1): real and imaginary parts N(0, 1/2)
    std::complex<double> cgaussian() {
        const double s = 0.70710678118654752440;
        const double re = gaussian();
        const double im = gaussian();
        return {s * re, s * im};
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cfcoex

// SPDX-License-Identifier: Apache-2.0
//
// mmest: two-stage channel parameter estimation for mmWave hybrid beamforming
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "mmest/common.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace mmest;
using Catch::Approx;

TEST_CASE("wrap_2pi lands in [0, 2pi)", "[common]")
{
    CHECK(wrap_2pi(0.0) == 0.0);
    CHECK(wrap_2pi(kTwoPi) == Approx(0.0).margin(1e-15));
    CHECK(wrap_2pi(-0.5) == Approx(kTwoPi - 0.5));
    CHECK(wrap_2pi(7.0 * kTwoPi + 1.0) == Approx(1.0));
    // a tiny negative must not come back as exactly 2 pi
    const double w = wrap_2pi(-1e-18);
    CHECK(w >= 0.0);
    CHECK(w < kTwoPi);
    for (double x = -50.0; x < 50.0; x += 0.37)
    {
        const double r = wrap_2pi(x);
        REQUIRE(r >= 0.0);
        REQUIRE(r < kTwoPi);
        REQUIRE(std::remainder(r - x, kTwoPi) == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("wrap_pi lands in (-pi, pi]", "[common]")
{
    CHECK(wrap_pi(kPi) == Approx(kPi));
    CHECK(wrap_pi(-kPi) == Approx(kPi));
    CHECK(wrap_pi(kPi + 0.1) == Approx(-kPi + 0.1));
    CHECK(wrap_pi(-0.2) == Approx(-0.2));
    for (double x = -40.0; x < 40.0; x += 0.29)
    {
        const double r = wrap_pi(x);
        REQUIRE(r > -kPi);
        REQUIRE(r <= kPi);
    }
}

TEST_CASE("power-of-two helpers", "[common]")
{
    CHECK_FALSE(is_power_of_two(0));
    CHECK_FALSE(is_power_of_two(-4));
    CHECK_FALSE(is_power_of_two(12));
    CHECK(is_power_of_two(1));
    CHECK(is_power_of_two(1024));
    CHECK(ilog2(1) == 0);
    CHECK(ilog2(2) == 1);
    CHECK(ilog2(16) == 4);
    CHECK(ilog2(1LL << 40) == 40);
}

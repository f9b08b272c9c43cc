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

#include <cmath>

namespace mmest
{
    double wrap_2pi(double x)
    {
        double r = std::fmod(x, kTwoPi);
        if (r < 0.0)
            r += kTwoPi;
        // fmod of a tiny negative number can round up to exactly 2*pi
        if (r >= kTwoPi)
            r = 0.0;
        return r;
    }

    double wrap_pi(double x)
    {
        double r = wrap_2pi(x);
        if (r > kPi)
            r -= kTwoPi;
        return r;
    }

    bool is_power_of_two(long long n)
    {
        return n > 0 && (n & (n - 1)) == 0;
    }

    int ilog2(long long n)
    {
        int b = 0;
        while ((1LL << (b + 1)) <= n)
            ++b;
        return b;
    }
}

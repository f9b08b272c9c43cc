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

#pragma once

#include "mmest/common.hpp"

// CAZAC pilots and raised-cosine fractional delays.
//
// The pilot of beam k is the base sequence cyclically delayed by k symbols. A delay tau (in
// symbols, possibly fractional) is applied by raised-cosine interpolation of the periodic
// sequence, sampled at the symbol rate:
//
//   g_tau(s) = sum_d h(d - tau) c((s - d) mod L),   |d - tau| <= pulse_halfwidth
//   C(tau)[k, n] = g_tau((n - k) mod L)
//
// so C(i) is an exact cyclic shift for integer i (h vanishes at nonzero integers). Terms that
// sit exactly on the truncation edge carry weight 1/2; their pulse value is zero, and the
// half weight makes the delay derivative at integer tau the mean of its one-sided limits.

namespace mmest::waveform
{
    struct CazacConfig
    {
        int l = 16;               // sequence length, perfect square
        double ts = 5e-9;         // symbol period [s]
        double rolloff = 0.25;    // raised-cosine roll-off
        int pulse_halfwidth = 8;  // pulse support, symbols each side

        void validate() const;
        int root() const; // sqrt(l)
    };

    /// Pilot block for one delay.
    struct PilotMatrix
    {
        CMatrix c;          // M x L, row k is the pilot of beam k
        double delay = 0.0; // symbols
    };

    /// c(n) = exp(j 2 pi / sqrt(L) (n mod sqrt(L) + 1)(floor(n / sqrt(L)) + 1) + j pi / 4).
    CVector cazac_base(const CazacConfig &cfg);

    /// Raised-cosine pulse h(t), t in seconds.
    double rc_pulse(const CazacConfig &cfg, double t);

    /// dh/dt in 1/s.
    double rc_pulse_derivative(const CazacConfig &cfg, double t);

    /// h as a function of x = t / Ts.
    double rc_pulse_normalized(double rolloff, double x);

    /// dh/dx, x = t / Ts.
    double rc_pulse_normalized_derivative(double rolloff, double x);

    /// Generating row g_tau of the delayed pilot block (length L).
    CVector delayed_sequence(const CazacConfig &cfg, double tau);

    /// d g_tau / d tau.
    CVector delayed_sequence_derivative(const CazacConfig &cfg, double tau);

    /// Expands a generating row into the m x L block [k, n] -> g((n - k) mod L).
    CMatrix circulant_rows(const CVector &g, int m);

    PilotMatrix pilot_matrix(const CazacConfig &cfg, int m, double tau);

    CMatrix pilot_matrix_derivative(const CazacConfig &cfg, int m, double tau);

    /// M x M cyclic permutation P_i with ones at (j, (j + i) mod M).
    RMatrix cyclic_permutation(int m, int i);
}

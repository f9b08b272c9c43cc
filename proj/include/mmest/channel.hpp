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

#include "mmest/array.hpp"
#include "mmest/common.hpp"
#include "mmest/waveform.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

// Random multipath scenarios and the stacked observation
//   Y = sqrt(P_T) sum_r alpha_r A(mu_r) C(tau_r) + N,   N ~ CN(0, sigma^2 I).

namespace mmest::channel
{
    using Rng = std::mt19937_64;

    struct ScenarioConfig
    {
        double bandwidth_hz = 200e6;
        double carrier_hz = 28e9;
        int m = 16;
        int n_nlos = 2;
        std::pair<double, double> d_los_range_m{30.0, 60.0};
        std::pair<double, double> delta_nlos_range_m{4.5, 24.0};
        double ple_los = 2.1;
        double ple_nlos = 2.4;
        double d0_m = 1.0;
        std::pair<double, double> theta_range_deg{-60.0, 60.0};
        double noise_var = 1.0;
        double snr_db = 10.0;
        std::uint64_t seed = 1;

        double symbol_period() const { return 1.0 / bandwidth_hz; }
        /// P_T giving the configured SNR with alpha_1 = 1.
        double transmit_power() const;
        void validate() const;
    };

    struct PathParams
    {
        cdouble alpha{1.0, 0.0};
        double theta_deg = 0.0;
        double mu = 0.0;          // 2 pi (d / lambda) sin(theta)
        double tau_symbols = 0.0;
    };

    struct ChannelRealization
    {
        std::vector<PathParams> paths; // paths[0] is the LOS path
        double pt = 1.0;
        double noise_var = 1.0;
    };

    struct Probe
    {
        array::ArrayConfig array;
        waveform::CazacConfig cazac;

        void validate() const;
    };

    struct ReceiveMatrix
    {
        CMatrix y; // M x L
        ChannelRealization truth;
        Probe probe;
        int repetitions = 1;
        /// Noise variance per entry of y after averaging the repeated blocks.
        double effective_noise_var = 1.0;
    };

    /// Independent generator for (seed, stream, trial, sub); the mapping goes through
    /// std::seed_seq, so it is portable and order independent.
    Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial, std::uint64_t sub = 0);

    /// 10 n log10(D / D0) in dB.
    double path_loss_db(double distance_m, double exponent, double d0_m);

    /// Amplitude of an NLOS path relative to LOS, from the linear power ratio of the two
    /// path losses. Always < 1 when the NLOS path is longer.
    double nlos_gain(double d_los_m, double d_nlos_m, double ple_los, double ple_nlos, double d0_m);

    /// Excess path length to delay in symbols.
    double delay_symbols(double delta_m, double ts);

    ChannelRealization draw_realization(const ScenarioConfig &cfg, const array::ArrayConfig &arr, Rng &rng);

    /// S_r = sqrt(P_T) alpha_r A(mu_r) C(tau_r).
    CMatrix path_component(const PathParams &path, double pt, const Probe &probe);

    CMatrix noiseless_signal(const ChannelRealization &real, const Probe &probe);

    /// Noisy observation. With repetitions > 1 every beam block is sent that many times and
    /// the received copies are averaged.
    ReceiveMatrix synthesize(const ChannelRealization &real, const array::ArrayConfig &arr,
                             const waveform::CazacConfig &caz, Rng &rng, int repetitions = 1);

    /// Observation without noise. effective_noise_var keeps the realization's nominal value
    /// so downstream thresholds stay meaningful.
    ReceiveMatrix noiseless_receive(const ChannelRealization &real, const array::ArrayConfig &arr,
                                    const waveform::CazacConfig &caz);

    /// i.i.d. CN(0, var) matrix.
    CMatrix complex_gaussian(int rows, int cols, double var, Rng &rng);
}

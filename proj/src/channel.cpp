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

#include "mmest/channel.hpp"

#include <cmath>
#include <string>

namespace mmest::channel
{
    namespace
    {
        void check_range(const std::pair<double, double> &r, const char *name, bool positive)
        {
            if (!std::isfinite(r.first) || !std::isfinite(r.second) || r.first > r.second)
                throw ConfigError(std::string("ScenarioConfig: ") + name + " must be a finite [lo, hi] range");
            if (positive && r.first <= 0.0)
                throw ConfigError(std::string("ScenarioConfig: ") + name + " must be positive");
        }

        double uniform(Rng &rng, const std::pair<double, double> &r)
        {
            if (r.first == r.second)
                return r.first;
            return std::uniform_real_distribution<double>(r.first, r.second)(rng);
        }
    }

    double ScenarioConfig::transmit_power() const
    {
        return std::pow(10.0, snr_db / 10.0) * noise_var;
    }

    void ScenarioConfig::validate() const
    {
        if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
            throw ConfigError("ScenarioConfig: bandwidth_hz must be positive");
        if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz))
            throw ConfigError("ScenarioConfig: carrier_hz must be positive");
        if (m < 1)
            throw ConfigError("ScenarioConfig: m must be positive");
        if (n_nlos < 0)
            throw ConfigError("ScenarioConfig: n_nlos must be non-negative");
        check_range(d_los_range_m, "d_los_range_m", true);
        check_range(delta_nlos_range_m, "delta_nlos_range_m", false);
        if (delta_nlos_range_m.first < 0.0)
            throw ConfigError("ScenarioConfig: delta_nlos_range_m must be non-negative");
        check_range(theta_range_deg, "theta_range_deg", false);
        if (theta_range_deg.first < -90.0 || theta_range_deg.second > 90.0)
            throw ConfigError("ScenarioConfig: theta_range_deg must lie within [-90, 90]");
        if (!(d0_m > 0.0))
            throw ConfigError("ScenarioConfig: d0_m must be positive");
        if (!(noise_var >= 0.0) || !std::isfinite(noise_var))
            throw ConfigError("ScenarioConfig: noise_var must be non-negative");
        if (!std::isfinite(snr_db))
            throw ConfigError("ScenarioConfig: snr_db must be finite");
        if (!std::isfinite(ple_los) || !std::isfinite(ple_nlos))
            throw ConfigError("ScenarioConfig: path loss exponents must be finite");
    }

    void Probe::validate() const
    {
        array.validate();
        cazac.validate();
    }

    Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial, std::uint64_t sub)
    {
        auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
        auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
        std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(trial), hi(trial), lo(sub), hi(sub)};
        return Rng(seq);
    }

    double path_loss_db(double distance_m, double exponent, double d0_m)
    {
        return 10.0 * exponent * std::log10(distance_m / d0_m);
    }

    double nlos_gain(double d_los_m, double d_nlos_m, double ple_los, double ple_nlos, double d0_m)
    {
        const double pl_los = path_loss_db(d_los_m, ple_los, d0_m);
        const double pl_nlos = path_loss_db(d_nlos_m, ple_nlos, d0_m);
        // sqrt of the linear power ratio 10^(-PL_nlos/10) / 10^(-PL_los/10)
        return std::pow(10.0, (pl_los - pl_nlos) / 20.0);
    }

    double delay_symbols(double delta_m, double ts)
    {
        return delta_m / (kSpeedOfLight * ts);
    }

    ChannelRealization draw_realization(const ScenarioConfig &cfg, const array::ArrayConfig &arr, Rng &rng)
    {
        cfg.validate();
        if (arr.m != cfg.m)
            throw ConfigError("draw_realization: scenario and array disagree on M");

        ChannelRealization real;
        real.noise_var = cfg.noise_var;
        real.pt = cfg.transmit_power();

        const double d_los = uniform(rng, cfg.d_los_range_m);
        PathParams los;
        los.alpha = {1.0, 0.0};
        los.theta_deg = uniform(rng, cfg.theta_range_deg);
        los.mu = array::spatial_frequency(arr, los.theta_deg);
        los.tau_symbols = 0.0;
        real.paths.push_back(los);

        for (int r = 0; r < cfg.n_nlos; ++r)
        {
            const double delta = uniform(rng, cfg.delta_nlos_range_m);
            PathParams p;
            p.theta_deg = uniform(rng, cfg.theta_range_deg);
            const double phase = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
            const double gamma = nlos_gain(d_los, d_los + delta, cfg.ple_los, cfg.ple_nlos, cfg.d0_m);
            p.alpha = std::polar(gamma, phase);
            p.mu = array::spatial_frequency(arr, p.theta_deg);
            p.tau_symbols = delay_symbols(delta, cfg.symbol_period());
            real.paths.push_back(p);
        }
        return real;
    }

    CMatrix path_component(const PathParams &path, double pt, const Probe &probe)
    {
        const CVector gains = array::beam_gains(probe.array, path.mu);
        const CMatrix c = waveform::pilot_matrix(probe.cazac, probe.array.m, path.tau_symbols).c;
        return (std::sqrt(pt) * path.alpha) * (gains.asDiagonal() * c);
    }

    CMatrix noiseless_signal(const ChannelRealization &real, const Probe &probe)
    {
        CMatrix s = CMatrix::Zero(probe.array.m, probe.cazac.l);
        for (const auto &p : real.paths)
            s += path_component(p, real.pt, probe);
        return s;
    }

    CMatrix complex_gaussian(int rows, int cols, double var, Rng &rng)
    {
        std::normal_distribution<double> nd(0.0, std::sqrt(var / 2.0));
        CMatrix n(rows, cols);
        // Fill column-major in a fixed order so streams are reproducible.
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i)
            {
                const double re = nd(rng);
                const double im = nd(rng);
                n(i, j) = {re, im};
            }
        return n;
    }

    ReceiveMatrix synthesize(const ChannelRealization &real, const array::ArrayConfig &arr,
                             const waveform::CazacConfig &caz, Rng &rng, int repetitions)
    {
        if (repetitions < 1)
            throw ConfigError("synthesize: repetitions must be at least 1");
        if (!(real.noise_var >= 0.0))
            throw ConfigError("synthesize: noise variance must be non-negative");
        ReceiveMatrix out;
        out.probe = Probe{arr, caz};
        out.probe.validate();
        out.truth = real;
        out.repetitions = repetitions;
        out.y = noiseless_signal(real, out.probe);
        if (real.noise_var > 0.0)
        {
            CMatrix acc = CMatrix::Zero(arr.m, caz.l);
            for (int rep = 0; rep < repetitions; ++rep)
                acc += complex_gaussian(arr.m, caz.l, real.noise_var, rng);
            out.y += acc / static_cast<double>(repetitions);
        }
        out.effective_noise_var = real.noise_var / repetitions;
        return out;
    }

    ReceiveMatrix noiseless_receive(const ChannelRealization &real, const array::ArrayConfig &arr,
                                    const waveform::CazacConfig &caz)
    {
        ReceiveMatrix out;
        out.probe = Probe{arr, caz};
        out.probe.validate();
        out.truth = real;
        out.y = noiseless_signal(real, out.probe);
        out.effective_noise_var = real.noise_var;
        return out;
    }
}

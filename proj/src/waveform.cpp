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

#include "mmest/waveform.hpp"

#include <cmath>
#include <string>

namespace mmest::waveform
{
    namespace
    {
        // sin(pi x) / (pi x), exactly zero at nonzero integers.
        double sinc(double x)
        {
            if (x == 0.0)
                return 1.0;
            if (x == std::nearbyint(x))
                return 0.0;
            return std::sin(kPi * x) / (kPi * x);
        }

        double sinc_derivative(double x)
        {
            if (std::abs(x) < 1e-3)
            {
                const double x3 = x * x * x;
                return -kPi * kPi * x / 3.0 + kPi * kPi * kPi * kPi * x3 / 30.0;
            }
            return (std::cos(kPi * x) - sinc(x)) / x;
        }

        // Roll-off factor q(x) = cos(rho pi x) / (1 - (2 rho x)^2), even in x. Around the
        // removable singularity |x| = 1/(2 rho) it is rewritten with u = |x| - 1/(2 rho) as
        //   q = sin(rho pi u) / (4 rho u (1 + rho u)).
        double rolloff_factor(double rho, double x)
        {
            if (rho == 0.0)
                return 1.0;
            const double ax = std::abs(x);
            const double u = ax - 0.5 / rho;
            if (std::abs(u) < 1e-6)
                return 0.25 * kPi * (1.0 - rho * u);
            if (std::abs(u) < 0.25)
                return std::sin(rho * kPi * u) / (4.0 * rho * u * (1.0 + rho * u));
            const double den = 1.0 - 4.0 * rho * rho * ax * ax;
            return std::cos(rho * kPi * ax) / den;
        }

        double rolloff_factor_derivative(double rho, double x)
        {
            if (rho == 0.0)
                return 0.0;
            const double sign = x < 0.0 ? -1.0 : 1.0;
            const double ax = std::abs(x);
            const double u = ax - 0.5 / rho;
            double d;
            if (std::abs(u) < 1e-3)
            {
                const double c = kPi * kPi / 6.0;
                d = 0.25 * kPi * (-rho + 2.0 * rho * rho * u * (1.0 - c) + 3.0 * rho * rho * rho * u * u * (c - 1.0));
            }
            else if (std::abs(u) < 0.25)
            {
                const double f = std::sin(rho * kPi * u);
                const double fp = rho * kPi * std::cos(rho * kPi * u);
                const double g = 4.0 * rho * u * (1.0 + rho * u);
                const double gp = 4.0 * rho * (1.0 + 2.0 * rho * u);
                d = (fp * g - f * gp) / (g * g);
            }
            else
            {
                const double den = 1.0 - 4.0 * rho * rho * ax * ax;
                d = (-rho * kPi * std::sin(rho * kPi * ax) * den + 8.0 * rho * rho * ax * std::cos(rho * kPi * ax)) /
                    (den * den);
            }
            return sign * d;
        }

        // Visits every tap d with |d - tau| <= halfwidth; edge taps get weight 1/2.
        template <typename Fn>
        void for_each_tap(int halfwidth, double tau, Fn &&fn)
        {
            const double hw = static_cast<double>(halfwidth);
            const long long first = static_cast<long long>(std::ceil(tau - hw));
            const long long last = static_cast<long long>(std::floor(tau + hw));
            for (long long d = first; d <= last; ++d)
            {
                const double x = static_cast<double>(d) - tau;
                const double weight = (halfwidth > 0 && std::abs(x) == hw) ? 0.5 : 1.0;
                fn(d, x, weight);
            }
        }

        int wrap_index(long long v, int n)
        {
            long long r = v % n;
            if (r < 0)
                r += n;
            return static_cast<int>(r);
        }
    }

    void CazacConfig::validate() const
    {
        if (l < 1)
            throw ConfigError("CazacConfig: l must be positive");
        const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(l))));
        if (r * r != l)
            throw ConfigError("CazacConfig: l = " + std::to_string(l) + " is not a perfect square");
        if (!(ts > 0.0) || !std::isfinite(ts))
            throw ConfigError("CazacConfig: ts must be positive");
        if (!(rolloff >= 0.0 && rolloff <= 1.0))
            throw ConfigError("CazacConfig: rolloff must lie in [0, 1]");
        if (pulse_halfwidth < 0)
            throw ConfigError("CazacConfig: pulse_halfwidth must be non-negative");
    }

    int CazacConfig::root() const
    {
        return static_cast<int>(std::lround(std::sqrt(static_cast<double>(l))));
    }

    CVector cazac_base(const CazacConfig &cfg)
    {
        cfg.validate();
        const int r = cfg.root();
        CVector c(cfg.l);
        for (int n = 0; n < cfg.l; ++n)
        {
            // The phase 2 pi (a b) / r only depends on (a b) mod r.
            const int ab = ((n % r + 1) * (n / r + 1)) % r;
            c(n) = std::polar(1.0, kTwoPi * ab / r + 0.25 * kPi);
        }
        return c;
    }

    double rc_pulse_normalized(double rolloff, double x)
    {
        return sinc(x) * rolloff_factor(rolloff, x);
    }

    double rc_pulse_normalized_derivative(double rolloff, double x)
    {
        return sinc_derivative(x) * rolloff_factor(rolloff, x) + sinc(x) * rolloff_factor_derivative(rolloff, x);
    }

    double rc_pulse(const CazacConfig &cfg, double t)
    {
        return rc_pulse_normalized(cfg.rolloff, t / cfg.ts);
    }

    double rc_pulse_derivative(const CazacConfig &cfg, double t)
    {
        return rc_pulse_normalized_derivative(cfg.rolloff, t / cfg.ts) / cfg.ts;
    }

    CVector delayed_sequence(const CazacConfig &cfg, double tau)
    {
        const CVector c = cazac_base(cfg);
        CVector g = CVector::Zero(cfg.l);
        for_each_tap(cfg.pulse_halfwidth, tau, [&](long long d, double x, double weight)
                     {
                         const double h = weight * rc_pulse_normalized(cfg.rolloff, x);
                         if (h == 0.0)
                             return;
                         for (int s = 0; s < cfg.l; ++s)
                             g(s) += h * c(wrap_index(s - d, cfg.l)); });
        return g;
    }

    CVector delayed_sequence_derivative(const CazacConfig &cfg, double tau)
    {
        const CVector c = cazac_base(cfg);
        CVector g = CVector::Zero(cfg.l);
        for_each_tap(cfg.pulse_halfwidth, tau, [&](long long d, double x, double weight)
                     {
                         // d/dtau h(d - tau) = -h'(d - tau)
                         const double hp = -weight * rc_pulse_normalized_derivative(cfg.rolloff, x);
                         if (hp == 0.0)
                             return;
                         for (int s = 0; s < cfg.l; ++s)
                             g(s) += hp * c(wrap_index(s - d, cfg.l)); });
        return g;
    }

    CMatrix circulant_rows(const CVector &g, int m)
    {
        const int l = static_cast<int>(g.size());
        CMatrix out(m, l);
        for (int k = 0; k < m; ++k)
            for (int n = 0; n < l; ++n)
                out(k, n) = g(wrap_index(n - k, l));
        return out;
    }

    PilotMatrix pilot_matrix(const CazacConfig &cfg, int m, double tau)
    {
        if (m < 1)
            throw ConfigError("pilot_matrix: m must be positive");
        return PilotMatrix{circulant_rows(delayed_sequence(cfg, tau), m), tau};
    }

    CMatrix pilot_matrix_derivative(const CazacConfig &cfg, int m, double tau)
    {
        if (m < 1)
            throw ConfigError("pilot_matrix_derivative: m must be positive");
        return circulant_rows(delayed_sequence_derivative(cfg, tau), m);
    }

    RMatrix cyclic_permutation(int m, int i)
    {
        RMatrix p = RMatrix::Zero(m, m);
        for (int j = 0; j < m; ++j)
            p(j, wrap_index(j + i, m)) = 1.0;
        return p;
    }
}

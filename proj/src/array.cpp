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

#include "mmest/array.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mmest::array
{
    namespace
    {
        std::vector<double> make_beam_phases(int m)
        {
            std::vector<double> phases(static_cast<std::size_t>(std::max(m, 0)));
            for (int k = 0; k < m; ++k)
                phases[static_cast<std::size_t>(k)] = kTwoPi * k / m;
            return phases;
        }

        // Reverses the lowest `bits` bits of v.
        int bit_reverse(int v, int bits)
        {
            int r = 0;
            for (int b = 0; b < bits; ++b)
                r |= ((v >> b) & 1) << (bits - 1 - b);
            return r;
        }
    }

    ArrayConfig::ArrayConfig() : ArrayConfig(16, 0.5) {}

    ArrayConfig::ArrayConfig(int m_, double spacing) : m(m_), spacing_over_lambda(spacing), beam_phases(make_beam_phases(m_))
    {
        validate();
    }

    void ArrayConfig::validate() const
    {
        if (m < 1)
            throw ConfigError("ArrayConfig: m must be a positive integer, got " + std::to_string(m));
        if (!(spacing_over_lambda > 0.0) || !std::isfinite(spacing_over_lambda))
            throw ConfigError("ArrayConfig: spacing_over_lambda must be positive");
        if (beam_phases.size() != static_cast<std::size_t>(m))
            throw ConfigError("ArrayConfig: beam_phases must have m entries");
        for (int k = 0; k < m; ++k)
            if (beam_phases[static_cast<std::size_t>(k)] != kTwoPi * k / m)
                throw ConfigError("ArrayConfig: beam_phases must equal 2*pi*k/m");
    }

    CVector steering_vector(const ArrayConfig &cfg, double mu)
    {
        CVector a(cfg.m);
        for (int i = 0; i < cfg.m; ++i)
            a(i) = std::polar(1.0, -static_cast<double>(i) * mu);
        return a;
    }

    CVector steering_vector_derivative(const ArrayConfig &cfg, double mu)
    {
        CVector d(cfg.m);
        for (int i = 0; i < cfg.m; ++i)
            d(i) = -kJ * static_cast<double>(i) * std::polar(1.0, -static_cast<double>(i) * mu);
        return d;
    }

    CVector dft_beam(const ArrayConfig &cfg, int k)
    {
        if (k < 0 || k >= cfg.m)
            throw std::out_of_range("dft_beam: beam index " + std::to_string(k) + " outside [0, " +
                                    std::to_string(cfg.m) + ")");
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.m));
        CVector w(cfg.m);
        // Reduce i*k mod M so every entry is an exact root of unity evaluation.
        for (int i = 0; i < cfg.m; ++i)
        {
            const int ik = static_cast<int>((static_cast<long long>(i) * k) % cfg.m);
            w(i) = scale * std::polar(1.0, -kTwoPi * ik / cfg.m);
        }
        return w;
    }

    CMatrix dft_matrix(const ArrayConfig &cfg)
    {
        CMatrix w(cfg.m, cfg.m);
        for (int k = 0; k < cfg.m; ++k)
            w.col(k) = dft_beam(cfg, k);
        return w;
    }

    CVector beam_gains(const ArrayConfig &cfg, double mu)
    {
        // a^H(mu) w(Phi_k) = M^{-1/2} sum_i exp(j i (mu - Phi_k))
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.m));
        CVector g(cfg.m);
        for (int k = 0; k < cfg.m; ++k)
        {
            const double delta = mu - cfg.beam_phases[static_cast<std::size_t>(k)];
            cdouble acc{0.0, 0.0};
            for (int i = 0; i < cfg.m; ++i)
                acc += std::polar(1.0, static_cast<double>(i) * delta);
            g(k) = scale * acc;
        }
        return g;
    }

    CVector beam_gains_derivative(const ArrayConfig &cfg, double mu)
    {
        // a'^H(mu) w(Phi_k) = M^{-1/2} sum_i (j i) exp(j i (mu - Phi_k))
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.m));
        CVector g(cfg.m);
        for (int k = 0; k < cfg.m; ++k)
        {
            const double delta = mu - cfg.beam_phases[static_cast<std::size_t>(k)];
            cdouble acc{0.0, 0.0};
            for (int i = 1; i < cfg.m; ++i)
                acc += kJ * static_cast<double>(i) * std::polar(1.0, static_cast<double>(i) * delta);
            g(k) = scale * acc;
        }
        return g;
    }

    double spatial_frequency(const ArrayConfig &cfg, double theta_deg)
    {
        return kTwoPi * cfg.spacing_over_lambda * std::sin(theta_deg * kPi / 180.0);
    }

    double aod_from_spatial_frequency(const ArrayConfig &cfg, double mu)
    {
        double s = wrap_pi(mu) / (kTwoPi * cfg.spacing_over_lambda);
        s = std::clamp(s, -1.0, 1.0);
        return std::asin(s) * 180.0 / kPi;
    }

    double aod_sensitivity_deg(const ArrayConfig &cfg, double theta_deg)
    {
        const double c = std::cos(theta_deg * kPi / 180.0);
        return (180.0 / kPi) / (kTwoPi * cfg.spacing_over_lambda * std::max(std::abs(c), 1e-12));
    }

    // ---- Butler matrix ------------------------------------------------------------------------

    double ScatteringMatrix2x2::unitarity_error() const
    {
        return (entries * entries.adjoint() - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
    }

    Eigen::Matrix4cd hybrid_coupler_4port()
    {
        const double s = 1.0 / std::sqrt(2.0);
        const cdouble z{0, 0}, mj{0, -1}, m1{-1, 0};
        Eigen::Matrix4cd h;
        h << z, mj, m1, z,
            mj, z, z, m1,
            m1, z, z, mj,
            z, m1, mj, z;
        return s * h;
    }

    ScatteringMatrix2x2 reduced_hybrid()
    {
        // Outputs b2, b3 (rows 1, 2) driven from inputs a1, a4 (columns 0, 3).
        const Eigen::Matrix4cd full = hybrid_coupler_4port();
        ScatteringMatrix2x2 s;
        s.entries << full(1, 0), full(1, 3),
            full(2, 0), full(2, 3);
        return s;
    }

    CMatrix butler_matrix(const ArrayConfig &cfg)
    {
        const int m = cfg.m;
        if (!is_power_of_two(m))
            throw ConfigError("butler_matrix: M = " + std::to_string(m) + " is not a power of 2");
        const int stages = ilog2(m);
        const Eigen::Matrix2cd hyb = reduced_hybrid().entries;

        // Fixed phase shifters around each hybrid turn it into a radix-2 butterfly up to a
        // sign that is common to all lines of a stage: -j on the upper input, +j on the lower
        // output. The per-stage sign only rotates every beam by the same constant.
        const cdouble pre_upper = -kJ;
        const cdouble post_lower = kJ;

        CMatrix b(m, m);
        std::vector<cdouble> line(static_cast<std::size_t>(m));
        for (int port = 0; port < m; ++port)
        {
            // Crossover section: input port p feeds line bitrev(p).
            std::fill(line.begin(), line.end(), cdouble{0, 0});
            line[static_cast<std::size_t>(bit_reverse(port, stages))] = 1.0;

            for (int s = 1; s <= stages; ++s)
            {
                const int size = 1 << s;
                const int half = size / 2;
                for (int start = 0; start < m; start += size)
                {
                    for (int j = 0; j < half; ++j)
                    {
                        auto &upper = line[static_cast<std::size_t>(start + j)];
                        auto &lower = line[static_cast<std::size_t>(start + j + half)];
                        // Twiddle phase shifter w^(j * M / size) on the lower branch.
                        const cdouble twiddle = std::polar(1.0, -kTwoPi * j / size);
                        const cdouble a1 = pre_upper * upper;
                        const cdouble a4 = twiddle * lower;
                        const cdouble b2 = hyb(0, 0) * a1 + hyb(0, 1) * a4;
                        const cdouble b3 = hyb(1, 0) * a1 + hyb(1, 1) * a4;
                        upper = b2;
                        lower = post_lower * b3;
                    }
                }
            }
            for (int i = 0; i < m; ++i)
                b(i, port) = line[static_cast<std::size_t>(i)];
        }
        return b;
    }

    std::vector<ColumnMatch> match_dft_columns(const ArrayConfig &cfg, const CMatrix &b)
    {
        if (b.rows() != cfg.m)
            throw ConfigError("match_dft_columns: row count does not match M");
        const CMatrix w = dft_matrix(cfg);
        std::vector<ColumnMatch> out;
        out.reserve(static_cast<std::size_t>(b.cols()));
        for (Eigen::Index c = 0; c < b.cols(); ++c)
        {
            ColumnMatch best;
            best.column = static_cast<int>(c);
            best.residual = std::numeric_limits<double>::infinity();
            for (int k = 0; k < cfg.m; ++k)
            {
                // Least-squares scalar, projected onto the unit circle.
                const cdouble proj = w.col(k).dot(b.col(c)); // w^H b
                const cdouble phase = std::abs(proj) > 0.0 ? proj / std::abs(proj) : cdouble{1, 0};
                const double res = (b.col(c) - phase * w.col(k)).norm();
                if (res < best.residual)
                {
                    best.beam = k;
                    best.phase = phase;
                    best.residual = res;
                }
            }
            out.push_back(best);
        }
        return out;
    }
}

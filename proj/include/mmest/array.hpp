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

#include <vector>

// Uniform linear sub-array of M elements probed with the M-point DFT codebook.
//
// Conventions:
//   a(mu)_i   = exp(-j i mu),                 i = 0..M-1
//   w(Phi_k)_i = exp(-j i Phi_k) / sqrt(M),   Phi_k = 2 pi k / M
//   A(mu)     = diag{ a^H(mu) w(Phi_k) }_k    (per-beam complex gain)

namespace mmest::array
{
    struct ArrayConfig
    {
        int m = 16;
        double spacing_over_lambda = 0.5;
        std::vector<double> beam_phases; // Phi_k = 2 pi k / M

        ArrayConfig();
        explicit ArrayConfig(int m, double spacing_over_lambda = 0.5);

        /// Throws ConfigError when m < 1, spacing <= 0 or the beam grid is stale.
        void validate() const;
    };

    CVector steering_vector(const ArrayConfig &cfg, double mu);

    /// d a(mu) / d mu, elements (-j i) exp(-j i mu).
    CVector steering_vector_derivative(const ArrayConfig &cfg, double mu);

    /// Column k of the unitary M-point DFT matrix. Throws std::out_of_range for k outside [0, M).
    CVector dft_beam(const ArrayConfig &cfg, int k);

    /// Unitary DFT matrix; column k equals dft_beam(cfg, k).
    CMatrix dft_matrix(const ArrayConfig &cfg);

    /// Diagonal of A(mu): entry k is a^H(mu) w(Phi_k).
    CVector beam_gains(const ArrayConfig &cfg, double mu);

    /// Diagonal of dA(mu)/dmu: entry k is a'^H(mu) w(Phi_k).
    CVector beam_gains_derivative(const ArrayConfig &cfg, double mu);

    /// mu = 2 pi (d / lambda) sin(theta).
    double spatial_frequency(const ArrayConfig &cfg, double theta_deg);

    /// Inverse of spatial_frequency on the visible region. mu is first wrapped to (-pi, pi],
    /// which for d = lambda/2 reproduces the two-branch arcsin rule on [0, 2 pi).
    double aod_from_spatial_frequency(const ArrayConfig &cfg, double mu);

    /// d theta / d mu in degrees per radian at the given AoD.
    double aod_sensitivity_deg(const ArrayConfig &cfg, double theta_deg);

    // ---- Butler matrix synthesis --------------------------------------------------------------

    /// Reduced 2x2 scattering matrix of a terminated 90 degree hybrid.
    struct ScatteringMatrix2x2
    {
        Eigen::Matrix2cd entries;

        /// max |S S^H - I| entry.
        double unitarity_error() const;
    };

    /// Full 4-port scattering matrix of an ideal 90 degree hybrid coupler.
    Eigen::Matrix4cd hybrid_coupler_4port();

    /// Reduction of the 4-port with a2 = a3 = 0 (ports 2, 3 matched): [b2; b3] = S [a1; a4].
    ScatteringMatrix2x2 reduced_hybrid();

    /// M x M Butler network built as log2(M) stages of 90 degree hybrids, fixed phase
    /// shifters and crossovers (radix-2 decimation-in-time wiring). Column p is the element
    /// excitation produced by driving input port p. Throws ConfigError when M is not a power of 2.
    CMatrix butler_matrix(const ArrayConfig &cfg);

    struct ColumnMatch
    {
        int column = -1;
        int beam = -1;        // matching DFT beam index k
        cdouble phase{1, 0};  // column = phase * dft_beam(k)
        double residual = 0;  // || column - phase * dft_beam(k) ||
    };

    /// Exhaustively matches every column of b against every DFT beam (best fit up to a
    /// unit-modulus scalar). One entry per column.
    std::vector<ColumnMatch> match_dft_columns(const ArrayConfig &cfg, const CMatrix &b);
}

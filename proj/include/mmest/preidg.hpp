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
#include "mmest/channel.hpp"
#include "mmest/common.hpp"

#include <vector>

// Coarse stage: correlate against the undelayed pilots, detect paths on the wrap-around
// diagonals of the power matrix, and interpolate the spatial frequency between two adjacent
// DFT beams with a beam-power-ratio lookup table.
//
// Indices are 0-based: diagonal d collects p[k][(k + d) mod M] and maps to integer delay d.

namespace mmest::preidg
{
    struct PowerMatrix
    {
        RMatrix p; // |Z|^2
        CMatrix z; // Y C^H(0)
    };

    struct Lut
    {
        int m = 0;
        int k_points = 0;
        std::vector<double> ratios; // K + 1 entries, ratios[0] = +inf, ratios[K] = 0
        double delta_mu = 0.0;      // 2 pi / (M K)

        /// Cell l and fraction b in [0, 1] with the offset from the beam equal to
        /// delta_mu (l + b). Requires delta >= 0 (may be +inf).
        void locate(double delta, int &l, double &b) const;

        /// Offset from the beam centre for a power ratio: delta_mu (l + b).
        double offset(double delta) const;
    };

    struct Detection
    {
        int delay = 0;           // diagonal index = integer delay
        int beam = 0;            // argmax row along the diagonal
        double peak_power = 0.0;
    };

    /// One real plus one beam index per path. The direction toward the stronger neighbour
    /// travels in the sign of the ratio (negative = lower beam); +inf means "on the beam".
    struct Feedback
    {
        double delta_ratio = 0.0;
        int beam_index = 0;
    };

    struct CoarsePath
    {
        int tau_int = 0;
        double mu_hat = 0.0;        // [0, 2 pi)
        double theta_hat_deg = 0.0;
        double peak_power = 0.0;
        int k_index = 0;
        Feedback feedback;
        bool on_grid = false;       // ambiguity guard fired
    };

    struct CoarseEstimate
    {
        int r_hat = 0;
        std::vector<CoarsePath> paths; // descending peak power
        int merged = 0;                // detections dropped by the model-order merge
    };

    struct PreidgConfig
    {
        int k_points = 101;
        double p_fa = 1e-3;
        double v = 3.0;
        /// Largest spatial-frequency gap for merging adjacent-delay detections; <= 0 means one
        /// LUT step.
        double merge_mu_tol = 0.0;

        void validate() const;
    };

    /// G = sigma^2 M ln(M / P_fa).
    double detection_threshold(double noise_var, int m, double p_fa);

    /// Z = Y C^H(0), P = |Z|^2.
    PowerMatrix correlate(const channel::ReceiveMatrix &y);

    /// Wrap-around diagonal d of a square matrix: entry k is p[k][(k + d) mod M].
    RVector diagonal(const RMatrix &p, int d);

    /// Diagonals whose maximum reaches g, in increasing delay order.
    std::vector<Detection> detect_paths(const PowerMatrix &pm, double g);

    Lut build_lut(const array::ArrayConfig &arr, int k_points);

    CoarseEstimate coarse_estimate(const PowerMatrix &pm, const std::vector<Detection> &detections, const Lut &lut,
                                   const array::ArrayConfig &arr, double noise_var, const PreidgConfig &cfg);

    /// Full coarse stage on one observation.
    CoarseEstimate run_preidg(const channel::ReceiveMatrix &y, const Lut &lut, const PreidgConfig &cfg);

    /// Spatial frequency reconstructed from a feedback record alone.
    double mu_from_feedback(const Feedback &fb, const Lut &lut, const array::ArrayConfig &arr);

    /// Exactly 64 + log2(M) bits.
    std::size_t feedback_bits(int m);
    std::vector<bool> pack_feedback(const Feedback &fb, int m);
    Feedback unpack_feedback(const std::vector<bool> &bits, int m);
}

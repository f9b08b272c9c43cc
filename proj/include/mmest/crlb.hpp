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

#include "mmest/channel.hpp"
#include "mmest/common.hpp"

#include <vector>

// Fisher information of the noiseless model S = sum_r (sqrt(P_T) alpha_r) A(mu_r) C(tau_r)
// under CN(0, sigma^2) noise:
//
//   F_ij = (2 / sigma^2) Re tr{ (dS/d eta_i)^H dS/d eta_j }
//
// Parameters are grouped by kind, R entries each:
//   [ sqrt(P_T) Re alpha | sqrt(P_T) Im alpha | mu | tau ].

namespace mmest::crlb
{
    enum class ParamKind
    {
        re_alpha = 0,
        im_alpha = 1,
        mu = 2,
        tau = 3
    };

    struct ParamIndex
    {
        ParamKind kind = ParamKind::re_alpha;
        int path = 0;
    };

    struct FisherMatrix
    {
        RMatrix f;
        int paths = 0;

        /// Position of (kind, path) in the parameter vector.
        int index(ParamKind kind, int path) const;
        ParamIndex parameter(int i) const;
    };

    struct CrlbReport
    {
        RVector bounds;    // sqrt([F^-1]_ii), empty when not invertible
        RVector variances; // [F^-1]_ii, empty when not invertible
        double condition_number = 0.0;
        bool invertible = false;
    };

    /// One M x L slice per parameter, in parameter order.
    std::vector<CMatrix> model_jacobian(const channel::ChannelRealization &real, const channel::Probe &probe);

    FisherMatrix fisher_from_jacobian(const std::vector<CMatrix> &jac, double noise_var);

    FisherMatrix fisher_matrix(const channel::ChannelRealization &real, const channel::Probe &probe);

    /// Invertible when cond(F) < max_condition. Throws std::invalid_argument on non-finite input.
    CrlbReport crlb_bounds(const FisherMatrix &f, double max_condition = 1e12);

    /// Variance bound on the AoD in deg^2 from the bound on mu.
    double theta_variance(double mu_variance, const array::ArrayConfig &arr, double theta_deg);

    /// Variance bound on the relative gain error |e / (sqrt(P_T) alpha)|^2.
    double relative_alpha_variance(double re_variance, double im_variance, cdouble scaled_alpha);

    struct AveragedBounds
    {
        RVector sqrt_mean_variance; // per parameter
        int used = 0;
        int skipped = 0;            // non-invertible realizations
    };

    /// Averages [F^-1]_ii over the realizations at the given SNR (P_T is reset from it), then
    /// takes square roots. All realizations must have the same number of paths. Throws
    /// NumericalError when every realization is singular.
    AveragedBounds crlb_monte_carlo_average(const std::vector<channel::ChannelRealization> &reals,
                                            const channel::Probe &probe, double snr_db);
}

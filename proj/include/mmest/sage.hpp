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
#include "mmest/preidg.hpp"

#include <functional>
#include <vector>

// SAGE refinement. Each path r owns a hidden data space X_r; the E-step strips the other
// paths' reconstructed signals from Y, and the M-step runs two 1-D searches (delay, then
// spatial frequency) on
//
//   |tr{C^H(tau) A^H(mu) X_r}|^2 / tr{C^H A^H A C}
//
// followed by the closed-form gain. alpha below always means the combined sqrt(P_T) alpha_r.

namespace mmest::sage
{
    struct SageConfig
    {
        double beta = 1.0;
        double gamma_stop = 1e-3;
        int max_iterations = 20;
        double tau_window_symbols = 1.0;
        double mu_window = 0.0; // <= 0 selects one beam spacing, 2 pi / M
        int grid_points = 64;
        double refine_tol = 1e-7;

        void validate() const;
        double mu_window_for(int m) const;
    };

    struct PathState
    {
        double mu = 0.0;  // [0, 2 pi)
        double tau = 0.0; // symbols
        cdouble alpha{0.0, 0.0};
    };

    struct SearchResult
    {
        double arg = 0.0;
        double objective = 0.0;
        bool degenerate = false; // objective vanished everywhere; arg is the centre
    };

    struct RefinedEstimate
    {
        std::vector<PathState> paths; // same order as the initialisation
        int iterations = 0;
        bool converged = false;
        /// -||Y - sum S_r||^2 / sigma^2 after each iteration.
        std::vector<double> likelihood_trace;
    };

    /// alpha A(mu) C(tau).
    CMatrix path_signal(const channel::Probe &probe, const PathState &p);

    /// (1 - beta) S_r + beta (Y - sum_{r' != r} S_r').
    CMatrix expectation_step(const channel::ReceiveMatrix &y, const std::vector<PathState> &est, int r,
                             const SageConfig &cfg);

    /// Delay objective at fixed spatial frequency.
    double tau_objective(const CMatrix &x, const channel::Probe &probe, double mu, double tau);

    /// Spatial-frequency objective at fixed delay.
    double mu_objective(const CMatrix &x, const channel::Probe &probe, double tau, double mu);

    /// Grid of grid_points over [lo, hi] plus the centre, then golden-section search around
    /// the best grid point until the bracket is below tol. With a slope function the final
    /// bracket is bisected on the sign of f'. Never returns a point worse than the centre or
    /// the best grid point (up to rounding of f at the peak).
    SearchResult grid_golden_maximize(const std::function<double(double)> &f, double lo, double hi, double centre,
                                      int grid_points, double tol,
                                      const std::function<double(double)> &slope = {});

    /// Window centre +- tau_window, clipped to [0, L].
    SearchResult maximize_tau(const CMatrix &x, const channel::Probe &probe, double mu, const SageConfig &cfg,
                              double centre);

    /// Window centre +- mu_window; result wrapped into [0, 2 pi).
    SearchResult maximize_mu(const CMatrix &x, const channel::Probe &probe, double tau, const SageConfig &cfg,
                             double centre);

    /// tr{C^H A^H X} / tr{C^H A^H A C}. Throws NumericalError if the denominator vanishes.
    cdouble update_alpha(const CMatrix &x, const channel::Probe &probe, double mu, double tau);

    /// -||Y - sum_r S_r||_F^2 / sigma^2 (constant terms dropped).
    double log_likelihood(const channel::ReceiveMatrix &y, const std::vector<PathState> &est);

    /// Starts from the coarse estimate with zero gains.
    RefinedEstimate run_sage(const channel::ReceiveMatrix &y, const preidg::CoarseEstimate &init,
                             const SageConfig &cfg);

    /// Starts from arbitrary states; paths are visited in the given order.
    RefinedEstimate run_sage_from(const channel::ReceiveMatrix &y, std::vector<PathState> init,
                                  const std::vector<int> &order, const SageConfig &cfg);
}

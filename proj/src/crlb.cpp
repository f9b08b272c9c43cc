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

#include "mmest/crlb.hpp"

#include "mmest/array.hpp"
#include "mmest/waveform.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmest::crlb
{
    int FisherMatrix::index(ParamKind kind, int path) const
    {
        if (path < 0 || path >= paths)
            throw std::out_of_range("FisherMatrix::index: path out of range");
        return static_cast<int>(kind) * paths + path;
    }

    ParamIndex FisherMatrix::parameter(int i) const
    {
        if (i < 0 || i >= 4 * paths)
            throw std::out_of_range("FisherMatrix::parameter: index out of range");
        return {static_cast<ParamKind>(i / paths), i % paths};
    }

    std::vector<CMatrix> model_jacobian(const channel::ChannelRealization &real, const channel::Probe &probe)
    {
        const int r_count = static_cast<int>(real.paths.size());
        if (r_count < 1)
            throw ConfigError("model_jacobian: realization has no paths");
        const int m = probe.array.m;
        std::vector<CMatrix> jac(4 * static_cast<std::size_t>(r_count));
        const double spt = std::sqrt(real.pt);
        for (int r = 0; r < r_count; ++r)
        {
            const auto &p = real.paths[static_cast<std::size_t>(r)];
            if (!std::isfinite(p.mu) || !std::isfinite(p.tau_symbols) || !std::isfinite(std::abs(p.alpha)))
                throw ConfigError("model_jacobian: non-finite path parameter");
            const CVector gains = array::beam_gains(probe.array, p.mu);
            const CVector dgains = array::beam_gains_derivative(probe.array, p.mu);
            const CMatrix c = waveform::pilot_matrix(probe.cazac, m, p.tau_symbols).c;
            const CMatrix dc = waveform::pilot_matrix_derivative(probe.cazac, m, p.tau_symbols);
            const cdouble scaled = spt * p.alpha;

            const CMatrix ac = gains.asDiagonal() * c;
            jac[static_cast<std::size_t>(r)] = ac;
            jac[static_cast<std::size_t>(r_count + r)] = kJ * ac;
            jac[static_cast<std::size_t>(2 * r_count + r)] = scaled * (dgains.asDiagonal() * c);
            jac[static_cast<std::size_t>(3 * r_count + r)] = scaled * (gains.asDiagonal() * dc);
        }
        return jac;
    }

    FisherMatrix fisher_from_jacobian(const std::vector<CMatrix> &jac, double noise_var)
    {
        if (!(noise_var > 0.0))
            throw ConfigError("fisher_from_jacobian: noise variance must be positive");
        if (jac.empty() || jac.size() % 4 != 0)
            throw ConfigError("fisher_from_jacobian: expected 4R Jacobian slices");
        const int n = static_cast<int>(jac.size());
        FisherMatrix fm;
        fm.paths = n / 4;
        fm.f.resize(n, n);
        const double scale = 2.0 / noise_var;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
            {
                // Re tr{J_i^H J_j} = Re sum conj(J_i) * J_j
                const double v =
                    scale * jac[static_cast<std::size_t>(i)].cwiseProduct(jac[static_cast<std::size_t>(j)].conjugate()).sum().real();
                fm.f(i, j) = v;
                fm.f(j, i) = v;
            }
        return fm;
    }

    FisherMatrix fisher_matrix(const channel::ChannelRealization &real, const channel::Probe &probe)
    {
        return fisher_from_jacobian(model_jacobian(real, probe), real.noise_var);
    }

    CrlbReport crlb_bounds(const FisherMatrix &f, double max_condition)
    {
        if (!f.f.allFinite())
            throw std::invalid_argument("crlb_bounds: Fisher matrix has non-finite entries");
        if (f.f.rows() != f.f.cols() || f.f.rows() == 0)
            throw std::invalid_argument("crlb_bounds: Fisher matrix must be square and non-empty");
        CrlbReport rep;
        const Eigen::SelfAdjointEigenSolver<RMatrix> eig(f.f);
        if (eig.info() != Eigen::Success)
        {
            rep.condition_number = std::numeric_limits<double>::infinity();
            return rep;
        }
        const RVector &lam = eig.eigenvalues();
        const double lmax = lam.cwiseAbs().maxCoeff();
        const double lmin = lam.minCoeff();
        rep.condition_number = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
        if (!(rep.condition_number < max_condition))
            return rep;
        const RMatrix &v = eig.eigenvectors();
        const RMatrix inv = v * lam.cwiseInverse().asDiagonal() * v.transpose();
        rep.variances = inv.diagonal();
        rep.bounds = rep.variances.cwiseMax(0.0).cwiseSqrt();
        rep.invertible = true;
        return rep;
    }

    double theta_variance(double mu_variance, const array::ArrayConfig &arr, double theta_deg)
    {
        const double d = array::aod_sensitivity_deg(arr, theta_deg);
        return mu_variance * d * d;
    }

    double relative_alpha_variance(double re_variance, double im_variance, cdouble scaled_alpha)
    {
        const double mag2 = std::norm(scaled_alpha);
        if (!(mag2 > 0.0))
            throw NumericalError("relative_alpha_variance: zero path gain");
        return (re_variance + im_variance) / mag2;
    }

    AveragedBounds crlb_monte_carlo_average(const std::vector<channel::ChannelRealization> &reals,
                                            const channel::Probe &probe, double snr_db)
    {
        if (reals.empty())
            throw ConfigError("crlb_monte_carlo_average: no realizations");
        const std::size_t r_count = reals.front().paths.size();
        AveragedBounds out;
        RVector sum = RVector::Zero(4 * static_cast<Eigen::Index>(r_count));
        for (const auto &real : reals)
        {
            if (real.paths.size() != r_count)
                throw ConfigError("crlb_monte_carlo_average: realizations differ in path count");
            channel::ChannelRealization scaled = real;
            scaled.pt = std::pow(10.0, snr_db / 10.0) * real.noise_var / std::norm(real.paths.front().alpha);
            const CrlbReport rep = crlb_bounds(fisher_matrix(scaled, probe));
            if (!rep.invertible)
            {
                ++out.skipped;
                continue;
            }
            sum += rep.variances;
            ++out.used;
        }
        if (out.used == 0)
            throw NumericalError("crlb_monte_carlo_average: every realization is singular");
        out.sqrt_mean_variance = (sum / out.used).cwiseMax(0.0).cwiseSqrt();
        return out;
    }
}

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

#include "mmest/sage.hpp"

#include "mmest/array.hpp"
#include "mmest/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mmest::sage
{
    namespace
    {
        constexpr double kGolden = 0.6180339887498949; // (sqrt(5) - 1) / 2
        constexpr double kTinyDenominator = 1e-30;

        // u(s) = sum_k conj(A_k) X[k, (s + k) mod L], so that
        // tr{C^H(tau) A^H X} = sum_s conj(g_tau(s)) u(s).
        CVector lag_profile(const CMatrix &x, const CVector &gains)
        {
            const int m = static_cast<int>(x.rows());
            const int l = static_cast<int>(x.cols());
            CVector u = CVector::Zero(l);
            for (int s = 0; s < l; ++s)
                for (int k = 0; k < m; ++k)
                    u(s) += std::conj(gains(k)) * x(k, (s + k) % l);
            return u;
        }

        // v_k = sum_n conj(C[k, n]) X[k, n], so that tr{C^H A^H X} = sum_k conj(A_k) v_k.
        CVector beam_profile(const CMatrix &x, const CMatrix &c)
        {
            return c.conjugate().cwiseProduct(x).rowwise().sum();
        }

        double ratio(const cdouble &num, double den)
        {
            return den < kTinyDenominator ? 0.0 : std::norm(num) / den;
        }

        double tau_objective_from_profile(const CVector &u, double gain_energy, const waveform::CazacConfig &caz,
                                          double tau)
        {
            const CVector g = waveform::delayed_sequence(caz, tau);
            return ratio(g.dot(u), gain_energy * g.squaredNorm());
        }

        double mu_objective_from_profile(const CVector &v, double pilot_row_energy, const array::ArrayConfig &arr,
                                         double mu)
        {
            const CVector gains = array::beam_gains(arr, mu);
            return ratio(gains.dot(v), gains.squaredNorm() * pilot_row_energy);
        }

        // d/dx of |n|^2 / (e d) given n, n', d, d'.
        double ratio_slope(const cdouble &n, const cdouble &dn, double e, double d, double dd)
        {
            if (e * d < kTinyDenominator)
                return 0.0;
            return (2.0 * (std::conj(n) * dn).real() * d - std::norm(n) * dd) / (e * d * d);
        }

        double tau_slope_from_profile(const CVector &u, double gain_energy, const waveform::CazacConfig &caz,
                                      double tau)
        {
            const CVector g = waveform::delayed_sequence(caz, tau);
            const CVector dg = waveform::delayed_sequence_derivative(caz, tau);
            return ratio_slope(g.dot(u), dg.dot(u), gain_energy, g.squaredNorm(), 2.0 * g.dot(dg).real());
        }

        double mu_slope_from_profile(const CVector &v, double pilot_row_energy, const array::ArrayConfig &arr,
                                     double mu)
        {
            const CVector a = array::beam_gains(arr, mu);
            const CVector da = array::beam_gains_derivative(arr, mu);
            return ratio_slope(a.dot(v), da.dot(v), pilot_row_energy, a.squaredNorm(), 2.0 * a.dot(da).real());
        }

        double relative_change(double prev, double now)
        {
            const double diff = std::abs(prev - now);
            return std::abs(now) < 1e-9 ? diff : diff / std::abs(now);
        }
    }

    void SageConfig::validate() const
    {
        if (!(beta > 0.0 && beta <= 1.0))
            throw ConfigError("SageConfig: beta must lie in (0, 1]");
        if (!(gamma_stop > 0.0))
            throw ConfigError("SageConfig: gamma_stop must be positive");
        if (max_iterations < 1)
            throw ConfigError("SageConfig: max_iterations must be at least 1");
        if (!(tau_window_symbols > 0.0))
            throw ConfigError("SageConfig: tau_window_symbols must be positive");
        if (!std::isfinite(mu_window))
            throw ConfigError("SageConfig: mu_window must be finite");
        if (grid_points < 8)
            throw ConfigError("SageConfig: grid_points must be at least 8");
        if (!(refine_tol > 0.0))
            throw ConfigError("SageConfig: refine_tol must be positive");
    }

    double SageConfig::mu_window_for(int m) const
    {
        return mu_window > 0.0 ? mu_window : kTwoPi / m;
    }

    CMatrix path_signal(const channel::Probe &probe, const PathState &p)
    {
        const CVector gains = array::beam_gains(probe.array, p.mu);
        const CMatrix c = waveform::pilot_matrix(probe.cazac, probe.array.m, p.tau).c;
        return p.alpha * (gains.asDiagonal() * c);
    }

    CMatrix expectation_step(const channel::ReceiveMatrix &y, const std::vector<PathState> &est, int r,
                             const SageConfig &cfg)
    {
        if (r < 0 || r >= static_cast<int>(est.size()))
            throw std::out_of_range("expectation_step: path index out of range");
        CMatrix others = CMatrix::Zero(y.y.rows(), y.y.cols());
        for (int i = 0; i < static_cast<int>(est.size()); ++i)
            if (i != r && est[static_cast<std::size_t>(i)].alpha != cdouble{0.0, 0.0})
                others += path_signal(y.probe, est[static_cast<std::size_t>(i)]);
        CMatrix x = cfg.beta * (y.y - others);
        if (cfg.beta < 1.0)
            x += (1.0 - cfg.beta) * path_signal(y.probe, est[static_cast<std::size_t>(r)]);
        return x;
    }

    double tau_objective(const CMatrix &x, const channel::Probe &probe, double mu, double tau)
    {
        const CVector gains = array::beam_gains(probe.array, mu);
        return tau_objective_from_profile(lag_profile(x, gains), gains.squaredNorm(), probe.cazac, tau);
    }

    double mu_objective(const CMatrix &x, const channel::Probe &probe, double tau, double mu)
    {
        const CMatrix c = waveform::pilot_matrix(probe.cazac, probe.array.m, tau).c;
        // Every pilot row is a permutation of the generating row, so all rows share one energy.
        return mu_objective_from_profile(beam_profile(x, c), c.row(0).squaredNorm(), probe.array, mu);
    }

    SearchResult grid_golden_maximize(const std::function<double(double)> &f, double lo, double hi, double centre,
                                      int grid_points, double tol, const std::function<double(double)> &slope)
    {
        if (!(hi >= lo) || grid_points < 2)
            throw ConfigError("grid_golden_maximize: need hi >= lo and at least two grid points");
        SearchResult best{centre, f(centre), false};
        if (hi == lo)
            return best;

        const double step = (hi - lo) / (grid_points - 1);
        for (int i = 0; i < grid_points; ++i)
        {
            const double xi = i == grid_points - 1 ? hi : lo + i * step;
            const double fi = f(xi);
            if (fi > best.objective)
                best = {xi, fi, false};
        }
        if (best.objective <= 0.0)
            return {centre, best.objective, true};

        // Bracket one grid step either side of the winner (the centre when it beat the grid).
        const double a0 = std::max(lo, best.arg - step);
        const double b0 = std::min(hi, best.arg + step);
        double a = a0;
        double b = b0;
        double x1 = b - kGolden * (b - a);
        double x2 = a + kGolden * (b - a);
        double f1 = f(x1);
        double f2 = f(x2);
        while (b - a > tol)
        {
            if (f1 >= f2)
            {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - kGolden * (b - a);
                f1 = f(x1);
            }
            else
            {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + kGolden * (b - a);
                f2 = f(x2);
            }
        }
        const double xg = 0.5 * (a + b);
        for (const auto &[x, fx] : {std::pair{xg, f(xg)}, std::pair{x1, f1}, std::pair{x2, f2}})
            if (fx > best.objective)
                best = {x, fx, false};

        if (slope)
        {
            // Objective values go flat within ~sqrt(eps) of the peak, so golden section stalls
            // there. The sign of f' over the same bracket pins the last digits: bisection for an
            // interior peak, the window edge when the slope points out of it.
            const double sa = slope(a0);
            const double sb = slope(b0);
            double xs = std::numeric_limits<double>::quiet_NaN();
            if (sa > 0.0 && sb < 0.0)
            {
                double p = a0, q = b0;
                for (int i = 0; i < 128; ++i)
                {
                    const double mid = 0.5 * (p + q);
                    if (mid <= p || mid >= q)
                        break;
                    (slope(mid) > 0.0 ? p : q) = mid;
                }
                xs = 0.5 * (p + q);
            }
            else if (a0 == lo && sa <= 0.0)
                xs = lo;
            else if (b0 == hi && sb >= 0.0)
                xs = hi;
            if (!std::isnan(xs))
            {
                const double fs = f(xs);
                // At the peak f differs from the golden value only by rounding.
                if (fs >= best.objective - 8.0 * std::numeric_limits<double>::epsilon() * std::abs(best.objective))
                    best = {xs, fs, false};
            }
        }
        return best;
    }

    SearchResult maximize_tau(const CMatrix &x, const channel::Probe &probe, double mu, const SageConfig &cfg,
                              double centre)
    {
        const double l = static_cast<double>(probe.cazac.l);
        centre = std::clamp(centre, 0.0, l);
        const double lo = std::max(0.0, centre - cfg.tau_window_symbols);
        const double hi = std::min(l, centre + cfg.tau_window_symbols);
        if (x.squaredNorm() == 0.0)
            return {centre, 0.0, true};
        const CVector gains = array::beam_gains(probe.array, mu);
        const CVector u = lag_profile(x, gains);
        const double energy = gains.squaredNorm();
        auto f = [&](double t) { return tau_objective_from_profile(u, energy, probe.cazac, t); };
        auto df = [&](double t) { return tau_slope_from_profile(u, energy, probe.cazac, t); };
        return grid_golden_maximize(f, lo, hi, centre, cfg.grid_points, cfg.refine_tol, df);
    }

    SearchResult maximize_mu(const CMatrix &x, const channel::Probe &probe, double tau, const SageConfig &cfg,
                             double centre)
    {
        const double w = cfg.mu_window_for(probe.array.m);
        if (x.squaredNorm() == 0.0)
            return {wrap_2pi(centre), 0.0, true};
        const CMatrix c = waveform::pilot_matrix(probe.cazac, probe.array.m, tau).c;
        const CVector v = beam_profile(x, c);
        const double row_energy = c.row(0).squaredNorm();
        auto f = [&](double mu) { return mu_objective_from_profile(v, row_energy, probe.array, mu); };
        auto df = [&](double mu) { return mu_slope_from_profile(v, row_energy, probe.array, mu); };
        SearchResult r =
            grid_golden_maximize(f, centre - w, centre + w, centre, cfg.grid_points, cfg.refine_tol, df);
        r.arg = wrap_2pi(r.arg);
        return r;
    }

    cdouble update_alpha(const CMatrix &x, const channel::Probe &probe, double mu, double tau)
    {
        const CVector gains = array::beam_gains(probe.array, mu);
        const CVector g = waveform::delayed_sequence(probe.cazac, tau);
        const double den = gains.squaredNorm() * g.squaredNorm();
        if (!(den >= kTinyDenominator))
            throw NumericalError("update_alpha: vanishing denominator tr{C^H A^H A C}");
        return g.dot(lag_profile(x, gains)) / den;
    }

    double log_likelihood(const channel::ReceiveMatrix &y, const std::vector<PathState> &est)
    {
        CMatrix resid = y.y;
        for (const auto &p : est)
            resid -= path_signal(y.probe, p);
        const double nv = y.effective_noise_var > 0.0 ? y.effective_noise_var : 1.0;
        return -resid.squaredNorm() / nv;
    }

    RefinedEstimate run_sage_from(const channel::ReceiveMatrix &y, std::vector<PathState> init,
                                  const std::vector<int> &order, const SageConfig &cfg)
    {
        cfg.validate();
        const int n = static_cast<int>(init.size());
        if (n < 1)
            throw ConfigError("run_sage: at least one path is required");
        if (static_cast<int>(order.size()) != n)
            throw ConfigError("run_sage: update order must list every path once");

        RefinedEstimate out;
        out.paths = std::move(init);
        for (auto &p : out.paths)
            p.mu = wrap_2pi(p.mu);

        for (int it = 1; it <= cfg.max_iterations; ++it)
        {
            const std::vector<PathState> prev = out.paths;
            bool degenerate = false;
            for (int r : order)
            {
                auto &p = out.paths[static_cast<std::size_t>(r)];
                const CMatrix x = expectation_step(y, out.paths, r, cfg);
                const SearchResult t = maximize_tau(x, y.probe, p.mu, cfg, p.tau);
                const SearchResult m = maximize_mu(x, y.probe, t.arg, cfg, p.mu);
                degenerate = degenerate || t.degenerate || m.degenerate;
                p.tau = t.arg;
                p.mu = m.arg;
                p.alpha = update_alpha(x, y.probe, p.mu, p.tau);
            }
            out.iterations = it;
            out.likelihood_trace.push_back(log_likelihood(y, out.paths));
            if (degenerate)
                break;

            double worst = 0.0;
            for (int r = 0; r < n; ++r)
            {
                const auto &a = prev[static_cast<std::size_t>(r)];
                const auto &b = out.paths[static_cast<std::size_t>(r)];
                const double dmu = std::abs(wrap_pi(a.mu - b.mu));
                const double t1 = std::abs(b.mu) < 1e-9 ? dmu : dmu / std::abs(b.mu);
                const double t2 = relative_change(a.tau, b.tau);
                const double da = std::abs(a.alpha - b.alpha);
                const double t3 = std::abs(b.alpha) < 1e-9 ? da : da / std::abs(b.alpha);
                worst = std::max({worst, t1, t2, t3});
            }
            if (worst <= cfg.gamma_stop)
            {
                out.converged = true;
                break;
            }
        }
        return out;
    }

    RefinedEstimate run_sage(const channel::ReceiveMatrix &y, const preidg::CoarseEstimate &init,
                             const SageConfig &cfg)
    {
        const int n = static_cast<int>(init.paths.size());
        if (n < 1)
            throw ConfigError("run_sage: coarse estimate has no paths");
        std::vector<PathState> states(static_cast<std::size_t>(n));
        for (int r = 0; r < n; ++r)
        {
            const auto &cp = init.paths[static_cast<std::size_t>(r)];
            states[static_cast<std::size_t>(r)] = {cp.mu_hat, static_cast<double>(cp.tau_int), {0.0, 0.0}};
        }
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return init.paths[static_cast<std::size_t>(a)].peak_power > init.paths[static_cast<std::size_t>(b)].peak_power;
        });
        return run_sage_from(y, std::move(states), order, cfg);
    }
}

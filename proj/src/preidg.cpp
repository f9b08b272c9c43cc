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

#include "mmest/preidg.hpp"

#include "mmest/waveform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

namespace mmest::preidg
{
    namespace
    {
        int wrap(int v, int m)
        {
            const int r = v % m;
            return r < 0 ? r + m : r;
        }

        int find_root(std::vector<int> &parent, int i)
        {
            while (parent[static_cast<std::size_t>(i)] != i)
            {
                parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
                i = parent[static_cast<std::size_t>(i)];
            }
            return i;
        }
    }

    void PreidgConfig::validate() const
    {
        if (k_points < 2)
            throw ConfigError("PreidgConfig: k_points must be at least 2");
        if (!(p_fa > 0.0 && p_fa < 1.0))
            throw ConfigError("PreidgConfig: p_fa must lie in (0, 1)");
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError("PreidgConfig: v must be positive");
        if (!std::isfinite(merge_mu_tol))
            throw ConfigError("PreidgConfig: merge_mu_tol must be finite");
    }

    double detection_threshold(double noise_var, int m, double p_fa)
    {
        if (m < 1 || !(p_fa > 0.0 && p_fa < 1.0))
            throw ConfigError("detection_threshold: need m >= 1 and p_fa in (0, 1)");
        return noise_var * m * std::log(static_cast<double>(m) / p_fa);
    }

    PowerMatrix correlate(const channel::ReceiveMatrix &y)
    {
        const auto &probe = y.probe;
        if (y.y.rows() != probe.array.m || y.y.cols() != probe.cazac.l)
            throw ConfigError("correlate: observation is not M x L");
        const CMatrix c0 = waveform::pilot_matrix(probe.cazac, probe.array.m, 0.0).c;
        PowerMatrix pm;
        pm.z = y.y * c0.adjoint();
        pm.p = pm.z.cwiseAbs2();
        return pm;
    }

    RVector diagonal(const RMatrix &p, int d)
    {
        const int m = static_cast<int>(p.rows());
        if (p.cols() != p.rows())
            throw ConfigError("diagonal: power matrix must be square");
        RVector out(m);
        for (int k = 0; k < m; ++k)
            out(k) = p(k, wrap(k + d, m));
        return out;
    }

    std::vector<Detection> detect_paths(const PowerMatrix &pm, double g)
    {
        if (!(g > 0.0))
            throw ConfigError("detect_paths: threshold must be positive");
        const int m = static_cast<int>(pm.p.rows());
        std::vector<Detection> out;
        for (int d = 0; d < m; ++d)
        {
            const RVector diag = diagonal(pm.p, d);
            Eigen::Index k = 0;
            const double peak = diag.maxCoeff(&k);
            if (peak >= g)
                out.push_back({d, static_cast<int>(k), peak});
        }
        return out;
    }

    Lut build_lut(const array::ArrayConfig &arr, int k_points)
    {
        if (k_points < 2)
            throw ConfigError("build_lut: k_points must be at least 2");
        if (arr.m < 2)
            throw ConfigError("build_lut: need at least two beams");
        Lut lut;
        lut.m = arr.m;
        lut.k_points = k_points;
        lut.delta_mu = kTwoPi / (static_cast<double>(arr.m) * k_points);
        lut.ratios.resize(static_cast<std::size_t>(k_points) + 1);
        const CVector w0 = array::dft_beam(arr, 0);
        const CVector w1 = array::dft_beam(arr, 1);
        for (int l = 0; l <= k_points; ++l)
        {
            const CVector a = array::steering_vector(arr, l * lut.delta_mu);
            const double p0 = std::norm(a.dot(w0));
            const double p1 = std::norm(a.dot(w1));
            lut.ratios[static_cast<std::size_t>(l)] = std::sqrt(p0 / p1);
        }
        lut.ratios.front() = std::numeric_limits<double>::infinity();
        lut.ratios.back() = 0.0;
        return lut;
    }

    void Lut::locate(double delta, int &l, double &b) const
    {
        if (ratios.size() < 3 || !(delta >= 0.0))
            throw ConfigError("Lut::locate: empty table or negative ratio");
        const double d1 = ratios[1];
        if (delta >= d1)
        {
            // First cell runs from +inf down to ratios[1]; interpolate in 1 / delta.
            l = 0;
            b = std::isinf(delta) ? 0.0 : d1 / delta;
            return;
        }
        // ratios is decreasing; find the last l with ratios[l] >= delta.
        auto it = std::upper_bound(ratios.begin() + 1, ratios.end(), delta, std::greater<double>());
        l = static_cast<int>(std::distance(ratios.begin(), it)) - 1;
        l = std::clamp(l, 1, k_points - 1);
        const double hi = ratios[static_cast<std::size_t>(l)];
        const double lo = ratios[static_cast<std::size_t>(l) + 1];
        b = std::clamp((hi - delta) / (hi - lo), 0.0, 1.0);
    }

    double Lut::offset(double delta) const
    {
        int l = 0;
        double b = 0.0;
        locate(delta, l, b);
        return delta_mu * (l + b);
    }

    CoarseEstimate coarse_estimate(const PowerMatrix &pm, const std::vector<Detection> &detections, const Lut &lut,
                                   const array::ArrayConfig &arr, double noise_var, const PreidgConfig &cfg)
    {
        cfg.validate();
        const int m = arr.m;
        if (pm.p.rows() != m || pm.p.cols() != m || lut.m != m)
            throw ConfigError("coarse_estimate: power matrix, LUT and array disagree on M");

        std::vector<CoarsePath> cands;
        cands.reserve(detections.size());
        for (const auto &det : detections)
        {
            const int k = det.beam;
            const int d = det.delay;
            const double pk = pm.p(k, wrap(k + d, m));
            const double pu = pm.p(wrap(k + 1, m), wrap(k + 1 + d, m));
            const double pl = pm.p(wrap(k - 1, m), wrap(k - 1 + d, m));

            CoarsePath cp;
            cp.tau_int = d;
            cp.k_index = k;
            cp.peak_power = det.peak_power;
            cp.feedback.beam_index = k;
            const double phi_k = arr.beam_phases[static_cast<std::size_t>(k)];
            if (std::abs(pu - pl) <= noise_var / cfg.v)
            {
                cp.on_grid = true;
                cp.mu_hat = phi_k;
                cp.feedback.delta_ratio = std::numeric_limits<double>::infinity();
            }
            else
            {
                const bool upper = pu > pl;
                const double pn = upper ? pu : pl;
                const double delta = pn > 0.0 ? std::sqrt(pk / pn) : std::numeric_limits<double>::infinity();
                const double off = lut.offset(delta);
                cp.mu_hat = wrap_2pi(upper ? phi_k + off : phi_k - off);
                cp.feedback.delta_ratio = upper ? delta : -delta;
            }
            cp.theta_hat_deg = array::aod_from_spatial_frequency(arr, cp.mu_hat);
            cands.push_back(cp);
        }

        // Model-order refinement: detections on cyclically adjacent diagonals pointing at the
        // same spatial frequency are one path leaking into two delays. Chains are merged and
        // only the strongest member survives.
        const double tol = cfg.merge_mu_tol > 0.0 ? cfg.merge_mu_tol : lut.delta_mu;
        const int n = static_cast<int>(cands.size());
        std::vector<int> parent(static_cast<std::size_t>(n));
        std::iota(parent.begin(), parent.end(), 0);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
            {
                const auto &a = cands[static_cast<std::size_t>(i)];
                const auto &c = cands[static_cast<std::size_t>(j)];
                const int dd = wrap(a.tau_int - c.tau_int, m);
                const bool adjacent = dd == 1 || dd == m - 1;
                if (adjacent && std::abs(wrap_pi(a.mu_hat - c.mu_hat)) <= tol)
                    parent[static_cast<std::size_t>(find_root(parent, i))] = find_root(parent, j);
            }

        std::vector<int> best(static_cast<std::size_t>(n), -1);
        for (int i = 0; i < n; ++i)
        {
            const int root = find_root(parent, i);
            int &b = best[static_cast<std::size_t>(root)];
            if (b < 0 || cands[static_cast<std::size_t>(i)].peak_power > cands[static_cast<std::size_t>(b)].peak_power)
                b = i;
        }

        CoarseEstimate est;
        for (int i = 0; i < n; ++i)
            if (best[static_cast<std::size_t>(i)] >= 0)
                est.paths.push_back(cands[static_cast<std::size_t>(best[static_cast<std::size_t>(i)])]);
        std::stable_sort(est.paths.begin(), est.paths.end(),
                         [](const CoarsePath &a, const CoarsePath &b) { return a.peak_power > b.peak_power; });
        est.r_hat = static_cast<int>(est.paths.size());
        est.merged = n - est.r_hat;
        return est;
    }

    CoarseEstimate run_preidg(const channel::ReceiveMatrix &y, const Lut &lut, const PreidgConfig &cfg)
    {
        cfg.validate();
        const PowerMatrix pm = correlate(y);
        const double nv = y.effective_noise_var;
        const double g = detection_threshold(nv > 0.0 ? nv : 1.0, y.probe.array.m, cfg.p_fa);
        const auto dets = detect_paths(pm, g);
        return coarse_estimate(pm, dets, lut, y.probe.array, nv, cfg);
    }

    double mu_from_feedback(const Feedback &fb, const Lut &lut, const array::ArrayConfig &arr)
    {
        if (fb.beam_index < 0 || fb.beam_index >= arr.m)
            throw std::out_of_range("mu_from_feedback: beam index outside the codebook");
        const double phi_k = arr.beam_phases[static_cast<std::size_t>(fb.beam_index)];
        const double off = lut.offset(std::abs(fb.delta_ratio));
        return wrap_2pi(std::signbit(fb.delta_ratio) ? phi_k - off : phi_k + off);
    }

    std::size_t feedback_bits(int m)
    {
        if (!is_power_of_two(m))
            throw ConfigError("feedback_bits: M must be a power of 2");
        return 64 + static_cast<std::size_t>(ilog2(m));
    }

    std::vector<bool> pack_feedback(const Feedback &fb, int m)
    {
        const std::size_t n = feedback_bits(m);
        if (fb.beam_index < 0 || fb.beam_index >= m)
            throw std::out_of_range("pack_feedback: beam index does not fit in log2(M) bits");
        const auto raw = std::bit_cast<std::uint64_t>(fb.delta_ratio);
        std::vector<bool> bits(n);
        for (int i = 0; i < 64; ++i)
            bits[static_cast<std::size_t>(i)] = (raw >> i) & 1u;
        for (std::size_t i = 64; i < n; ++i)
            bits[i] = (fb.beam_index >> (i - 64)) & 1;
        return bits;
    }

    Feedback unpack_feedback(const std::vector<bool> &bits, int m)
    {
        const std::size_t n = feedback_bits(m);
        if (bits.size() != n)
            throw ConfigError("unpack_feedback: expected " + std::to_string(n) + " bits");
        std::uint64_t raw = 0;
        for (int i = 0; i < 64; ++i)
            if (bits[static_cast<std::size_t>(i)])
                raw |= std::uint64_t{1} << i;
        Feedback fb;
        fb.delta_ratio = std::bit_cast<double>(raw);
        for (std::size_t i = 64; i < n; ++i)
            if (bits[i])
                fb.beam_index |= 1 << (i - 64);
        return fb;
    }
}

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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Set MMEST_ACCEPT_THREADS to change the worker count of the long sweeps (default 1; the
// determinism rerun uses that count + 3).

#include "mmest/crlb.hpp"
#include "mmest/harness.hpp"
#include "mmest/sage.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

using namespace mmest;

namespace
{
    using Clock = std::chrono::steady_clock;

    int g_failed = 0;

    double seconds_since(Clock::time_point t0)
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    void report(int id, const char *name, bool ok, double secs, double limit_s, const std::string &detail)
    {
        const bool in_time = secs <= limit_s;
        const bool pass = ok && in_time;
        g_failed += !pass;
        std::printf("criterion %d [%s] %s  (%.2f s, limit %.0f s%s)  %s\n", id, name, pass ? "PASS" : "FAIL", secs,
                    limit_s, in_time ? "" : ", over time", detail.c_str());
        std::fflush(stdout);
    }

    std::string fmt(const char *f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
    {
        char buf[256];
        std::snprintf(buf, sizeof buf, f, a, b, c, d);
        return buf;
    }

    int sweep_threads()
    {
        if (const char *e = std::getenv("MMEST_ACCEPT_THREADS"))
            return std::max(1, std::atoi(e));
        return 1;
    }

    const channel::Probe kProbe{array::ArrayConfig(16), waveform::CazacConfig{}};

    void butler_dft()
    {
        const auto t0 = Clock::now();
        double worst_gram = 0.0, worst_col = 0.0;
        bool perm = true;
        for (int m : {2, 4, 8, 16})
        {
            const array::ArrayConfig cfg(m);
            const CMatrix b = array::butler_matrix(cfg);
            const CMatrix f = oracle::dft(m);
            worst_gram = std::max(worst_gram, (b.adjoint() * b - CMatrix::Identity(m, m)).cwiseAbs().maxCoeff());
            std::vector<int> used(std::size_t(m), 0);
            for (int j = 0; j < m; ++j)
            {
                int best = 0;
                double best_mag = -1.0;
                for (int k = 0; k < m; ++k)
                {
                    const double mag = std::abs(f.col(k).dot(b.col(j)));
                    if (mag > best_mag)
                    {
                        best_mag = mag;
                        best = k;
                    }
                }
                const cdouble phase = f.col(best).dot(b.col(j));
                const double unit = std::abs(std::abs(phase) - 1.0);
                worst_col = std::max({worst_col, unit, (b.col(j) - phase * f.col(best)).norm()});
                used[std::size_t(best)]++;
            }
            perm = perm && std::all_of(used.begin(), used.end(), [](int u) { return u == 1; });
        }
        report(1, "Butler/DFT equivalence", perm && worst_gram < 1e-12 && worst_col < 1e-12, seconds_since(t0), 1,
               fmt("gram err %.2e, column err %.2e", worst_gram, worst_col) + (perm ? "" : ", not a permutation"));
    }

    void cazac_permutation()
    {
        const auto t0 = Clock::now();
        const waveform::CazacConfig cfg;
        const CMatrix c0 = waveform::pilot_matrix(cfg, 16, 0.0).c;
        double worst = 0.0;
        for (int i = 0; i < 16; ++i)
        {
            const CMatrix ci = waveform::pilot_matrix(cfg, 16, double(i)).c;
            CMatrix p = CMatrix::Zero(16, 16);
            for (int k = 0; k < 16; ++k)
                p(k, (k + i) % 16) = 1.0; // independent of the library's permutation helper
            const CMatrix lib = waveform::cyclic_permutation(16, i).cast<cdouble>();
            worst = std::max({worst, (ci * c0.adjoint() - 16.0 * p).norm(), (ci * c0.adjoint() - 16.0 * lib).norm()});
        }
        report(2, "CAZAC permutation identity", worst < 1e-10, seconds_since(t0), 1,
               fmt("max Frobenius err %.2e", worst));
    }

    void preidg_on_grid()
    {
        const auto t0 = Clock::now();
        const array::ArrayConfig arr(16);
        const waveform::CazacConfig caz;
        const auto lut = preidg::build_lut(arr, 101);
        int bad = 0;
        double worst_peak = 0.0;
        for (int k = 0; k < 16; ++k)
            for (int i0 = 0; i0 < 16; ++i0)
            {
                channel::ChannelRealization real;
                real.pt = 1.0;
                real.noise_var = 1.0;
                channel::PathParams p;
                p.alpha = {1.0, 0.0};
                p.mu = kTwoPi * k / 16.0;
                p.tau_symbols = i0;
                real.paths.push_back(p);
                const auto y = channel::noiseless_receive(real, arr, caz);
                const auto est = preidg::run_preidg(y, lut, preidg::PreidgConfig{});
                if (est.r_hat != 1)
                {
                    ++bad;
                    continue;
                }
                const auto &c = est.paths[0];
                worst_peak = std::max(worst_peak, std::abs(c.peak_power - 4096.0));
                if (c.tau_int != i0 || c.mu_hat != arr.beam_phases[std::size_t(k)] || c.k_index != k ||
                    std::abs(c.peak_power - 4096.0) > 1e-9 * 4096.0)
                    ++bad;
            }
        report(3, "on-grid noiseless PREIDG", bad == 0, seconds_since(t0), 1,
               fmt("%g of 256 (beam, delay) cases wrong, max |peak - 4096| = %.2e", bad, worst_peak));
    }

    void fim_vs_finite_difference()
    {
        const auto t0 = Clock::now();
        std::mt19937_64 g(4);
        double worst = 0.0;
        for (int t = 0; t < 50; ++t)
        {
            const auto real = oracle::random_realization(g, 1 + t % 3, 1.0, 14.0);
            const RMatrix ref = oracle::finite_difference_fisher(real, kProbe);
            const auto f = crlb::fisher_matrix(real, kProbe);
            worst = std::max(worst, (f.f - ref).norm() / ref.norm());
        }
        report(4, "FIM vs finite differences", worst < 1e-3, seconds_since(t0), 30,
               fmt("max relative Frobenius err %.2e over 50 realizations", worst));
    }

    void noiseless_sage()
    {
        const auto t0 = Clock::now();
        const auto lut = preidg::build_lut(kProbe.array, 101);
        sage::SageConfig cfg;
        cfg.gamma_stop = 1e-12;
        cfg.max_iterations = 500;
        cfg.refine_tol = 1e-10;
        std::mt19937_64 g(5);
        int ok = 0;
        double wmu = 0.0, wtau = 0.0, walpha = 0.0;
        for (int t = 0; t < 20; ++t)
        {
            const auto real = oracle::random_realization(g, 2, 3.0, 13.0);
            const auto y = channel::noiseless_receive(real, kProbe.array, kProbe.cazac);
            const auto coarse = preidg::run_preidg(y, lut, preidg::PreidgConfig{});
            const auto out = sage::run_sage(y, coarse, cfg);
            std::vector<harness::PathPoint> truth, est;
            for (const auto &p : real.paths)
                truth.push_back({p.tau_symbols, p.mu});
            for (const auto &p : out.paths)
                est.push_back({p.tau, p.mu});
            const auto a = harness::match_paths(truth, est, {1.5, kTwoPi / 16.0});
            bool trial_ok = true;
            for (std::size_t i = 0; i < truth.size(); ++i)
            {
                if (a[i] < 0)
                {
                    trial_ok = false;
                    wmu = wtau = walpha = std::numeric_limits<double>::infinity();
                    continue;
                }
                const auto &e = out.paths[std::size_t(a[i])];
                const cdouble alpha = std::sqrt(real.pt) * real.paths[i].alpha;
                const double dmu = std::abs(wrap_pi(e.mu - real.paths[i].mu));
                const double dtau = std::abs(e.tau - real.paths[i].tau_symbols);
                const double dal = std::abs(e.alpha - alpha) / std::abs(alpha);
                wmu = std::max(wmu, dmu);
                wtau = std::max(wtau, dtau);
                walpha = std::max(walpha, dal);
                trial_ok = trial_ok && dmu < 1e-6 && dtau < 1e-4 && dal < 1e-6;
            }
            ok += trial_ok;
        }
        report(5, "noiseless SAGE recovery", ok == 20, seconds_since(t0), 60,
               fmt("%g/20 recovered; worst |dmu| %.2e, |dtau| %.2e, rel alpha %.2e", ok, wmu, wtau, walpha));
    }

    void convergence_profile()
    {
        const auto t0 = Clock::now();
        RunConfig cfg = default_config();
        cfg.snr_sweep_db = {5.0};
        cfg.trials = 1000;
        cfg.sage.gamma_stop = 1e-3;
        cfg.finalize();
        const auto res = harness::run_sweep(cfg, sweep_threads());
        std::vector<int> it;
        for (const auto &r : res.records)
            if (r.sage_ran)
                it.push_back(r.sage_iterations);
        std::sort(it.begin(), it.end());
        const double n = double(it.size());
        const double median =
            it.empty() ? 0.0 : (it.size() % 2 ? it[it.size() / 2] : 0.5 * (it[it.size() / 2 - 1] + it[it.size() / 2]));
        const double within10 = double(std::count_if(it.begin(), it.end(), [](int v) { return v <= 10; })) / n;
        const double at3 = double(std::count(it.begin(), it.end(), 3)) / n;
        const bool ok = !it.empty() && std::abs(median - 3.0) <= 1.0 && within10 >= 0.95;
        report(6, "SAGE convergence profile at 5 dB", ok, seconds_since(t0), 300,
               fmt("median %g iterations, %.1f%% <= 10, %.1f%% exactly 3, max %g", median, 100.0 * within10,
                   100.0 * at3, it.empty() ? 0.0 : double(it.back())));
    }

    const harness::ResultRow *row(const std::vector<harness::ResultRow> &rows, double snr, const char *cls,
                                  const char *param)
    {
        for (const auto &r : rows)
            if (r.snr_db == snr && r.path_class == cls && r.parameter == param)
                return &r;
        return nullptr;
    }

    void rmse_tracking_and_determinism()
    {
        RunConfig cfg = default_config();
        cfg.trials = 1000;
        cfg.snr_sweep_db = {-10.0, 0.0, 10.0, 20.0};
        cfg.finalize();
        const int threads = sweep_threads();

        auto t0 = Clock::now();
        const auto res = harness::run_sweep(cfg, threads);
        const double t7 = seconds_since(t0);
        const auto &rows = res.rows;

        // (a) LOS AoD within 3 dB, (c) NLOS delay within 5 dB, both at SNR >= 10 dB
        const double f3 = std::pow(10.0, 3.0 / 20.0), f5 = std::pow(10.0, 5.0 / 20.0);
        bool a_ok = true, c_ok = true, b_ok = true, d_ok = true;
        std::string a_s, b_s, c_s, d_s;
        for (double snr : {10.0, 20.0})
        {
            const auto *la = row(rows, snr, "LOS", "theta_ml");
            const auto *nt = row(rows, snr, "NLOS", "tau_ml");
            const double ra = la->rmse / la->sqrt_crlb_avg, rc = nt->rmse / nt->sqrt_crlb_avg;
            a_ok = a_ok && ra <= f3;
            c_ok = c_ok && rc <= f5;
            a_s += fmt(" %g dB:%.3f", snr, ra);
            c_s += fmt(" %g dB:%.3f", snr, rc);
        }
        for (double snr : cfg.snr_sweep_db)
        {
            const auto *p = row(rows, snr, "LOS", "theta_preidg");
            const auto *m = row(rows, snr, "LOS", "theta_ml");
            b_ok = b_ok && p->rmse >= m->rmse;
            b_s += fmt(" %g dB:%.3g/%.3g", snr, p->rmse, m->rmse);
        }
        for (const char *cls : {"LOS", "NLOS"})
            for (int mi = 0; mi < harness::kMetricCount; ++mi)
            {
                const char *param = harness::metric_name(harness::Metric(mi));
                if (std::string(cls) == "LOS" && std::string(param).rfind("tau", 0) == 0)
                    continue; // LOS delay is pinned at 0; its rows are reported but not a curve
                for (std::size_t s = 1; s < cfg.snr_sweep_db.size(); ++s)
                {
                    const auto *lo = row(rows, cfg.snr_sweep_db[s - 1], cls, param);
                    const auto *hi = row(rows, cfg.snr_sweep_db[s], cls, param);
                    if (!(hi->rmse <= 1.10 * lo->rmse))
                    {
                        d_ok = false;
                        d_s += std::string(" ") + cls + "/" + param +
                               fmt(" %g->%g dB: %.4g->%.4g", cfg.snr_sweep_db[s - 1], cfg.snr_sweep_db[s], lo->rmse,
                                   hi->rmse);
                    }
                }
            }
        report(7, "RMSE vs CRLB (a) LOS AoD within 3 dB", a_ok, t7, 1200, "RMSE/sqrtCRLB" + a_s);
        report(7, "RMSE vs CRLB (b) PREIDG >= ML on LOS AoD", b_ok, t7, 1200, "PREIDG/ML" + b_s);
        report(7, "RMSE vs CRLB (c) NLOS delay within 5 dB", c_ok, t7, 1200, "RMSE/sqrtCRLB" + c_s);
        report(7, "RMSE vs CRLB (d) curves non-increasing within 10%", d_ok, t7, 1200,
               d_ok ? "all curves monotone" : "violations:" + d_s);

        t0 = Clock::now();
        const auto again = harness::run_sweep(cfg, threads + 3);
        const double t8 = seconds_since(t0);
        std::ostringstream x, y, cx, cy;
        harness::write_csv(x, res.rows, cfg.trials);
        harness::write_csv(y, again.rows, cfg.trials);
        harness::write_csv(cx, res.conditioned_rows, cfg.trials);
        harness::write_csv(cy, again.conditioned_rows, cfg.trials);
        const bool same = x.str() == y.str() && cx.str() == cy.str();
        report(8, "determinism across worker counts", same, t8, std::max(1.25 * t7, t7 + 5.0),
               fmt("%g vs %g threads, ", threads, threads + 3) + (same ? "CSV bytes identical" : "CSV differs"));

        std::printf("--- criterion 7 sweep ---\n%s", x.str().c_str());
    }

    void maximizer_oracle()
    {
        const auto t0 = Clock::now();
        const sage::SageConfig cfg;
        std::mt19937_64 g(9);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        double worst = 0.0;
        constexpr int kScan = 100000;
        for (int t = 0; t < 20; ++t)
        {
            const auto real = oracle::random_realization(g, 2, 2.0, 13.0);
            auto rng = channel::make_stream(9, 2, std::uint64_t(t));
            const auto y = channel::synthesize(real, kProbe.array, kProbe.cazac, rng);
            const auto &p = real.paths[1];
            const double tc = std::clamp(p.tau_symbols + u(g), 0.0, 16.0);
            const double mc = wrap_2pi(p.mu + 0.2 * u(g));

            // scan winner, then a second scan across its cell so the reference is the argmax
            // itself rather than the nearest scan node
            const auto rt = sage::maximize_tau(y.y, kProbe, p.mu, cfg, tc);
            auto ft = [&](double tau) { return sage::tau_objective(y.y, kProbe, p.mu, tau); };
            const double lo = std::max(0.0, tc - cfg.tau_window_symbols), hi = std::min(16.0, tc + cfg.tau_window_symbols);
            const double st = (hi - lo) / (kScan - 1);
            const double bt = oracle::brute_force_argmax(ft, lo, hi, kScan);
            const double bt2 = oracle::brute_force_argmax(ft, std::max(lo, bt - st), std::min(hi, bt + st), 2001);
            worst = std::max(worst, std::abs(rt.arg - bt2));

            const auto rm = sage::maximize_mu(y.y, kProbe, p.tau_symbols, cfg, mc);
            auto fm = [&](double mu) { return sage::mu_objective(y.y, kProbe, p.tau_symbols, mu); };
            const double w = cfg.mu_window_for(16);
            const double sm = 2.0 * w / (kScan - 1);
            const double bm = oracle::brute_force_argmax(fm, mc - w, mc + w, kScan);
            const double bm2 = oracle::brute_force_argmax(fm, bm - sm, bm + sm, 2001);
            worst = std::max(worst, std::abs(wrap_pi(rm.arg - bm2)));
        }
        report(9, "1-D maximizers vs 1e5-point scan", worst < 1e-5, seconds_since(t0), 60,
               fmt("max |argmax difference| %.2e over 20 instances (delay and angle)", worst));
    }
}

int main()
{
    try
    {
        butler_dft();
        cazac_permutation();
        preidg_on_grid();
        fim_vs_finite_difference();
        noiseless_sage();
        maximizer_oracle();
        convergence_profile();
        rmse_tracking_and_determinism();
    }
    catch (const std::exception &e)
    {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criterion line(s) failed\n", g_failed);
    return g_failed == 0 ? 0 : 1;
}

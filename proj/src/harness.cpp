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

#include "mmest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace mmest::harness
{
    namespace
    {
        constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

        std::string num(double v)
        {
            if (std::isnan(v))
                return "nan";
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.9g", v);
            return buf;
        }

        MatchGate default_gate(const RunConfig &cfg)
        {
            return {cfg.sage.tau_window_symbols + 0.5, kTwoPi / cfg.array.m};
        }

        std::ofstream open_out(const std::string &path)
        {
            std::ofstream f(path, std::ios::binary);
            if (!f)
                throw std::runtime_error("cannot write '" + path + "'");
            return f;
        }
    }

    const char *metric_name(Metric m)
    {
        switch (m)
        {
        case Metric::theta_preidg:
            return "theta_preidg";
        case Metric::theta_ml:
            return "theta_ml";
        case Metric::alpha_ml:
            return "alpha_ml";
        case Metric::tau_preidg:
            return "tau_preidg";
        case Metric::tau_ml:
            return "tau_ml";
        }
        return "?";
    }

    std::vector<int> match_paths(const std::vector<PathPoint> &truth, const std::vector<PathPoint> &estimates,
                                 const MatchGate &gate)
    {
        struct Pair
        {
            double cost, dtau, dmu;
            int t, e;
        };
        // Each axis is scaled by its gate so neither dominates; several estimates can share
        // tau = 0 exactly after clipping, so delay alone does not separate them.
        const double tau_scale = gate.max_tau > 0.0 ? gate.max_tau : 1.0;
        const double mu_scale = gate.max_mu > 0.0 ? gate.max_mu : kPi;
        std::vector<Pair> pairs;
        for (int t = 0; t < static_cast<int>(truth.size()); ++t)
            for (int e = 0; e < static_cast<int>(estimates.size()); ++e)
            {
                const auto &a = truth[static_cast<std::size_t>(t)];
                const auto &b = estimates[static_cast<std::size_t>(e)];
                const double dtau = std::abs(a.tau - b.tau);
                const double dmu = std::abs(wrap_pi(a.mu - b.mu));
                if (dtau > gate.max_tau || (gate.max_mu > 0.0 && dmu > gate.max_mu))
                    continue;
                const double cost = (dtau / tau_scale) * (dtau / tau_scale) + (dmu / mu_scale) * (dmu / mu_scale);
                pairs.push_back({cost, dtau, dmu, t, e});
            }
        // Ties fall back to the estimate's own coordinates so the result
        // does not depend on the order estimates are listed in.
        std::sort(pairs.begin(), pairs.end(), [&](const Pair &x, const Pair &y) {
            const auto &ex = estimates[static_cast<std::size_t>(x.e)];
            const auto &ey = estimates[static_cast<std::size_t>(y.e)];
            return std::tie(x.cost, x.dtau, x.dmu, x.t, ex.tau, ex.mu) <
                   std::tie(y.cost, y.dtau, y.dmu, y.t, ey.tau, ey.mu);
        });
        std::vector<int> assign(truth.size(), -1);
        std::vector<bool> used(estimates.size(), false);
        for (const auto &p : pairs)
        {
            if (assign[static_cast<std::size_t>(p.t)] >= 0 || used[static_cast<std::size_t>(p.e)])
                continue;
            assign[static_cast<std::size_t>(p.t)] = p.e;
            used[static_cast<std::size_t>(p.e)] = true;
        }
        return assign;
    }

    RunContext::RunContext(const RunConfig &c)
        : cfg(c), probe{c.array, c.cazac}, lut(preidg::build_lut(c.array, c.preidg.k_points))
    {
        cfg.validate();
    }

    channel::ChannelRealization draw_trial_realization(const RunContext &ctx, int trial_id, double snr_db)
    {
        channel::ScenarioConfig sc = ctx.cfg.scenario;
        sc.snr_db = snr_db;
        auto rng = channel::make_stream(sc.seed, 1, static_cast<std::uint64_t>(trial_id));
        return channel::draw_realization(sc, ctx.probe.array, rng);
    }

    TrialRecord run_trial(const RunContext &ctx, int snr_index, int trial_id)
    {
        const RunConfig &cfg = ctx.cfg;
        TrialRecord rec;
        rec.trial_id = trial_id;
        rec.snr_index = snr_index;
        rec.snr_db = cfg.snr_sweep_db.at(static_cast<std::size_t>(snr_index));
        rec.truth = draw_trial_realization(ctx, trial_id, rec.snr_db);

        auto noise = channel::make_stream(cfg.scenario.seed, 2, static_cast<std::uint64_t>(trial_id),
                                          static_cast<std::uint64_t>(snr_index));
        const auto y = channel::synthesize(rec.truth, ctx.probe.array, ctx.probe.cazac, noise, cfg.repetitions_per_beam);

        rec.coarse = preidg::run_preidg(y, ctx.lut, cfg.preidg);
        const int n_true = static_cast<int>(rec.truth.paths.size());
        rec.order_correct = rec.coarse.r_hat == n_true;

        std::vector<PathPoint> est;
        if (rec.coarse.r_hat > 0)
        {
            try
            {
                rec.refined = sage::run_sage(y, rec.coarse, cfg.sage);
                rec.sage_ran = true;
                rec.sage_iterations = rec.refined.iterations;
                for (const auto &p : rec.refined.paths)
                    est.push_back({p.tau, p.mu});
            }
            catch (const NumericalError &)
            {
                rec.sage_failed = true;
            }
        }

        std::vector<PathPoint> truth;
        for (const auto &p : rec.truth.paths)
            truth.push_back({p.tau_symbols, wrap_2pi(p.mu)});
        rec.assignment = match_paths(truth, est, default_gate(cfg));
        // SAGE may walk an estimate onto a different path than its coarse seed, so the coarse
        // stage is scored against its own association.
        std::vector<PathPoint> coarse_pts;
        for (const auto &p : rec.coarse.paths)
            coarse_pts.push_back({double(p.tau_int), p.mu_hat});
        rec.coarse_assignment = match_paths(truth, coarse_pts, default_gate(cfg));

        // Bounds for this realization at the post-averaging noise level.
        channel::ChannelRealization eff = rec.truth;
        eff.noise_var = y.effective_noise_var;
        const auto fim = crlb::fisher_matrix(eff, ctx.probe);
        const auto rep = crlb::crlb_bounds(fim);

        const double spt = std::sqrt(rec.truth.pt);
        for (int t = 0; t < n_true; ++t)
        {
            const auto &tp = rec.truth.paths[static_cast<std::size_t>(t)];
            PathOutcome o;
            o.los = t == 0;
            o.estimate = rec.assignment[static_cast<std::size_t>(t)];
            o.detected = o.estimate >= 0;
            o.coarse_estimate = rec.coarse_assignment[static_cast<std::size_t>(t)];
            o.coarse_detected = o.coarse_estimate >= 0;
            o.sq_error.fill(kNaN);
            auto sq = [](double v) { return v * v; };
            if (o.coarse_detected)
            {
                const auto &cp = rec.coarse.paths[static_cast<std::size_t>(o.coarse_estimate)];
                o.sq_error[static_cast<int>(Metric::theta_preidg)] = sq(tp.theta_deg - cp.theta_hat_deg);
                o.sq_error[static_cast<int>(Metric::tau_preidg)] = sq(tp.tau_symbols - cp.tau_int);
            }
            if (o.detected)
            {
                const auto &rp = rec.refined.paths[static_cast<std::size_t>(o.estimate)];
                const double th_ml = array::aod_from_spatial_frequency(ctx.probe.array, rp.mu);
                const cdouble a_true = spt * tp.alpha;
                o.sq_error[static_cast<int>(Metric::theta_ml)] = sq(tp.theta_deg - th_ml);
                o.sq_error[static_cast<int>(Metric::alpha_ml)] = std::norm((a_true - rp.alpha) / a_true);
                o.sq_error[static_cast<int>(Metric::tau_ml)] = sq(tp.tau_symbols - rp.tau);
            }
            if (rep.invertible)
            {
                o.crlb_ok = true;
                const double var_mu = rep.variances(fim.index(crlb::ParamKind::mu, t));
                o.crlb_theta = crlb::theta_variance(var_mu, ctx.probe.array, tp.theta_deg);
                o.crlb_alpha = crlb::relative_alpha_variance(rep.variances(fim.index(crlb::ParamKind::re_alpha, t)),
                                                             rep.variances(fim.index(crlb::ParamKind::im_alpha, t)),
                                                             spt * tp.alpha);
                o.crlb_tau = rep.variances(fim.index(crlb::ParamKind::tau, t));
            }
            rec.outcomes.push_back(o);
        }
        return rec;
    }

    std::vector<ResultRow> aggregate(const RunConfig &cfg, const std::vector<TrialRecord> &records,
                                     bool only_correct_order)
    {
        std::vector<ResultRow> rows;
        const int n_snr = static_cast<int>(cfg.snr_sweep_db.size());
        for (int s = 0; s < n_snr; ++s)
        {
            double iter_sum = 0.0;
            int iter_n = 0;
            for (const auto &rec : records)
                if (rec.snr_index == s && rec.sage_ran && (!only_correct_order || rec.order_correct))
                {
                    iter_sum += rec.sage_iterations;
                    ++iter_n;
                }
            const double mean_iter = iter_n ? iter_sum / iter_n : kNaN;

            for (int cls = 0; cls < 2; ++cls)
            {
                const bool los = cls == 0;
                for (int mi = 0; mi < kMetricCount; ++mi)
                {
                    const auto metric = static_cast<Metric>(mi);
                    const bool coarse_metric = metric == Metric::theta_preidg || metric == Metric::tau_preidg;
                    double se_sum = 0.0, crlb_sum = 0.0;
                    int instances = 0, detected = 0, crlb_n = 0;
                    for (const auto &rec : records)
                    {
                        if (rec.snr_index != s || (only_correct_order && !rec.order_correct))
                            continue;
                        for (const auto &o : rec.outcomes)
                        {
                            if (o.los != los)
                                continue;
                            ++instances;
                            if (coarse_metric ? o.coarse_detected : o.detected)
                            {
                                ++detected;
                                se_sum += o.sq_error[static_cast<std::size_t>(mi)];
                            }
                            if (o.crlb_ok)
                            {
                                ++crlb_n;
                                if (metric == Metric::theta_preidg || metric == Metric::theta_ml)
                                    crlb_sum += o.crlb_theta;
                                else if (metric == Metric::alpha_ml)
                                    crlb_sum += o.crlb_alpha;
                                else
                                    crlb_sum += o.crlb_tau;
                            }
                        }
                    }
                    ResultRow row;
                    row.run_id = cfg.run_id;
                    row.snr_db = cfg.snr_sweep_db[static_cast<std::size_t>(s)];
                    row.path_class = los ? "LOS" : "NLOS";
                    row.parameter = metric_name(metric);
                    row.rmse = detected ? std::sqrt(se_sum / detected) : kNaN;
                    row.sqrt_crlb_avg = crlb_n ? std::sqrt(crlb_sum / crlb_n) : kNaN;
                    row.trials_used = detected;
                    row.detection_rate = instances ? static_cast<double>(detected) / instances : kNaN;
                    row.mean_sage_iterations = mean_iter;
                    rows.push_back(row);
                }
            }
        }
        return rows;
    }

    SweepResult run_sweep(const RunConfig &cfg, int threads)
    {
        const RunContext ctx(cfg);
        const int n_snr = static_cast<int>(cfg.snr_sweep_db.size());
        const long long total = static_cast<long long>(n_snr) * cfg.trials;
        SweepResult res;
        res.records.resize(static_cast<std::size_t>(total));

        std::atomic<long long> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            for (;;)
            {
                const long long j = next.fetch_add(1);
                if (j >= total)
                    return;
                try
                {
                    res.records[static_cast<std::size_t>(j)] =
                        run_trial(ctx, static_cast<int>(j / cfg.trials), static_cast<int>(j % cfg.trials));
                }
                catch (...)
                {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    next.store(total);
                    return;
                }
            }
        };

        const int n_workers = static_cast<int>(std::clamp<long long>(threads, 1, std::max<long long>(total, 1)));
        if (n_workers == 1)
            worker();
        else
        {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(n_workers));
            for (int i = 0; i < n_workers; ++i)
                pool.emplace_back(worker);
            for (auto &t : pool)
                t.join();
        }
        if (failure)
            std::rethrow_exception(failure);

        res.rows = aggregate(cfg, res.records, false);
        res.conditioned_rows = aggregate(cfg, res.records, true);
        return res;
    }

    void write_csv(std::ostream &os, const std::vector<ResultRow> &rows, int trials)
    {
        os << kCsvSchema << " trials=" << trials << "\n";
        os << kCsvHeader << "\n";
        for (const auto &r : rows)
            os << r.run_id << ',' << num(r.snr_db) << ',' << r.path_class << ',' << r.parameter << ',' << num(r.rmse)
               << ',' << num(r.sqrt_crlb_avg) << ',' << r.trials_used << ',' << num(r.detection_rate) << ','
               << num(r.mean_sage_iterations) << "\n";
    }

    void write_feedback_log(std::ostream &os, const std::vector<TrialRecord> &records)
    {
        os << "trial_id,snr_db,path,tau_int,beam_index,delta_ratio\n";
        for (const auto &rec : records)
            for (std::size_t i = 0; i < rec.coarse.paths.size(); ++i)
            {
                const auto &p = rec.coarse.paths[i];
                os << rec.trial_id << ',' << num(rec.snr_db) << ',' << i << ',' << p.tau_int << ','
                   << p.feedback.beam_index << ',' << num(p.feedback.delta_ratio) << "\n";
            }
    }

    void write_outputs(const RunConfig &cfg, const SweepResult &res)
    {
        const std::string &out = cfg.output_path;
        {
            auto f = open_out(out);
            write_csv(f, res.rows, cfg.trials);
        }
        {
            auto f = open_out(out + ".conditioned.csv");
            write_csv(f, res.conditioned_rows, cfg.trials);
        }
        {
            auto f = open_out(out + ".meta");
            f << "# resolved configuration\n" << dump_config(cfg);
        }
        if (cfg.emit_feedback_log)
        {
            auto f = open_out(out + ".feedback.csv");
            write_feedback_log(f, res.records);
        }
    }

    void print_trial(std::ostream &os, const RunContext &ctx, const TrialRecord &rec)
    {
        auto line = [&](const std::string &label, double theta, double mu, double tau, cdouble alpha) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "  %-10s theta=%9.4f deg  mu=%8.5f  tau=%8.4f  |a|=%9.4f  arg(a)=%8.4f\n",
                          label.c_str(), theta, mu, tau, std::abs(alpha), std::arg(alpha));
            os << buf;
        };
        os << "trial " << rec.trial_id << "  snr " << num(rec.snr_db) << " dB  R=" << rec.truth.paths.size()
           << "  R_hat=" << rec.coarse.r_hat << "  sage iterations=" << rec.sage_iterations
           << (rec.refined.converged ? " (converged)" : "") << "\n";
        const double spt = std::sqrt(rec.truth.pt);
        for (std::size_t t = 0; t < rec.truth.paths.size(); ++t)
        {
            const auto &p = rec.truth.paths[t];
            os << "path " << t << (t == 0 ? " (LOS)" : " (NLOS)") << "\n";
            line("truth", p.theta_deg, wrap_2pi(p.mu), p.tau_symbols, spt * p.alpha);
            const int c = rec.coarse_assignment.empty() ? -1 : rec.coarse_assignment[t];
            if (c < 0)
                os << "  coarse     missed\n";
            else
            {
                const auto &cp = rec.coarse.paths[static_cast<std::size_t>(c)];
                char buf[160];
                std::snprintf(buf, sizeof buf, "  %-10s theta=%9.4f deg  mu=%8.5f  tau=%8d  beam=%d  peak=%.4g\n",
                              "coarse", cp.theta_hat_deg, cp.mu_hat, cp.tau_int, cp.k_index, cp.peak_power);
                os << buf;
            }
            const int e = rec.assignment.empty() ? -1 : rec.assignment[t];
            if (e < 0)
                os << "  refined    missed\n";
            else
            {
                const auto &rp = rec.refined.paths[static_cast<std::size_t>(e)];
                line("refined", array::aod_from_spatial_frequency(ctx.probe.array, rp.mu), rp.mu, rp.tau, rp.alpha);
            }
        }
        int spurious = 0;
        for (int i = 0; i < rec.coarse.r_hat; ++i)
            if (std::find(rec.assignment.begin(), rec.assignment.end(), i) == rec.assignment.end())
                ++spurious;
        if (spurious)
            os << "unmatched estimates: " << spurious << "\n";
    }
}

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

#include "mmest/cli.hpp"

#include "mmest/config.hpp"
#include "mmest/crlb.hpp"
#include "mmest/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace mmest
{
    namespace
    {
        struct CommonOptions
        {
            std::string config = "default";
            std::optional<std::uint64_t> seed;
            std::vector<double> snr;
            std::optional<int> trials;
            std::optional<std::string> out;
            std::optional<int> threads;
        };

        void add_common(CLI::App *cmd, CommonOptions &o, bool sweep_flags)
        {
            cmd->add_option("--config", o.config, "YAML config file, or 'default'");
            cmd->add_option("--seed", o.seed, "master seed");
            cmd->add_option("--snr", o.snr, "SNR list in dB, comma separated")->delimiter(',')->allow_extra_args(false);
            cmd->add_option("--out", o.out, "output path");
            if (sweep_flags)
            {
                cmd->add_option("--trials", o.trials, "trials per SNR point")->check(CLI::PositiveNumber);
                cmd->add_option("--threads", o.threads, "worker threads (overrides THREADS)")->check(CLI::PositiveNumber);
            }
        }

        RunConfig resolve(const CommonOptions &o)
        {
            RunConfig cfg = load_config(o.config);
            if (o.seed)
                cfg.scenario.seed = *o.seed;
            if (!o.snr.empty())
                cfg.snr_sweep_db = o.snr;
            if (o.trials)
                cfg.trials = *o.trials;
            if (o.out)
                cfg.output_path = *o.out;
            cfg.validate();
            return cfg;
        }

        int resolve_threads(const CommonOptions &o)
        {
            if (o.threads)
                return *o.threads;
            if (const char *env = std::getenv("THREADS"))
            {
                char *end = nullptr;
                const long v = std::strtol(env, &end, 10);
                if (end == env || *end != '\0' || v < 1)
                    throw ConfigError("THREADS must be a positive integer");
                return static_cast<int>(v);
            }
            return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        }

        void cmd_run(const CommonOptions &o, std::ostream &out)
        {
            const RunConfig cfg = resolve(o);
            const int threads = resolve_threads(o);
            const auto res = harness::run_sweep(cfg, threads);
            harness::write_outputs(cfg, res);
            out << "wrote " << res.rows.size() << " rows to " << cfg.output_path << "\n";
        }

        void cmd_lut(const CommonOptions &o, std::ostream &out)
        {
            const RunConfig cfg = resolve(o);
            const auto lut = preidg::build_lut(cfg.array, cfg.preidg.k_points);
            auto emit = [&](std::ostream &os) {
                os << "l,mu_offset,ratio\n";
                char buf[96];
                for (int l = 0; l <= lut.k_points; ++l)
                {
                    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g\n", l, l * lut.delta_mu,
                                  lut.ratios[static_cast<std::size_t>(l)]);
                    os << buf;
                }
            };
            if (o.out)
            {
                std::ofstream f(*o.out);
                if (!f)
                    throw std::runtime_error("cannot write '" + *o.out + "'");
                emit(f);
            }
            else
                emit(out);
        }

        void cmd_crlb(const CommonOptions &o, std::ostream &out)
        {
            const RunConfig cfg = resolve(o);
            const harness::RunContext ctx(cfg);
            const double snr = cfg.snr_sweep_db.front();
            const auto real = harness::draw_trial_realization(ctx, 0, snr);
            const auto fim = crlb::fisher_matrix(real, ctx.probe);
            const auto rep = crlb::crlb_bounds(fim);
            out << "# snr_db=" << snr << " paths=" << real.paths.size() << " condition=" << rep.condition_number
                << (rep.invertible ? "" : " (singular)") << "\n";
            out << "path,parameter,truth,sqrt_crlb\n";
            static const char *names[] = {"sqrtpt_re_alpha", "sqrtpt_im_alpha", "mu", "tau"};
            const double spt = std::sqrt(real.pt);
            for (int i = 0; i < fim.f.rows(); ++i)
            {
                const auto pi = fim.parameter(i);
                const auto &p = real.paths[static_cast<std::size_t>(pi.path)];
                double truth = 0.0;
                switch (pi.kind)
                {
                case crlb::ParamKind::re_alpha:
                    truth = spt * p.alpha.real();
                    break;
                case crlb::ParamKind::im_alpha:
                    truth = spt * p.alpha.imag();
                    break;
                case crlb::ParamKind::mu:
                    truth = p.mu;
                    break;
                case crlb::ParamKind::tau:
                    truth = p.tau_symbols;
                    break;
                }
                char buf[128];
                std::snprintf(buf, sizeof buf, "%d,%s,%.9g,%s\n", pi.path, names[static_cast<int>(pi.kind)], truth,
                              rep.invertible ? std::to_string(rep.bounds(i)).c_str() : "nan");
                out << buf;
            }
        }

        void cmd_demo(const CommonOptions &o, std::ostream &out)
        {
            RunConfig cfg = resolve(o);
            const harness::RunContext ctx(cfg);
            const auto rec = harness::run_trial(ctx, 0, 0);
            harness::print_trial(out, ctx, rec);
        }
    }

    int cli_entry(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"mmest: coarse-to-fine mmWave channel parameter estimation"};
        app.name("mmest");
        app.require_subcommand(0, 1);

        CommonOptions run_o, lut_o, crlb_o, demo_o;
        auto *run = app.add_subcommand("run", "Monte-Carlo sweep, writes CSV");
        add_common(run, run_o, true);
        auto *lut = app.add_subcommand("lut", "dump the beam-ratio lookup table as CSV");
        add_common(lut, lut_o, false);
        auto *crlb = app.add_subcommand("crlb", "bounds for one drawn realization");
        add_common(crlb, crlb_o, false);
        auto *demo = app.add_subcommand("demo", "one verbose trial");
        add_common(demo, demo_o, false);

        if (args.empty())
        {
            out << app.help();
            return kExitConfig;
        }

        std::vector<std::string> rev(args.rbegin(), args.rend());
        try
        {
            app.parse(rev);
        }
        catch (const CLI::CallForHelp &)
        {
            out << app.help();
            return kExitOk;
        }
        catch (const CLI::CallForAllHelp &)
        {
            out << app.help("", CLI::AppFormatMode::All);
            return kExitOk;
        }
        catch (const CLI::ParseError &e)
        {
            err << "error: " << e.what() << "\n" << app.help();
            return kExitConfig;
        }

        try
        {
            if (run->parsed())
                cmd_run(run_o, out);
            else if (lut->parsed())
                cmd_lut(lut_o, out);
            else if (crlb->parsed())
                cmd_crlb(crlb_o, out);
            else if (demo->parsed())
                cmd_demo(demo_o, out);
            else
            {
                out << app.help();
                return kExitConfig;
            }
        }
        catch (const ConfigError &e)
        {
            err << "config error: " << e.what() << "\n";
            return kExitConfig;
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << "\n";
            return kExitRuntime;
        }
        return kExitOk;
    }

    int cli_entry(int argc, const char *const *argv)
    {
        std::vector<std::string> args;
        for (int i = 1; i < argc; ++i)
            args.emplace_back(argv[i]);
        return cli_entry(args, std::cout, std::cerr);
    }
}

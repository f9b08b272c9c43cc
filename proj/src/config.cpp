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

#include "mmest/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mmest
{
    namespace
    {
        class Reader
        {
        public:
            explicit Reader(std::string source) : source_(std::move(source)) {}

            [[noreturn]] void fail(const YAML::Node &node, const std::string &msg) const
            {
                const int line = node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
                throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
            }

            template <typename T>
            T scalar(const YAML::Node &node, const std::string &key) const
            {
                if (!node.IsScalar())
                    fail(node, "'" + key + "' must be a scalar");
                try
                {
                    return node.as<T>();
                }
                catch (const YAML::Exception &)
                {
                    fail(node, "'" + key + "' has an invalid value '" + node.Scalar() + "'");
                }
            }

            std::pair<double, double> range(const YAML::Node &node, const std::string &key) const
            {
                if (!node.IsSequence() || node.size() != 2)
                    fail(node, "'" + key + "' must be a two-element list [lo, hi]");
                return {scalar<double>(node[0], key), scalar<double>(node[1], key)};
            }

            std::vector<double> list(const YAML::Node &node, const std::string &key) const
            {
                if (!node.IsSequence())
                    fail(node, "'" + key + "' must be a list");
                std::vector<double> out;
                for (const auto &item : node)
                    out.push_back(scalar<double>(item, key));
                return out;
            }

            using Handler = std::function<void(const YAML::Node &)>;

            void section(const YAML::Node &node, const std::string &name, const std::map<std::string, Handler> &keys) const
            {
                if (!node.IsMap())
                    fail(node, "section '" + name + "' must be a mapping");
                for (const auto &kv : node)
                {
                    const std::string key = kv.first.as<std::string>();
                    auto it = keys.find(key);
                    if (it == keys.end())
                        fail(kv.first, "unknown key '" + key + "' in section '" + name + "'");
                    it->second(kv.second);
                }
            }

        private:
            std::string source_;
        };

        // shortest text that reads back to the same double
        std::string fmt(double v)
        {
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, v);
            return std::string(buf, res.ptr);
        }
    }

    void RunConfig::finalize()
    {
        scenario.m = array.m;
        cazac.ts = scenario.symbol_period();
        array = array::ArrayConfig(array.m, array.spacing_over_lambda);
        validate();
    }

    void RunConfig::validate() const
    {
        scenario.validate();
        array.validate();
        cazac.validate();
        sage.validate();
        preidg.validate();
        if (scenario.m != array.m)
            throw ConfigError("RunConfig: scenario and array disagree on M");
        if (array.m < 2)
            throw ConfigError("RunConfig: at least two beams are required");
        if (trials < 1)
            throw ConfigError("RunConfig: trials must be at least 1");
        if (snr_sweep_db.empty())
            throw ConfigError("RunConfig: snr_sweep_db must not be empty");
        for (double s : snr_sweep_db)
            if (!std::isfinite(s))
                throw ConfigError("RunConfig: snr_sweep_db entries must be finite");
        if (repetitions_per_beam < 1)
            throw ConfigError("RunConfig: repetitions_per_beam must be at least 1");
        if (!(scenario.noise_var > 0.0))
            throw ConfigError("RunConfig: noise_var must be positive for a sweep");
        if (run_id.empty() || run_id.find_first_of(",\"\n\r") != std::string::npos)
            throw ConfigError("RunConfig: run_id must be non-empty and free of commas, quotes and newlines");
    }

    RunConfig default_config()
    {
        RunConfig cfg;
        cfg.finalize();
        return cfg;
    }

    RunConfig parse_config(const std::string &text, const std::string &source)
    {
        YAML::Node root;
        try
        {
            root = YAML::Load(text);
        }
        catch (const YAML::ParserException &e)
        {
            throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
        }

        RunConfig cfg;
        if (root.IsNull())
        {
            cfg.finalize();
            return cfg;
        }
        const Reader rd(source);
        if (!root.IsMap())
            rd.fail(root, "top level must be a mapping");

        int array_m = cfg.array.m;
        double spacing = cfg.array.spacing_over_lambda;
        auto &sc = cfg.scenario;

        const std::map<std::string, Reader::Handler> top = {
            {"run_id", [&](const YAML::Node &n) { cfg.run_id = rd.scalar<std::string>(n, "run_id"); }},
            {"scenario", [&](const YAML::Node &n) {
                 rd.section(n, "scenario",
                            {{"bandwidth_hz", [&](const YAML::Node &v) { sc.bandwidth_hz = rd.scalar<double>(v, "bandwidth_hz"); }},
                             {"carrier_hz", [&](const YAML::Node &v) { sc.carrier_hz = rd.scalar<double>(v, "carrier_hz"); }},
                             {"n_nlos", [&](const YAML::Node &v) { sc.n_nlos = rd.scalar<int>(v, "n_nlos"); }},
                             {"d_los_range_m", [&](const YAML::Node &v) { sc.d_los_range_m = rd.range(v, "d_los_range_m"); }},
                             {"delta_nlos_range_m", [&](const YAML::Node &v) { sc.delta_nlos_range_m = rd.range(v, "delta_nlos_range_m"); }},
                             {"ple_los", [&](const YAML::Node &v) { sc.ple_los = rd.scalar<double>(v, "ple_los"); }},
                             {"ple_nlos", [&](const YAML::Node &v) { sc.ple_nlos = rd.scalar<double>(v, "ple_nlos"); }},
                             {"d0_m", [&](const YAML::Node &v) { sc.d0_m = rd.scalar<double>(v, "d0_m"); }},
                             {"theta_range_deg", [&](const YAML::Node &v) { sc.theta_range_deg = rd.range(v, "theta_range_deg"); }},
                             {"noise_var", [&](const YAML::Node &v) { sc.noise_var = rd.scalar<double>(v, "noise_var"); }},
                             {"seed", [&](const YAML::Node &v) { sc.seed = rd.scalar<std::uint64_t>(v, "seed"); }}});
             }},
            {"array", [&](const YAML::Node &n) {
                 rd.section(n, "array",
                            {{"m", [&](const YAML::Node &v) { array_m = rd.scalar<int>(v, "m"); }},
                             {"spacing_over_lambda", [&](const YAML::Node &v) { spacing = rd.scalar<double>(v, "spacing_over_lambda"); }}});
             }},
            {"cazac", [&](const YAML::Node &n) {
                 rd.section(n, "cazac",
                            {{"l", [&](const YAML::Node &v) { cfg.cazac.l = rd.scalar<int>(v, "l"); }},
                             {"rolloff", [&](const YAML::Node &v) { cfg.cazac.rolloff = rd.scalar<double>(v, "rolloff"); }},
                             {"pulse_halfwidth", [&](const YAML::Node &v) { cfg.cazac.pulse_halfwidth = rd.scalar<int>(v, "pulse_halfwidth"); }}});
             }},
            {"sage", [&](const YAML::Node &n) {
                 auto &s = cfg.sage;
                 rd.section(n, "sage",
                            {{"beta", [&](const YAML::Node &v) { s.beta = rd.scalar<double>(v, "beta"); }},
                             {"gamma_stop", [&](const YAML::Node &v) { s.gamma_stop = rd.scalar<double>(v, "gamma_stop"); }},
                             {"max_iterations", [&](const YAML::Node &v) { s.max_iterations = rd.scalar<int>(v, "max_iterations"); }},
                             {"tau_window_symbols", [&](const YAML::Node &v) { s.tau_window_symbols = rd.scalar<double>(v, "tau_window_symbols"); }},
                             {"mu_window", [&](const YAML::Node &v) { s.mu_window = rd.scalar<double>(v, "mu_window"); }},
                             {"grid_points", [&](const YAML::Node &v) { s.grid_points = rd.scalar<int>(v, "grid_points"); }},
                             {"refine_tol", [&](const YAML::Node &v) { s.refine_tol = rd.scalar<double>(v, "refine_tol"); }}});
             }},
            {"preidg", [&](const YAML::Node &n) {
                 auto &p = cfg.preidg;
                 rd.section(n, "preidg",
                            {{"k_points", [&](const YAML::Node &v) { p.k_points = rd.scalar<int>(v, "k_points"); }},
                             {"p_fa", [&](const YAML::Node &v) { p.p_fa = rd.scalar<double>(v, "p_fa"); }},
                             {"v", [&](const YAML::Node &v) { p.v = rd.scalar<double>(v, "v"); }},
                             {"merge_mu_tol", [&](const YAML::Node &v) { p.merge_mu_tol = rd.scalar<double>(v, "merge_mu_tol"); }}});
             }},
            {"run", [&](const YAML::Node &n) {
                 rd.section(n, "run",
                            {{"snr_sweep_db", [&](const YAML::Node &v) { cfg.snr_sweep_db = rd.list(v, "snr_sweep_db"); }},
                             {"trials", [&](const YAML::Node &v) { cfg.trials = rd.scalar<int>(v, "trials"); }},
                             {"repetitions_per_beam", [&](const YAML::Node &v) { cfg.repetitions_per_beam = rd.scalar<int>(v, "repetitions_per_beam"); }},
                             {"output_path", [&](const YAML::Node &v) { cfg.output_path = rd.scalar<std::string>(v, "output_path"); }},
                             {"emit_feedback_log", [&](const YAML::Node &v) { cfg.emit_feedback_log = rd.scalar<bool>(v, "emit_feedback_log"); }}});
             }},
        };
        rd.section(root, "<top>", top);

        // The array constructor validates m before the full check below.
        if (array_m < 1)
            throw ConfigError(source + ": array.m must be a positive integer");
        if (!(spacing > 0.0))
            throw ConfigError(source + ": array.spacing_over_lambda must be positive");
        cfg.array = array::ArrayConfig(array_m, spacing);
        try
        {
            cfg.finalize();
        }
        catch (const ConfigError &e)
        {
            throw ConfigError(source + ": " + e.what());
        }
        return cfg;
    }

    RunConfig load_config(const std::string &path)
    {
        if (path == "default")
            return default_config();
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str(), path);
    }

    std::string dump_config(const RunConfig &cfg)
    {
        const auto &sc = cfg.scenario;
        auto range = [](const std::pair<double, double> &r) { return "[" + fmt(r.first) + ", " + fmt(r.second) + "]"; };
        std::ostringstream os;
        os << "run_id: " << cfg.run_id << "\n";
        os << "scenario:\n"
           << "  bandwidth_hz: " << fmt(sc.bandwidth_hz) << "\n"
           << "  carrier_hz: " << fmt(sc.carrier_hz) << "\n"
           << "  n_nlos: " << sc.n_nlos << "\n"
           << "  d_los_range_m: " << range(sc.d_los_range_m) << "\n"
           << "  delta_nlos_range_m: " << range(sc.delta_nlos_range_m) << "\n"
           << "  ple_los: " << fmt(sc.ple_los) << "\n"
           << "  ple_nlos: " << fmt(sc.ple_nlos) << "\n"
           << "  d0_m: " << fmt(sc.d0_m) << "\n"
           << "  theta_range_deg: " << range(sc.theta_range_deg) << "\n"
           << "  noise_var: " << fmt(sc.noise_var) << "\n"
           << "  seed: " << sc.seed << "\n";
        os << "array:\n"
           << "  m: " << cfg.array.m << "\n"
           << "  spacing_over_lambda: " << fmt(cfg.array.spacing_over_lambda) << "\n";
        os << "cazac:\n"
           << "  l: " << cfg.cazac.l << "\n"
           << "  rolloff: " << fmt(cfg.cazac.rolloff) << "\n"
           << "  pulse_halfwidth: " << cfg.cazac.pulse_halfwidth << "\n";
        os << "sage:\n"
           << "  beta: " << fmt(cfg.sage.beta) << "\n"
           << "  gamma_stop: " << fmt(cfg.sage.gamma_stop) << "\n"
           << "  max_iterations: " << cfg.sage.max_iterations << "\n"
           << "  tau_window_symbols: " << fmt(cfg.sage.tau_window_symbols) << "\n"
           << "  mu_window: " << fmt(cfg.sage.mu_window) << "\n"
           << "  grid_points: " << cfg.sage.grid_points << "\n"
           << "  refine_tol: " << fmt(cfg.sage.refine_tol) << "\n";
        os << "preidg:\n"
           << "  k_points: " << cfg.preidg.k_points << "\n"
           << "  p_fa: " << fmt(cfg.preidg.p_fa) << "\n"
           << "  v: " << fmt(cfg.preidg.v) << "\n"
           << "  merge_mu_tol: " << fmt(cfg.preidg.merge_mu_tol) << "\n";
        os << "run:\n"
           << "  snr_sweep_db: [";
        for (std::size_t i = 0; i < cfg.snr_sweep_db.size(); ++i)
            os << (i ? ", " : "") << fmt(cfg.snr_sweep_db[i]);
        os << "]\n"
           << "  trials: " << cfg.trials << "\n"
           << "  repetitions_per_beam: " << cfg.repetitions_per_beam << "\n"
           << "  output_path: \"" << cfg.output_path << "\"\n"
           << "  emit_feedback_log: " << (cfg.emit_feedback_log ? "true" : "false") << "\n";
        return os.str();
    }
}

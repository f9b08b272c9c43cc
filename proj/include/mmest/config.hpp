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
#include "mmest/preidg.hpp"
#include "mmest/sage.hpp"
#include "mmest/waveform.hpp"

#include <string>
#include <vector>

namespace mmest
{
    struct RunConfig
    {
        std::string run_id = "mmest";
        channel::ScenarioConfig scenario;
        array::ArrayConfig array;
        waveform::CazacConfig cazac;
        sage::SageConfig sage;
        preidg::PreidgConfig preidg;
        std::vector<double> snr_sweep_db{-10.0, 0.0, 10.0, 20.0};
        int trials = 1000;
        int repetitions_per_beam = 1;
        std::string output_path = "mmest_results.csv";
        bool emit_feedback_log = false;

        /// Pulls derived fields into agreement (M, symbol period) and validates everything.
        void finalize();
        void validate() const;
    };

    /// Defaults for every field.
    RunConfig default_config();

    /// Parses YAML text. Unknown keys and malformed values raise ConfigError with
    /// "<source>:<line>: ..." messages.
    RunConfig parse_config(const std::string &text, const std::string &source = "<config>");

    /// Reads a YAML file; the literal path "default" yields default_config().
    RunConfig load_config(const std::string &path);

    /// Fully resolved configuration as YAML (round-trips through parse_config).
    std::string dump_config(const RunConfig &cfg);
}

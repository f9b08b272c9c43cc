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

#include "mmest/config.hpp"
#include "mmest/crlb.hpp"
#include "mmest/preidg.hpp"
#include "mmest/sage.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

// Monte-Carlo driver. Each (SNR point, trial) is an independent job:
//   scenario stream  = f(seed, trial)            shared by all SNR points
//   noise stream     = f(seed, trial, snr index)
// so results do not depend on scheduling or worker count.

namespace mmest::harness
{
    inline constexpr const char *kCsvSchema = "# mmest-results v1";
    inline constexpr const char *kCsvHeader =
        "run_id,snr_db,path_class,parameter,rmse,sqrt_crlb_avg,trials_used,detection_rate,mean_sage_iterations";

    enum class Metric
    {
        theta_preidg = 0,
        theta_ml,
        alpha_ml,
        tau_preidg,
        tau_ml
    };
    inline constexpr int kMetricCount = 5;
    const char *metric_name(Metric m);

    /// Delay and spatial-frequency summary used for matching.
    struct PathPoint
    {
        double tau = 0.0;
        double mu = 0.0;
    };

    struct MatchGate
    {
        double max_tau = 1.0; // symbols
        double max_mu = 0.0;  // radians; <= 0 disables
    };

    /// Greedy truth -> estimate assignment, closest first in (dtau / max_tau)^2 + (dmu / max_mu)^2
    /// with wrapped dmu (pi stands in for a disabled angle gate).
    /// Entry t is the matched estimate index or -1.
    std::vector<int> match_paths(const std::vector<PathPoint> &truth, const std::vector<PathPoint> &estimates,
                                 const MatchGate &gate = {});

    struct PathOutcome
    {
        bool los = false;
        bool detected = false;        // matched by a refined estimate
        int estimate = -1;
        bool coarse_detected = false; // matched by a coarse estimate on its own
        int coarse_estimate = -1;
        /// PREIDG entries are valid when coarse_detected, the rest when detected.
        std::array<double, kMetricCount> sq_error{};
        bool crlb_ok = false;
        double crlb_theta = 0.0; // deg^2
        double crlb_alpha = 0.0; // relative
        double crlb_tau = 0.0;   // symbols^2
    };

    struct TrialRecord
    {
        int trial_id = 0;
        int snr_index = 0;
        double snr_db = 0.0;
        channel::ChannelRealization truth;
        preidg::CoarseEstimate coarse;
        sage::RefinedEstimate refined;
        bool sage_ran = false;
        bool sage_failed = false;
        std::vector<int> assignment;        // truth -> refined estimate
        std::vector<int> coarse_assignment; // truth -> coarse estimate
        std::vector<PathOutcome> outcomes;  // one per true path
        int sage_iterations = 0;
        bool order_correct = false; // r_hat == R
    };

    struct ResultRow
    {
        std::string run_id;
        double snr_db = 0.0;
        std::string path_class; // LOS or NLOS
        std::string parameter;
        double rmse = 0.0;
        double sqrt_crlb_avg = 0.0;
        int trials_used = 0;
        double detection_rate = 0.0;
        double mean_sage_iterations = 0.0;
    };

    struct SweepResult
    {
        std::vector<TrialRecord> records; // sorted by (snr index, trial id)
        std::vector<ResultRow> rows;
        std::vector<ResultRow> conditioned_rows; // only trials with r_hat == R
    };

    /// Shared immutable inputs for all trials of a run.
    struct RunContext
    {
        RunConfig cfg;
        channel::Probe probe;
        preidg::Lut lut;

        explicit RunContext(const RunConfig &c);
    };

    channel::ChannelRealization draw_trial_realization(const RunContext &ctx, int trial_id, double snr_db);

    TrialRecord run_trial(const RunContext &ctx, int snr_index, int trial_id);

    /// Runs every (SNR, trial) job on `threads` workers.
    SweepResult run_sweep(const RunConfig &cfg, int threads);

    /// Per (SNR, class, parameter) RMSE over matched paths and sqrt of the mean CRLB.
    std::vector<ResultRow> aggregate(const RunConfig &cfg, const std::vector<TrialRecord> &records,
                                     bool only_correct_order);

    void write_csv(std::ostream &os, const std::vector<ResultRow> &rows, int trials);
    void write_feedback_log(std::ostream &os, const std::vector<TrialRecord> &records);

    /// Writes <out>, <out>.meta, <out>.conditioned.csv and, if enabled, <out>.feedback.csv.
    void write_outputs(const RunConfig &cfg, const SweepResult &res);

    /// Human-readable truth / coarse / refined table for one trial.
    void print_trial(std::ostream &os, const RunContext &ctx, const TrialRecord &rec);
}

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

#include <iosfwd>
#include <string>
#include <vector>

namespace mmest
{
    inline constexpr int kExitOk = 0;
    inline constexpr int kExitConfig = 1;
    inline constexpr int kExitRuntime = 2;

    /// Subcommands: run, lut, crlb, demo. Returns 0 on success, 1 on configuration or usage
    /// errors, 2 on runtime failures.
    int cli_entry(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

    int cli_entry(int argc, const char *const *argv);
}

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

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mmest
{
    using cdouble = std::complex<double>;
    using CVector = Eigen::VectorXcd;
    using CMatrix = Eigen::MatrixXcd;
    using RVector = Eigen::VectorXd;
    using RMatrix = Eigen::MatrixXd;

    inline constexpr double kPi = std::numbers::pi;
    inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
    inline constexpr double kSpeedOfLight = 3.0e8; // m/s, rounded as in the scenario definition
    inline constexpr cdouble kJ{0.0, 1.0};

    /// Invalid or inconsistent configuration (bad sizes, out-of-range knobs).
    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    /// A closed-form update hit a vanishing denominator or non-finite data.
    class NumericalError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Wraps an angle into [0, 2*pi).
    double wrap_2pi(double x);

    /// Wraps an angle into (-pi, pi].
    double wrap_pi(double x);

    /// True when n is a positive power of two.
    bool is_power_of_two(long long n);

    /// log2 of a power of two.
    int ilog2(long long n);
}

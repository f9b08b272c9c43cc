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


#include "mmest/crlb.hpp"
#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace mmest;
using Catch::Approx;
using crlb::ParamKind;

namespace
{
    const channel::Probe kProbe{array::ArrayConfig(16), waveform::CazacConfig{}};
}

TEST_CASE("analytic FIM matches finite differences", "[crlb][property]")
{
    std::mt19937_64 g(2024);
    for (int t = 0; t < 50; ++t)
    {
        const int r = 1 + t % 3;
        const auto real = oracle::random_realization(g, r, 1.0, 14.0);
        const auto f = crlb::fisher_matrix(real, kProbe);
        const RMatrix ref = oracle::finite_difference_fisher(real, kProbe);
        REQUIRE(f.paths == r);
        REQUIRE((f.f - ref).norm() / ref.norm() < 1e-3);
        REQUIRE((f.f - f.f.transpose()).norm() == 0.0);
    }
}

TEST_CASE("single on-grid path gives the textbook gain information", "[crlb]")
{
    channel::ChannelRealization real;
    real.pt = 1.0;
    real.noise_var = 1.0;
    channel::PathParams p;
    p.mu = kProbe.array.beam_phases[3];
    p.tau_symbols = 0.0;
    real.paths.push_back(p);
    const auto f = crlb::fisher_matrix(real, kProbe);
    // 2 tr{C^H A^H A C} / sigma^2 = 2 M L
    CHECK(f.f(0, 0) == Approx(512.0).epsilon(1e-12));
    CHECK(f.f(1, 1) == Approx(512.0).epsilon(1e-12));
    CHECK(f.f(0, 1) == Approx(0.0).margin(1e-9));
    real.noise_var = 4.0;
    CHECK(crlb::fisher_matrix(real, kProbe).f(0, 0) == Approx(128.0));
}

TEST_CASE("parameter layout round trips", "[crlb]")
{
    crlb::FisherMatrix f;
    f.paths = 3;
    f.f = RMatrix::Identity(12, 12);
    for (int i = 0; i < 12; ++i)
    {
        const auto pi = f.parameter(i);
        REQUIRE(f.index(pi.kind, pi.path) == i);
    }
    CHECK(f.index(ParamKind::re_alpha, 0) == 0);
    CHECK(f.index(ParamKind::im_alpha, 2) == 5);
    CHECK(f.index(ParamKind::mu, 1) == 7);
    CHECK(f.index(ParamKind::tau, 2) == 11);
    CHECK_THROWS_AS(f.index(ParamKind::mu, 3), std::out_of_range);
    CHECK_THROWS_AS(f.index(ParamKind::mu, -1), std::out_of_range);
    CHECK_THROWS_AS(f.parameter(12), std::out_of_range);
    CHECK_THROWS_AS(f.parameter(-1), std::out_of_range);
}

TEST_CASE("angle and delay bounds scale as one over root SNR", "[crlb][property]")
{
    std::mt19937_64 g(7);
    for (int t = 0; t < 10; ++t)
    {
        auto real = oracle::random_realization(g, 3, 2.0, 13.0, 1.0);
        const auto lo = crlb::crlb_bounds(crlb::fisher_matrix(real, kProbe));
        real.pt = 100.0;
        const auto hi = crlb::crlb_bounds(crlb::fisher_matrix(real, kProbe));
        REQUIRE(lo.invertible);
        REQUIRE(hi.invertible);
        for (int i = 0; i < 12; ++i)
        {
            const bool geometric = i >= 6;
            const double expect = geometric ? lo.bounds(i) / 10.0 : lo.bounds(i);
            REQUIRE(hi.bounds(i) == Approx(expect).epsilon(1e-6));
        }
    }
}

TEST_CASE("bounds are non-negative and match a direct inverse", "[crlb]")
{
    std::mt19937_64 g(8);
    const auto real = oracle::random_realization(g, 2, 3.0, 12.0);
    const auto f = crlb::fisher_matrix(real, kProbe);
    const auto rep = crlb::crlb_bounds(f);
    REQUIRE(rep.invertible);
    const RMatrix inv = f.f.inverse();
    for (int i = 0; i < 8; ++i)
    {
        CHECK(rep.bounds(i) >= 0.0);
        CHECK(rep.variances(i) == Approx(inv(i, i)).epsilon(1e-8));
        CHECK(rep.bounds(i) == Approx(std::sqrt(inv(i, i))).epsilon(1e-8));
    }
    CHECK(rep.condition_number >= 1.0);
}

TEST_CASE("coincident paths are flagged singular", "[crlb]")
{
    std::mt19937_64 g(9);
    auto real = oracle::random_realization(g, 2, 3.0, 12.0);
    real.paths[1].mu = real.paths[0].mu;
    real.paths[1].tau_symbols = real.paths[0].tau_symbols;
    const auto rep = crlb::crlb_bounds(crlb::fisher_matrix(real, kProbe));
    CHECK_FALSE(rep.invertible);
    CHECK(rep.bounds.size() == 0);
    CHECK(rep.condition_number >= 1e12);
    // a looser gate still refuses an exactly rank-deficient matrix
    crlb::FisherMatrix z;
    z.paths = 1;
    z.f = RMatrix::Zero(4, 4);
    z.f(0, 0) = 1.0;
    CHECK_FALSE(crlb::crlb_bounds(z, 1e300).invertible);
}

TEST_CASE("AoD variance by the delta method", "[crlb]")
{
    const array::ArrayConfig arr(16);
    for (double th : {-55.0, -20.0, 0.0, 33.0})
    {
        const double mu = array::spatial_frequency(arr, th);
        const double h = 1e-6;
        const double dth = (array::aod_from_spatial_frequency(arr, mu + h) -
                            array::aod_from_spatial_frequency(arr, mu - h)) /
                           (2 * h);
        CHECK(crlb::theta_variance(2.5e-4, arr, th) == Approx(2.5e-4 * dth * dth).epsilon(1e-6));
    }
}

TEST_CASE("relative gain variance", "[crlb]")
{
    CHECK(crlb::relative_alpha_variance(0.01, 0.03, {2.0, 0.0}) == Approx(0.01));
    CHECK(crlb::relative_alpha_variance(0.5, 0.5, {0.0, -1.0}) == Approx(1.0));
    CHECK_THROWS_AS(crlb::relative_alpha_variance(0.1, 0.1, {0.0, 0.0}), NumericalError);
}

TEST_CASE("Monte-Carlo averaged bound", "[crlb]")
{
    std::mt19937_64 g(10);
    std::vector<channel::ChannelRealization> reals;
    for (int t = 0; t < 6; ++t)
        reals.push_back(oracle::random_realization(g, 2, 3.0, 12.0, 123.0)); // pt is reset from the SNR
    const auto avg = crlb::crlb_monte_carlo_average(reals, kProbe, 10.0);
    CHECK(avg.used == 6);
    CHECK(avg.skipped == 0);
    RVector sum = RVector::Zero(8);
    for (auto r : reals)
    {
        r.pt = 10.0;
        sum += crlb::crlb_bounds(crlb::fisher_matrix(r, kProbe)).variances;
    }
    for (int i = 0; i < 8; ++i)
        CHECK(avg.sqrt_mean_variance(i) == Approx(std::sqrt(sum(i) / 6.0)).epsilon(1e-10));

    // singular members are skipped
    auto bad = reals.front();
    bad.paths[1].mu = bad.paths[0].mu;
    bad.paths[1].tau_symbols = bad.paths[0].tau_symbols;
    reals.push_back(bad);
    const auto avg2 = crlb::crlb_monte_carlo_average(reals, kProbe, 10.0);
    CHECK(avg2.used == 6);
    CHECK(avg2.skipped == 1);
    CHECK_THROWS_AS(crlb::crlb_monte_carlo_average({bad}, kProbe, 10.0), NumericalError);
    CHECK_THROWS_AS(crlb::crlb_monte_carlo_average({}, kProbe, 10.0), ConfigError);
    auto three = oracle::random_realization(g, 3, 3.0, 12.0);
    CHECK_THROWS_AS(crlb::crlb_monte_carlo_average({reals.front(), three}, kProbe, 10.0), ConfigError);
}

TEST_CASE("crlb error paths", "[crlb][error]")
{
    channel::ChannelRealization empty;
    CHECK_THROWS_AS(crlb::model_jacobian(empty, kProbe), ConfigError);
    std::mt19937_64 g(11);
    auto real = oracle::random_realization(g, 1, 0.0, 0.0);
    real.paths[0].mu = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(crlb::model_jacobian(real, kProbe), ConfigError);
    const auto jac = crlb::model_jacobian(oracle::random_realization(g, 1, 0.0, 0.0), kProbe);
    CHECK(jac.size() == 4);
    CHECK_THROWS_AS(crlb::fisher_from_jacobian(jac, 0.0), ConfigError);
    CHECK_THROWS_AS(crlb::fisher_from_jacobian({jac[0], jac[1], jac[2]}, 1.0), ConfigError);
    CHECK_THROWS_AS(crlb::fisher_from_jacobian({}, 1.0), ConfigError);

    crlb::FisherMatrix nan;
    nan.paths = 1;
    nan.f = RMatrix::Identity(4, 4);
    nan.f(1, 2) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(crlb::crlb_bounds(nan), std::invalid_argument);
    crlb::FisherMatrix rect;
    rect.f = RMatrix::Zero(3, 4);
    CHECK_THROWS_AS(crlb::crlb_bounds(rect), std::invalid_argument);
    crlb::FisherMatrix none;
    CHECK_THROWS_AS(crlb::crlb_bounds(none), std::invalid_argument);
}

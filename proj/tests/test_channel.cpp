// SPDX-License-Identifier: Apache-2.0
//
// jcesd - link-level simulation and semi-blind joint channel estimation
// and signal detection for downlink multi-user MIMO-OFDM
// Copyright (C) 2026 the jcesd authors
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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "jcesd/channel.hpp"
#include "jcesd/precoding.hpp"
#include "jcesd/rng.hpp"

namespace {

using cxd = std::complex<double>;

double sinc(double x) {
    if (x == 0.0)
        return 1.0;
    return std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
}

arma::cx_mat random_cx(int rows, int cols, jcesd::Rng& rng) {
    arma::cx_mat m(rows, cols);
    for (auto& v : m)
        v = rng.cgaussian();
    return m;
}

// Identity hybrid chain: RF and baseband stages all square identities.
jcesd::precoding::PrecoderSet identity_chain(int n, int num_users) {
    jcesd::precoding::PrecoderSet set;
    set.f_rf = arma::cx_mat(n, n, arma::fill::eye);
    set.w_rf = arma::cx_mat(n, n, arma::fill::eye);
    set.w_bb = arma::cx_mat(n, n, arma::fill::eye);
    set.f_bb.assign(num_users, arma::cx_mat(n, n, arma::fill::eye));
    set.power_factor = 1.0;
    return set;
}

double total_tap_energy(const jcesd::channel::DelayTapChannel& h) {
    double e = 0.0;
    for (const auto& tap : h.taps)
        e += std::pow(arma::norm(tap, "fro"), 2);
    return e;
}

} // namespace

TEST_CASE("steering_vector_known_values") {
    // Single element: trivially [1].
    const arma::cx_vec one = jcesd::channel::steering_vector(1, 1, 0.7, 1.3, 0.5);
    REQUIRE(one.n_elem == 1);
    CHECK(std::abs(one(0) - cxd(1.0, 0.0)) <= 1e-15);

    // Broadside: zero phase ramp, uniform amplitude.
    const arma::cx_vec bs = jcesd::channel::steering_vector(2, 1, 0.0, 0.9, 0.5);
    REQUIRE(bs.n_elem == 2);
    CHECK(std::abs(bs(0) - cxd(1.0 / std::numbers::sqrt2, 0.0)) <= 1e-15);
    CHECK(std::abs(bs(1) - cxd(1.0 / std::numbers::sqrt2, 0.0)) <= 1e-15);

    // 2x2 planar array, hand-evaluated separable ramp.
    const double el = std::numbers::pi / 4.0;
    const double az = std::numbers::pi / 3.0;
    const double sp = 0.5;
    const double u = std::sin(el) * std::cos(az);
    const double v = std::sin(el) * std::sin(az);
    const arma::cx_vec a = jcesd::channel::steering_vector(2, 2, el, az, sp);
    REQUIRE(a.n_elem == 4);
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n) {
            const double phase = 2.0 * std::numbers::pi * sp * (m * u + n * v);
            CHECK(std::abs(a(m * 2 + n) - std::polar(0.5, phase)) <= 1e-12);
        }

    // Unit norm and constant modulus for arbitrary angles.
    jcesd::Rng rng(81);
    for (int t = 0; t < 10; ++t) {
        const arma::cx_vec s =
            jcesd::channel::steering_vector(3, 5, rng.phase(), rng.phase(), 0.5);
        CHECK(std::abs(arma::norm(s) - 1.0) <= 1e-12);
        for (const auto& e : s)
            CHECK(std::abs(std::abs(e) - 1.0 / std::sqrt(15.0)) <= 1e-12);
    }

    CHECK_THROWS_AS(jcesd::channel::steering_vector(0, 2, 0.0, 0.0, 0.5),
                    std::invalid_argument);
}

TEST_CASE("raised_cosine_pulse_shape") {
    CHECK(jcesd::channel::raised_cosine(0.0, 1.0, 0.3) == 1.0);

    // Nyquist property: zeros at every nonzero integer multiple of the
    // sample period, independent of the rolloff.
    for (int k = 1; k <= 5; ++k) {
        CHECK(std::abs(jcesd::channel::raised_cosine(k * 1.0, 1.0, 0.3)) <= 1e-12);
        CHECK(std::abs(jcesd::channel::raised_cosine(-k * 1.0, 1.0, 0.0)) <= 1e-12);
    }

    // Closed form at half a sample period.
    const double beta = 0.3;
    const double expected =
        sinc(0.5) * std::cos(std::numbers::pi * beta * 0.5) /
        (1.0 - std::pow(2.0 * beta * 0.5, 2));
    CHECK(std::abs(jcesd::channel::raised_cosine(0.5, 1.0, beta) - expected) <= 1e-12);

    // Zero rolloff degenerates to the sinc pulse.
    CHECK(std::abs(jcesd::channel::raised_cosine(0.5, 1.0, 0.0) - 2.0 / std::numbers::pi) <=
          1e-12);

    // The denominator singularity t = T/(2*beta) is filled by its limit.
    const double t0 = 1.0 / (2.0 * beta);
    const double at = jcesd::channel::raised_cosine(t0, 1.0, beta);
    CHECK(std::isfinite(at));
    CHECK(std::abs(at - jcesd::channel::raised_cosine(t0 + 1e-8, 1.0, beta)) <= 1e-6);
    CHECK(std::abs(at - jcesd::channel::raised_cosine(t0 - 1e-8, 1.0, beta)) <= 1e-6);

    // Even symmetry.
    for (double t : {0.2, 0.7, 1.3, 2.9})
        CHECK(jcesd::channel::raised_cosine(t, 1.0, beta) ==
              jcesd::channel::raised_cosine(-t, 1.0, beta));

    CHECK_THROWS_AS(jcesd::channel::raised_cosine(0.1, 0.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(jcesd::channel::raised_cosine(0.1, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("taps_from_explicit_paths") {
    // Three hand-specified paths against a direct evaluation of
    //   taps[d] = scale * sum_l g_l p(d*T - tau_l) a_rx a_tx^H.
    jcesd::channel::ChannelParams p;
    p.num_tx = 4;
    p.num_rx = 2;
    p.num_paths = 3;
    p.num_taps = 4;
    p.sample_period = 1.0;
    p.rolloff = 0.3;
    p.path_loss = 2.0;
    p.tx_array = {2, 2};
    p.rx_array = {1, 2};
    p.element_spacing = 0.5;

    std::vector<jcesd::channel::PathComponent> paths(3);
    paths[0] = {cxd(0.8, -0.3), 0.0, 0.1, 0.2, 0.3, 0.4};
    paths[1] = {cxd(-0.5, 0.9), 1.4, 1.1, 2.2, 0.6, 5.0};
    paths[2] = {cxd(0.2, 0.1), 2.9, 4.4, 3.3, 2.8, 1.9};

    const auto h = jcesd::channel::taps_from_paths(p, paths);
    REQUIRE(h.taps.size() == 4);

    const double scale = std::sqrt(4.0 * 2.0 / (3.0 * 2.0));
    for (int d = 0; d < 4; ++d) {
        arma::cx_mat expected(2, 4, arma::fill::zeros);
        for (const auto& pc : paths) {
            const arma::cx_vec a_rx = jcesd::channel::steering_vector(
                1, 2, pc.aoa_elevation, pc.aoa_azimuth, 0.5);
            const arma::cx_vec a_tx = jcesd::channel::steering_vector(
                2, 2, pc.aod_elevation, pc.aod_azimuth, 0.5);
            expected += pc.gain *
                        jcesd::channel::raised_cosine(d * 1.0 - pc.delay, 1.0, 0.3) *
                        (a_rx * a_tx.t());
        }
        CHECK(arma::norm(h.taps[d] - scale * expected, "fro") <= 1e-12);
    }
}

TEST_CASE("taps_degenerate_single_path") {
    // A zero-delay path with zero rolloff puts all energy in tap 0.
    jcesd::channel::ChannelParams p;
    p.num_tx = 1;
    p.num_rx = 1;
    p.num_paths = 1;
    p.num_taps = 2;
    p.sample_period = 1.0;
    p.rolloff = 0.0;
    p.path_loss = 1.0;
    p.tx_array = {1, 1};
    p.rx_array = {1, 1};

    std::vector<jcesd::channel::PathComponent> paths(1);
    paths[0].gain = cxd(0.3, -1.1);
    paths[0].delay = 0.0;

    const auto h = jcesd::channel::taps_from_paths(p, paths);
    CHECK(std::abs(h.taps[0](0, 0) - paths[0].gain) <= 1e-15);
    CHECK(std::abs(h.taps[1](0, 0)) <= 1e-15);
}

TEST_CASE("path_draw_ranges_and_determinism") {
    jcesd::channel::ChannelParams p;
    p.num_tx = 4;
    p.num_rx = 2;
    p.num_paths = 6;
    p.num_taps = 5;
    p.sample_period = 0.5;
    p.tx_array = {2, 2};
    p.rx_array = {1, 2};

    const auto paths = jcesd::channel::draw_paths(p, 909);
    REQUIRE(paths.size() == 6);
    for (const auto& pc : paths) {
        CHECK(pc.delay >= 0.0);
        CHECK(pc.delay <= (p.num_taps - 1) * p.sample_period);
        for (double ang : {pc.aoa_elevation, pc.aoa_azimuth, pc.aod_elevation,
                           pc.aod_azimuth}) {
            CHECK(ang >= 0.0);
            CHECK(ang < 2.0 * std::numbers::pi);
        }
        CHECK(std::isfinite(pc.gain.real()));
        CHECK(std::isfinite(pc.gain.imag()));
    }

    const auto h1 = jcesd::channel::gen_channel(p, 2025);
    const auto h2 = jcesd::channel::gen_channel(p, 2025);
    const auto h3 = jcesd::channel::gen_channel(p, 2026);
    REQUIRE(h1.taps.size() == h2.taps.size());
    double diff_same = 0.0, diff_other = 0.0;
    for (std::size_t d = 0; d < h1.taps.size(); ++d) {
        diff_same += arma::norm(h1.taps[d] - h2.taps[d], "fro");
        diff_other += arma::norm(h1.taps[d] - h3.taps[d], "fro");
    }
    CHECK(diff_same == 0.0);
    CHECK(diff_other > 1e-6);
}

TEST_CASE("frequency_response_dft") {
    jcesd::Rng rng(82);

    // A single tap is frequency flat.
    jcesd::channel::DelayTapChannel flat;
    flat.taps.push_back(random_cx(2, 3, rng));
    const auto hf = jcesd::channel::to_frequency(flat, 8);
    REQUIRE(hf.per_subcarrier.size() == 8);
    for (const auto& h : hf.per_subcarrier)
        CHECK(arma::norm(h - flat.taps[0], "fro") == 0.0);

    // Two identity taps on two subcarriers: sum and difference.
    jcesd::channel::DelayTapChannel two;
    two.taps.assign(2, arma::cx_mat(2, 2, arma::fill::eye));
    const auto h2 = jcesd::channel::to_frequency(two, 2);
    CHECK(arma::norm(h2.per_subcarrier[0] - 2.0 * arma::cx_mat(2, 2, arma::fill::eye),
                     "fro") <= 1e-12);
    CHECK(arma::norm(h2.per_subcarrier[1], "fro") <= 1e-12);

    // Direct DFT oracle at one subcarrier.
    jcesd::channel::DelayTapChannel rnd;
    for (int d = 0; d < 4; ++d)
        rnd.taps.push_back(random_cx(2, 2, rng));
    const int num_sc = 16;
    const auto hr = jcesd::channel::to_frequency(rnd, num_sc);
    const int j = 3;
    arma::cx_mat expected(2, 2, arma::fill::zeros);
    for (int d = 0; d < 4; ++d)
        expected += rnd.taps[d] *
                    std::exp(cxd(0.0, -2.0 * std::numbers::pi * j * d / num_sc));
    CHECK(arma::norm(hr.per_subcarrier[j] - expected, "fro") <= 1e-12);

    // Inverse DFT recovers the zero-padded taps.
    for (int d = 0; d < num_sc; ++d) {
        arma::cx_mat rec(2, 2, arma::fill::zeros);
        for (int k = 0; k < num_sc; ++k)
            rec += hr.per_subcarrier[k] *
                   std::exp(cxd(0.0, 2.0 * std::numbers::pi * k * d / num_sc));
        rec /= static_cast<double>(num_sc);
        const arma::cx_mat target =
            d < 4 ? rnd.taps[d] : arma::cx_mat(2, 2, arma::fill::zeros);
        CHECK(arma::norm(rec - target, "fro") <= 1e-10);
    }
}

TEST_CASE("transmit_identity_chain") {
    jcesd::Rng rng(83);
    const int n = 2;
    const int num_sc = 4;
    const int num_sym = 5;

    jcesd::channel::FreqChannel h;
    for (int j = 0; j < num_sc; ++j)
        h.per_subcarrier.push_back(random_cx(n, n, rng));

    std::vector<jcesd::channel::Grid> x(1);
    for (int j = 0; j < num_sc; ++j)
        x[0].push_back(random_cx(n, num_sym, rng));

    const auto set = identity_chain(n, 1);
    const auto y = jcesd::channel::transmit({h}, set, x, 0.0, 7);
    REQUIRE(y.size() == 1);
    REQUIRE(y[0].size() == static_cast<std::size_t>(num_sc));
    for (int j = 0; j < num_sc; ++j)
        CHECK(arma::norm(y[0][j] - h.per_subcarrier[j] * x[0][j], "fro") <= 1e-13);

    // Linearity in the transmitted symbols.
    std::vector<jcesd::channel::Grid> x2(1);
    for (int j = 0; j < num_sc; ++j)
        x2[0].push_back(random_cx(n, num_sym, rng));
    std::vector<jcesd::channel::Grid> xsum(1);
    for (int j = 0; j < num_sc; ++j)
        xsum[0].push_back(arma::cx_mat(x[0][j] + x2[0][j]));
    const auto ya = jcesd::channel::transmit({h}, set, x2, 0.0, 7);
    const auto ys = jcesd::channel::transmit({h}, set, xsum, 0.0, 7);
    for (int j = 0; j < num_sc; ++j)
        CHECK(arma::norm(ys[0][j] - y[0][j] - ya[0][j], "fro") <= 1e-12);
}

TEST_CASE("transmit_noise_statistics_and_determinism") {
    const int n = 4;
    const int num_sc = 16;
    const int num_sym = 16;
    const double noise_var = 0.64;

    jcesd::channel::FreqChannel h;
    h.per_subcarrier.assign(num_sc, arma::cx_mat(n, n, arma::fill::zeros));
    std::vector<jcesd::channel::Grid> x(1);
    x[0].assign(num_sc, arma::cx_mat(n, num_sym, arma::fill::zeros));

    const auto set = identity_chain(n, 1);
    const auto y = jcesd::channel::transmit({h}, set, x, noise_var, 313);
    double acc = 0.0;
    long count = 0;
    for (const auto& blk : y[0]) {
        acc += std::pow(arma::norm(blk, "fro"), 2);
        count += blk.n_elem;
    }
    CHECK(std::abs(acc / count - noise_var) <= 0.1 * noise_var);

    const auto y2 = jcesd::channel::transmit({h}, set, x, noise_var, 313);
    double diff = 0.0;
    for (int j = 0; j < num_sc; ++j)
        diff += arma::norm(y[0][j] - y2[0][j], "fro");
    CHECK(diff == 0.0);
}

TEST_CASE("transmit_multiuser_superposition") {
    // With the same seed, subtracting the zero-signal run isolates the
    // deterministic signal part, which must equal the explicit sum over
    // users of H_k F_RF lambda F_BB_m X_m.
    jcesd::Rng rng(84);
    const int num_rx = 2;
    const int num_tx = 4;
    const int num_rf = 4;
    const int ns = 2;
    const int num_sc = 3;
    const int num_sym = 4;
    const int num_users = 2;

    jcesd::precoding::PrecoderSet set;
    set.f_rf = random_cx(num_tx, num_rf, rng);
    set.w_rf = random_cx(num_rx, num_rx, rng);
    set.w_bb = random_cx(num_rx, num_rx, rng);
    set.power_factor = 1.7;
    for (int m = 0; m < num_users; ++m)
        set.f_bb.push_back(random_cx(num_rf, ns, rng));

    std::vector<jcesd::channel::FreqChannel> h(num_users);
    std::vector<jcesd::channel::Grid> x(num_users), x0(num_users);
    for (int k = 0; k < num_users; ++k)
        for (int j = 0; j < num_sc; ++j) {
            h[k].per_subcarrier.push_back(random_cx(num_rx, num_tx, rng));
            x[k].push_back(random_cx(ns, num_sym, rng));
            x0[k].push_back(arma::cx_mat(ns, num_sym, arma::fill::zeros));
        }

    const double noise_var = 0.5;
    const auto y_sig = jcesd::channel::transmit(h, set, x, noise_var, 99);
    const auto y_noise = jcesd::channel::transmit(h, set, x0, noise_var, 99);

    for (int k = 0; k < num_users; ++k)
        for (int j = 0; j < num_sc; ++j) {
            arma::cx_mat expected(num_rx, num_sym, arma::fill::zeros);
            for (int m = 0; m < num_users; ++m)
                expected += h[k].per_subcarrier[j] * set.f_rf *
                            (set.power_factor * set.f_bb[m] * x[m][j]);
            CHECK(arma::norm(y_sig[k][j] - y_noise[k][j] - expected, "fro") <=
                  1e-10 * (1.0 + arma::norm(expected, "fro")));
        }
}

TEST_CASE("tap_energy_scales_with_array_size") {
    // Doubling the transmit array doubles the mean aggregate tap energy.
    jcesd::channel::ChannelParams small;
    small.num_tx = 32;
    small.num_rx = 8;
    small.tx_array = {4, 8};
    small.rx_array = {2, 4};
    small.num_paths = 4;
    small.num_taps = 4;

    jcesd::channel::ChannelParams big = small;
    big.num_tx = 64;
    big.tx_array = {8, 8};

    double e_small = 0.0, e_big = 0.0;
    const int num_seeds = 200;
    for (int s = 0; s < num_seeds; ++s) {
        e_small += total_tap_energy(jcesd::channel::gen_channel(small, 5000 + s));
        e_big += total_tap_energy(jcesd::channel::gen_channel(big, 9000 + s));
    }
    const double ratio = e_big / e_small;
    CHECK(ratio >= 1.8);
    CHECK(ratio <= 2.2);
}

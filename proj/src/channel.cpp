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

#include "jcesd/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "jcesd/precoding.hpp"
#include "jcesd/rng.hpp"

namespace jcesd::channel {

namespace {

double sinc(double x) {
    if (x == 0.0)
        return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

void check_params(const ChannelParams& p) {
    if (p.num_tx < 1 || p.num_rx < 1)
        throw std::invalid_argument("antenna counts must be positive");
    if (p.num_paths < 1)
        throw std::invalid_argument("need at least one path");
    if (p.num_taps < 1)
        throw std::invalid_argument("need at least one delay tap");
    if (p.sample_period <= 0.0)
        throw std::invalid_argument("sample period must be positive");
    if (p.rolloff < 0.0 || p.rolloff > 1.0)
        throw std::invalid_argument("rolloff must lie in [0, 1]");
    if (p.path_loss <= 0.0)
        throw std::invalid_argument("path loss must be positive");
    if (p.tx_array.first * p.tx_array.second != p.num_tx)
        throw std::invalid_argument("tx array shape does not match antenna count");
    if (p.rx_array.first * p.rx_array.second != p.num_rx)
        throw std::invalid_argument("rx array shape does not match antenna count");
}

} // namespace

arma::cx_vec steering_vector(int rows, int cols, double elevation, double azimuth,
                             double spacing) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("array must have positive dimensions");
    const double u = std::sin(elevation) * std::cos(azimuth);
    const double v = std::sin(elevation) * std::sin(azimuth);
    const double norm = 1.0 / std::sqrt(static_cast<double>(rows) * cols);
    arma::cx_vec a(static_cast<arma::uword>(rows) * cols);
    for (int m = 0; m < rows; ++m) {
        for (int n = 0; n < cols; ++n) {
            const double phase = 2.0 * std::numbers::pi * spacing * (m * u + n * v);
            a(static_cast<arma::uword>(m) * cols + n) =
                std::polar(norm, phase);
        }
    }
    return a;
}

double raised_cosine(double t, double sample_period, double rolloff) {
    if (sample_period <= 0.0)
        throw std::invalid_argument("sample period must be positive");
    if (rolloff < 0.0 || rolloff > 1.0)
        throw std::invalid_argument("rolloff must lie in [0, 1]");
    const double x = t / sample_period;
    if (rolloff == 0.0)
        return sinc(x);
    const double q = 2.0 * rolloff * x;
    const double denom = 1.0 - q * q;
    // Removable singularity at t = +-T/(2*rolloff).
    if (std::abs(denom) < 1e-10)
        return (std::numbers::pi / 4.0) * sinc(x);
    return sinc(x) * std::cos(std::numbers::pi * rolloff * x) / denom;
}

std::vector<PathComponent> draw_paths(const ChannelParams& p, std::uint64_t seed) {
    check_params(p);
    Rng rng(seed);
    std::vector<PathComponent> paths(p.num_paths);
    const double delay_span = (p.num_taps - 1) * p.sample_period;
    for (auto& pc : paths) {
        pc.gain = rng.cgaussian(1.0);
        pc.delay = rng.uniform(0.0, delay_span);
        pc.aoa_elevation = rng.phase();
        pc.aoa_azimuth = rng.phase();
        pc.aod_elevation = rng.phase();
        pc.aod_azimuth = rng.phase();
    }
    return paths;
}

DelayTapChannel taps_from_paths(const ChannelParams& p,
                                const std::vector<PathComponent>& paths) {
    check_params(p);
    if (paths.empty())
        throw std::invalid_argument("need at least one path");
    const double scale = std::sqrt(static_cast<double>(p.num_tx) * p.num_rx /
                                   (static_cast<double>(paths.size()) * p.path_loss));
    DelayTapChannel h;
    h.taps.assign(p.num_taps, arma::cx_mat(p.num_rx, p.num_tx, arma::fill::zeros));
    for (const auto& pc : paths) {
        const arma::cx_vec a_rx = steering_vector(p.rx_array.first, p.rx_array.second,
                                                  pc.aoa_elevation, pc.aoa_azimuth,
                                                  p.element_spacing);
        const arma::cx_vec a_tx = steering_vector(p.tx_array.first, p.tx_array.second,
                                                  pc.aod_elevation, pc.aod_azimuth,
                                                  p.element_spacing);
        const arma::cx_mat outer = a_rx * a_tx.t(); // a_rx a_tx^H
        for (int d = 0; d < p.num_taps; ++d) {
            const double pulse = raised_cosine(d * p.sample_period - pc.delay,
                                               p.sample_period, p.rolloff);
            h.taps[d] += scale * pc.gain * pulse * outer;
        }
    }
    return h;
}

DelayTapChannel gen_channel(const ChannelParams& p, std::uint64_t seed) {
    return taps_from_paths(p, draw_paths(p, seed));
}

FreqChannel to_frequency(const DelayTapChannel& h, int num_subcarriers) {
    if (h.taps.empty())
        throw std::invalid_argument("empty delay-tap channel");
    if (num_subcarriers < static_cast<int>(h.taps.size()))
        throw std::invalid_argument("subcarrier count below delay-tap count");
    FreqChannel f;
    f.per_subcarrier.reserve(num_subcarriers);
    const std::complex<double> i_unit(0.0, 1.0);
    for (int j = 0; j < num_subcarriers; ++j) {
        arma::cx_mat hj(h.taps[0].n_rows, h.taps[0].n_cols, arma::fill::zeros);
        for (std::size_t d = 0; d < h.taps.size(); ++d) {
            const double ang = -2.0 * std::numbers::pi * j * static_cast<double>(d) /
                               num_subcarriers;
            hj += h.taps[d] * std::exp(i_unit * ang);
        }
        f.per_subcarrier.push_back(std::move(hj));
    }
    return f;
}

std::vector<Grid> transmit(const std::vector<FreqChannel>& h,
                           const precoding::PrecoderSet& f,
                           const std::vector<Grid>& x, double noise_var,
                           std::uint64_t seed) {
    if (h.empty() || h.size() != x.size())
        throw std::invalid_argument("user count mismatch between channels and symbols");
    if (f.f_bb.size() != x.size())
        throw std::invalid_argument("user count mismatch between precoders and symbols");
    if (noise_var < 0.0)
        throw std::invalid_argument("noise variance must be nonnegative");
    const std::size_t num_users = h.size();
    const std::size_t num_sc = h[0].per_subcarrier.size();
    for (std::size_t k = 0; k < num_users; ++k)
        if (h[k].per_subcarrier.size() != num_sc || x[k].size() != num_sc)
            throw std::invalid_argument("subcarrier count mismatch");

    // Sum of all precoded user signals per subcarrier.
    std::vector<arma::cx_mat> tx(num_sc);
    for (std::size_t j = 0; j < num_sc; ++j) {
        arma::cx_mat s(f.f_rf.n_rows, x[0][j].n_cols, arma::fill::zeros);
        for (std::size_t m = 0; m < num_users; ++m)
            s += f.f_rf * (f.power_factor * (f.f_bb[m] * x[m][j]));
        tx[j] = std::move(s);
    }

    std::vector<Grid> y(num_users);
    for (std::size_t k = 0; k < num_users; ++k) {
        Rng rng(derive_seed(seed, 0xA110'0000ULL + k));
        y[k].resize(num_sc);
        for (std::size_t j = 0; j < num_sc; ++j) {
            arma::cx_mat yj = h[k].per_subcarrier[j] * tx[j];
            if (noise_var > 0.0) {
                for (arma::uword t = 0; t < yj.n_cols; ++t)
                    for (arma::uword r = 0; r < yj.n_rows; ++r)
                        yj(r, t) += rng.cgaussian(noise_var);
            }
            y[k][j] = std::move(yj);
        }
    }
    return y;
}

} // namespace jcesd::channel

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

#ifndef JCESD_CHANNEL_HPP
#define JCESD_CHANNEL_HPP

#include <armadillo>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace jcesd::precoding {
struct PrecoderSet;
}

namespace jcesd::channel {

// One resource grid: element [j] is an (streams-or-antennas) x T matrix,
// one column per OFDM symbol at subcarrier j.
using Grid = std::vector<arma::cx_mat>;

struct PathComponent {
    std::complex<double> gain; // unit circular complex Gaussian
    double delay;              // seconds, in [0, (num_taps-1)*sample_period]
    double aoa_elevation = 0.0;
    double aoa_azimuth = 0.0;
    double aod_elevation = 0.0;
    double aod_azimuth = 0.0;
};

struct ChannelParams {
    int num_tx = 64;
    int num_rx = 8;
    int num_paths = 4;          // L
    int num_taps = 4;           // delay-tap count N_c
    double sample_period = 1.0; // T_s
    double rolloff = 0.3;       // raised-cosine excess bandwidth
    double path_loss = 1.0;     // rho_L
    std::pair<int, int> tx_array = {8, 8}; // planar (rows, cols), rows*cols == num_tx
    std::pair<int, int> rx_array = {2, 4};
    double element_spacing = 0.5; // in wavelengths
};

// Delay-tap MIMO impulse response: taps[d] is num_rx x num_tx.
struct DelayTapChannel {
    std::vector<arma::cx_mat> taps;
};

// Per-subcarrier response: per_subcarrier[j] is num_rx x num_tx.
struct FreqChannel {
    std::vector<arma::cx_mat> per_subcarrier;
};

// Unit-norm planar-array steering vector with the separable phase ramp
//   phase(m, n) = 2*pi*spacing*(m*u + n*v),
//   u = sin(elevation)*cos(azimuth), v = sin(elevation)*sin(azimuth),
// element (m, n) stored at index m*cols + n, every entry of modulus
// 1/sqrt(rows*cols). Broadside (elevation 0) gives a zero phase ramp.
arma::cx_vec steering_vector(int rows, int cols, double elevation, double azimuth,
                             double spacing);

// Raised-cosine pulse p(t) with unit peak, evaluated by the closed form with
// the analytic limit at t = +-sample_period/(2*rolloff).
double raised_cosine(double t, double sample_period, double rolloff);

// Path parameter draws, in fixed order per path:
// gain, delay, AoA elevation, AoA azimuth, AoD elevation, AoD azimuth.
std::vector<PathComponent> draw_paths(const ChannelParams& p, std::uint64_t seed);

// Clustered multipath delay-tap response assembled from explicit paths:
//   taps[d] = sqrt(num_tx*num_rx/(L*path_loss))
//             * sum_l gain_l * p_rc(d*T_s - delay_l) * a_rx * a_tx^H.
DelayTapChannel taps_from_paths(const ChannelParams& p,
                                const std::vector<PathComponent>& paths);

// draw_paths followed by taps_from_paths; deterministic per (params, seed).
DelayTapChannel gen_channel(const ChannelParams& p, std::uint64_t seed);

// DFT across the delay dimension: H[j] = sum_d taps[d] * exp(-i*2*pi*j*d/J).
FreqChannel to_frequency(const DelayTapChannel& h, int num_subcarriers);

// Multi-user downlink transmission: every user's antenna-domain receive grid
//   Y_k[j] = H_k[j] * F_RF * sum_m (lambda * F_BB[m] * X_m[j]) + N_k[j],
// with i.i.d. circular complex Gaussian noise of per-entry variance
// noise_var. Noise draws are ordered per user, then subcarrier, then OFDM
// symbol, then receive antenna.
std::vector<Grid> transmit(const std::vector<FreqChannel>& h,
                           const precoding::PrecoderSet& f,
                           const std::vector<Grid>& x, double noise_var,
                           std::uint64_t seed);

} // namespace jcesd::channel

#endif

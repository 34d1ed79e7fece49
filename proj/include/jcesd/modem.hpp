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

#ifndef JCESD_MODEM_HPP
#define JCESD_MODEM_HPP

#include <armadillo>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "jcesd/rng.hpp"

namespace jcesd::modem {

// Square Gray-mapped QAM with unit average symbol energy.
//
// points[label] is the symbol whose bit label is `label`; the first half of
// the bits (MSB side) select the in-phase level, the second half the
// quadrature level, each group Gray-coded so neighbouring levels differ in
// one bit.
struct QamConstellation {
    int order = 0;                            // M, one of {4, 16, 64, 256}
    int bits_per_symbol = 0;                  // log2(M)
    double boundary = 0.0;                    // largest per-axis coordinate
    std::vector<std::complex<double>> points; // size M, indexed by bit label
};

struct LlrParams {
    double noise_var = 1.0;  // per complex sample
    double floor = 1e-3;     // lower clamp applied to noise_var
};

// Throws std::invalid_argument unless order is a supported square QAM size.
QamConstellation make_constellation(int order);

// Nearest constellation point in Euclidean distance; ties break toward the
// smaller point index.
std::pair<std::complex<double>, int> nearest(std::complex<double> y,
                                             const QamConstellation& c);

// Reliability of the hard decision for `sample`: log-likelihood margin
// between the nearest point and the next three candidates, computed in the
// log domain from squared distances.
double llr(std::complex<double> sample, const QamConstellation& c, const LlrParams& p);

// Sample set closure under the QAM sign/rotation symmetries:
// returns [Y, -Y, iY, -iY] (column count times four).
arma::cx_mat augment(const arma::cx_mat& y);

// Known pilot block: p_t * I with p_t = -boundary - i*boundary (a corner
// symbol, so pilot and data share the same peak amplitude).
arma::cx_mat corner_pilot(const QamConstellation& c, int num_streams);

// Bit/symbol conversions used by the metrics harness.
std::complex<double> map_label(const QamConstellation& c, std::uint32_t label);
std::uint32_t hard_label(std::complex<double> y, const QamConstellation& c);
void label_to_bits(const QamConstellation& c, std::uint32_t label, std::vector<std::uint8_t>& out);

// Uniform random symbols, one engine draw per symbol.
arma::cx_mat random_symbols(const QamConstellation& c, arma::uword rows, arma::uword cols,
                            Rng& rng);

} // namespace jcesd::modem

#endif

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

#ifndef JCESD_METRICS_HPP
#define JCESD_METRICS_HPP

#include <armadillo>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace jcesd::metrics {

struct UndefinedMetric : std::runtime_error {
    UndefinedMetric() : std::runtime_error("reference channel has zero norm") {}
};

// Subcarrier-averaged relative channel error in dB:
//   10*log10( (1/J) sum_j ||H_hat[j] - H[j]||_F^2 / ||H[j]||_F^2 ).
// An exact estimate returns the -300 dB sentinel. Throws UndefinedMetric on
// a zero-norm reference subcarrier.
double nmse_db(const std::vector<arma::cx_mat>& h_hat,
               const std::vector<arma::cx_mat>& h_true);

// Same average kept in linear units (for cross-seed aggregation).
double nmse_linear(const std::vector<arma::cx_mat>& h_hat,
                   const std::vector<arma::cx_mat>& h_true);

inline double linear_to_db(double v) { return v <= 1e-30 ? -300.0 : 10.0 * std::log10(v); }

struct McsEntry {
    int index;
    int modulation; // QAM order
    double code_rate;
};

// Modulation and coding schemes available to link adaptation, ascending
// spectral efficiency.
const std::vector<McsEntry>& mcs_table();

// Idealized decode rule: a block decodes when its raw (pre-decoding) bit
// error rate does not exceed decode_margin * (1 - code_rate).
inline constexpr double decode_margin = 0.55;

// Credits full blocks: bits are consumed block_size at a time (a final
// partial block is scaled pro rata); each block whose raw BER passes the
// decode rule credits block_size * code_rate * (1 - overhead) bits.
// detected and truth must have equal size.
double throughput_bits(const std::vector<std::uint8_t>& detected,
                       const std::vector<std::uint8_t>& truth, double code_rate,
                       double overhead, std::size_t block_size);

// Highest MCS index whose measured block error rate is strictly below 0.1;
// falls back to the lowest table index when none qualifies.
int link_adapt(const std::map<int, double>& bler_per_mcs);

} // namespace jcesd::metrics

#endif

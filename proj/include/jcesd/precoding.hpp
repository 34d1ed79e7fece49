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

#ifndef JCESD_PRECODING_HPP
#define JCESD_PRECODING_HPP

#include <armadillo>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "jcesd/channel.hpp"

namespace jcesd::precoding {

// Hybrid transmit/receive chain shared by all users of one TTI.
//
// f_rf:  num_tx x num_tx_rf, block diagonal with column blocks of length
//        num_tx/num_tx_rf whose entries have modulus 1/sqrt(block length).
// w_rf:  num_rx x num_rx_rf, constant-modulus entries 1/sqrt(num_rx); the
//        same combiner is used by every user.
// w_bb:  num_rx_rf x num_streams, fixed random-phase digital combiner
//        exp(i*Theta)/sqrt(num_rx_rf*num_streams), identical for all users.
// f_bb:  per-user num_tx_rf x num_streams digital precoders.
// power_factor: lambda scaling f_bb so total transmit power equals the
//        configured budget.
struct PrecoderSet {
    arma::cx_mat f_rf;
    arma::cx_mat w_rf;
    arma::cx_mat w_bb;
    std::vector<arma::cx_mat> f_bb;
    double power_factor = 1.0;
};

struct IllConditionedPrecoder : std::runtime_error {
    double condition;
    explicit IllConditionedPrecoder(double cond)
        : std::runtime_error("stream geometry is ill conditioned, condition number " +
                             std::to_string(cond)),
          condition(cond) {}
};

// Random-phase analog stages. Phase draw order: f_rf blocks first (per RF
// chain, per element), then w_rf column by column.
// Requires num_tx divisible by num_tx_rf.
void build_analog(int num_tx, int num_tx_rf, int num_rx, int num_rx_rf,
                  std::uint64_t seed, arma::cx_mat& f_rf, arma::cx_mat& w_rf);

// Fixed digital combiner, phases i.i.d. uniform in [0, 2*pi).
arma::cx_mat build_digital_combiner(int num_rx_rf, int num_streams, std::uint64_t seed);

// RF-domain equivalent channel W_RF^H * H[j] * F_RF for every subcarrier.
std::vector<arma::cx_mat> equivalent_rf_channel(const channel::FreqChannel& h,
                                                const arma::cx_mat& w_rf,
                                                const arma::cx_mat& f_rf);

// Frequency-flat eigen zero-forcing across users.
//
// For each user the subcarrier-averaged Gram matrix of the combined channel
// W_BB^H * H_rf[j] is eigendecomposed; the num_streams dominant eigenvectors
// (descending eigenvalue, first nonzero entry rotated real-positive) form the
// user's stream basis. The stacked basis V is inverted via F_BB = V (V^H V)^-1
// so that V_k^H F_BB_m = delta_km * I, and power_factor scales the result to
// total power `power_budget`.
//
// h_rf[k][j] is user k's RF-domain channel at subcarrier j.
// Throws IllConditionedPrecoder when cond(V^H V) exceeds 1e12.
void ezf_precoder(const std::vector<std::vector<arma::cx_mat>>& h_rf,
                  const arma::cx_mat& w_bb, int num_streams, double power_budget,
                  std::vector<arma::cx_mat>& f_bb, double& power_factor);

// End-to-end equivalent channel per subcarrier for user k:
//   lambda * W_BB^H W_RF^H H[j] F_RF F_BB[k]   (num_streams x num_streams).
std::vector<arma::cx_mat> effective_channel(const channel::FreqChannel& h,
                                            const PrecoderSet& set, int user);

// Receive combining of an antenna-domain grid: W_BB^H W_RF^H Y[j].
channel::Grid combine(const PrecoderSet& set, const channel::Grid& y);

} // namespace jcesd::precoding

#endif

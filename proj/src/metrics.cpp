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

#include "jcesd/metrics.hpp"

#include <cmath>

namespace jcesd::metrics {

double nmse_linear(const std::vector<arma::cx_mat>& h_hat,
                   const std::vector<arma::cx_mat>& h_true) {
    if (h_hat.empty() || h_hat.size() != h_true.size())
        throw std::invalid_argument("estimate and reference sizes differ");
    double acc = 0.0;
    for (std::size_t j = 0; j < h_true.size(); ++j) {
        const double ref = std::pow(arma::norm(h_true[j], "fro"), 2);
        if (ref <= 0.0)
            throw UndefinedMetric();
        acc += std::pow(arma::norm(h_hat[j] - h_true[j], "fro"), 2) / ref;
    }
    return acc / static_cast<double>(h_true.size());
}

double nmse_db(const std::vector<arma::cx_mat>& h_hat,
               const std::vector<arma::cx_mat>& h_true) {
    return linear_to_db(nmse_linear(h_hat, h_true));
}

const std::vector<McsEntry>& mcs_table() {
    static const std::vector<McsEntry> table = {
        {5, 16, 0.396},  {10, 16, 0.643}, {11, 64, 0.455},
        {19, 64, 0.853}, {20, 256, 0.667}, {27, 256, 0.926},
    };
    return table;
}

double throughput_bits(const std::vector<std::uint8_t>& detected,
                       const std::vector<std::uint8_t>& truth, double code_rate,
                       double overhead, std::size_t block_size) {
    if (detected.size() != truth.size())
        throw std::invalid_argument("bit stream lengths differ");
    if (code_rate <= 0.0 || code_rate > 1.0)
        throw std::invalid_argument("code rate must lie in (0, 1]");
    if (overhead < 0.0 || overhead >= 1.0)
        throw std::invalid_argument("overhead must lie in [0, 1)");
    if (block_size == 0)
        throw std::invalid_argument("block size must be positive");

    double credited = 0.0;
    const double threshold = decode_margin * (1.0 - code_rate);
    for (std::size_t start = 0; start < truth.size(); start += block_size) {
        const std::size_t len = std::min(block_size, truth.size() - start);
        std::size_t errors = 0;
        for (std::size_t i = start; i < start + len; ++i)
            errors += detected[i] != truth[i];
        const double raw_ber = static_cast<double>(errors) / static_cast<double>(len);
        if (raw_ber <= threshold)
            credited += static_cast<double>(len) * code_rate * (1.0 - overhead);
    }
    return credited;
}

int link_adapt(const std::map<int, double>& bler_per_mcs) {
    if (bler_per_mcs.empty())
        throw std::invalid_argument("no measurements given");
    int best = bler_per_mcs.begin()->first;
    bool found = false;
    for (const auto& [index, bler] : bler_per_mcs) {
        if (bler < 0.1 && (!found || index > best)) {
            best = index;
            found = true;
        }
    }
    return best;
}

} // namespace jcesd::metrics

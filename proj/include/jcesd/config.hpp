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

#ifndef JCESD_CONFIG_HPP
#define JCESD_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace jcesd::harness {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Simulation parameters. Field names double as the config file keys
// (flat "key = value" lines, '#' comments, lists comma separated).
struct SimConfig {
    int num_users = 4;        // K
    int num_streams = 2;      // per user
    int num_tx_antennas = 64;
    int num_rx_antennas = 8;
    int num_tx_rf_chains = 16;
    int num_rx_rf_chains = 4;
    int num_subcarriers = 48; // J
    int num_symbols = 14;     // OFDM symbols per TTI
    int num_taps = 4;         // channel delay taps
    int num_paths = 4;        // multipath components
    int num_blocks = 8;       // receiver frequency blocks
    int num_iterations = 5;   // receiver refinement rounds
    int num_ttis = 20;
    double kappa_max = 1e4;
    double llr_threshold = 15.0;
    int modulation = 4;       // QAM order; ignored when mcs_index >= 0
    int mcs_index = -1;       // fixed MCS table index, or -1
    bool link_adaptation = false;
    std::vector<double> snr_db = {10.0};
    std::vector<std::uint64_t> seeds = {1};
    std::string receiver = "semiblind"; // semiblind | pilot_orthogonal | pilot_nonorthogonal
    bool strict_fail = false;
    double rolloff = 0.3;
    double element_spacing = 0.5;
    double sample_period = 1.0;
    double path_loss = 1.0;
    double power_budget = -1.0; // < 0: defaults to num_users * num_streams
};

// Parses a config file. Unknown keys, malformed values, or parameter
// combinations that violate the model contracts (divisibility, stream
// capacity, supported QAM orders, empty seed list) raise ConfigError.
// Full-scale antenna settings are accepted but flagged slow on stderr.
SimConfig parse_config(const std::string& path);

// Same validation applied to an in-memory config.
void validate_config(const SimConfig& cfg);

} // namespace jcesd::harness

#endif

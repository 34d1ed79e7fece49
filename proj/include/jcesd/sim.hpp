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

#ifndef JCESD_SIM_HPP
#define JCESD_SIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "jcesd/config.hpp"

namespace jcesd::harness {

// One result row per (snr, seed, user). Aggregates over the TTIs of the
// trial. runtime_ms is wall-clock and excluded from the determinism
// contract; every other column is a pure function of (config, snr, seed).
struct MetricsRow {
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    int user = 0;
    std::string receiver;
    double nmse_db = 0.0;
    double ser = 0.0;
    double ber = 0.0;
    double throughput_bits = 0.0;
    int mcs_index = -1;
    int blocks_failed = 0;
    double runtime_ms = 0.0;
    long opt_iters = 0;
};

std::string csv_header();
std::string to_csv(const MetricsRow& row);
std::vector<MetricsRow> parse_csv(const std::string& path); // header checked

// Runs num_ttis TTIs at one (snr, seed) cell and returns one row per user.
// Each TTI draws a fresh channel from a sub-seed of `seed`; all randomness
// derives from (config, snr, seed) alone.
std::vector<MetricsRow> run_trial(const SimConfig& cfg, double snr_db,
                                  std::uint64_t seed);

// Runs the (snr x seed) grid with a worker pool (JCESD_THREADS caps the
// worker count), merges with rows already present in out_path (completed
// (snr, seed) cells are skipped), sorts by (snr, seed, user) and rewrites
// the file atomically (temp file + rename).
void sweep(const SimConfig& cfg, const std::vector<double>& snrs,
           const std::vector<std::uint64_t>& seeds, const std::string& out_path);

int thread_budget(); // JCESD_THREADS, default hardware concurrency

} // namespace jcesd::harness

#endif

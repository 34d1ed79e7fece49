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

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jcesd/config.hpp"
#include "jcesd/sim.hpp"
#include "jcesd/validate.hpp"

namespace {

// "LO:HI:STEP" in dB, inclusive of HI up to a half step of rounding slack.
std::vector<double> parse_snr_range(const std::string& spec) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw CLI::ValidationError("--snr", "expected LO:HI:STEP");
    double lo = 0.0, hi = 0.0, step = 0.0;
    try {
        lo = std::stod(spec.substr(0, c1));
        hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        step = std::stod(spec.substr(c2 + 1));
    } catch (...) {
        throw CLI::ValidationError("--snr", "expected LO:HI:STEP");
    }
    if (step <= 0.0 || hi < lo)
        throw CLI::ValidationError("--snr", "need HI >= LO and STEP > 0");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double v = lo + i * step;
        if (v > hi + 0.5 * step)
            break;
        out.push_back(std::min(v, hi));
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-user MIMO-OFDM link simulator with a semi-blind receiver"};
    app.require_subcommand(1);

    std::string config_path, out_path, snr_spec, suite = "all";
    int seeds_count = 1;
    std::int64_t seed_override = -1;

    auto* simulate = app.add_subcommand("simulate", "run the configured (snr, seed) grid");
    simulate->add_option("--config", config_path, "config file")->required();
    simulate->add_option("--out", out_path, "output CSV path")->required();
    simulate->add_option("--seed", seed_override, "replace the configured seed list");

    auto* sweep = app.add_subcommand("sweep", "run an SNR range over fresh seeds");
    sweep->add_option("--config", config_path, "config file")->required();
    sweep->add_option("--snr", snr_spec, "SNR range LO:HI:STEP in dB")->required();
    sweep->add_option("--seeds", seeds_count, "number of seeds, 1..N")
        ->required()
        ->check(CLI::PositiveNumber);
    sweep->add_option("--out", out_path, "output CSV path")->required();

    auto* validate = app.add_subcommand("validate", "run the release gates");
    validate->add_option("--suite", suite, "invariants | appendix | all")
        ->check(CLI::IsMember({"invariants", "appendix", "all"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            auto cfg = jcesd::harness::parse_config(config_path);
            if (seed_override >= 0)
                cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
            jcesd::harness::sweep(cfg, cfg.snr_db, cfg.seeds, out_path);
            std::cout << "wrote " << out_path << "\n";
        } else if (sweep->parsed()) {
            const auto cfg = jcesd::harness::parse_config(config_path);
            std::vector<std::uint64_t> seeds(seeds_count);
            for (int i = 0; i < seeds_count; ++i)
                seeds[i] = static_cast<std::uint64_t>(i + 1);
            jcesd::harness::sweep(cfg, parse_snr_range(snr_spec), seeds, out_path);
            std::cout << "wrote " << out_path << "\n";
        } else if (validate->parsed()) {
            const auto results = jcesd::validate::run_suite(suite);
            return jcesd::validate::report(results) == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

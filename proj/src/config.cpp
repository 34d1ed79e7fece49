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

#include "jcesd/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace jcesd::harness {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("invalid integer for key '" + key + "': " + v);
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw ConfigError("invalid number for key '" + key + "': " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError("invalid boolean for key '" + key + "': " + v);
}

} // namespace

void validate_config(const SimConfig& cfg) {
    if (cfg.num_users < 1 || cfg.num_streams < 1)
        throw ConfigError("user and stream counts must be positive");
    if (cfg.num_tx_antennas < 1 || cfg.num_rx_antennas < 1 ||
        cfg.num_tx_rf_chains < 1 || cfg.num_rx_rf_chains < 1)
        throw ConfigError("antenna and RF chain counts must be positive");
    if (cfg.num_tx_antennas % cfg.num_tx_rf_chains != 0)
        throw ConfigError("num_tx_antennas must be divisible by num_tx_rf_chains");
    if (cfg.num_streams > cfg.num_rx_rf_chains)
        throw ConfigError("num_streams exceeds num_rx_rf_chains");
    if (cfg.num_users * cfg.num_streams > cfg.num_tx_rf_chains)
        throw ConfigError("total streams exceed num_tx_rf_chains");
    if (cfg.num_subcarriers < 1 || cfg.num_symbols < 1)
        throw ConfigError("grid dimensions must be positive");
    if (cfg.num_blocks < 1 || cfg.num_subcarriers % cfg.num_blocks != 0)
        throw ConfigError("num_blocks must divide num_subcarriers");
    if (cfg.num_symbols < cfg.num_streams)
        throw ConfigError("num_symbols too small for the pilot block");
    if (cfg.num_taps < 1 || cfg.num_taps > cfg.num_subcarriers)
        throw ConfigError("num_taps must lie in [1, num_subcarriers]");
    if (cfg.num_paths < 1)
        throw ConfigError("num_paths must be positive");
    if (cfg.num_iterations < 0)
        throw ConfigError("num_iterations must be nonnegative");
    if (cfg.num_ttis < 1)
        throw ConfigError("num_ttis must be positive");
    if (cfg.kappa_max <= 0.0)
        throw ConfigError("kappa_max must be positive");
    if (cfg.modulation != 4 && cfg.modulation != 16 && cfg.modulation != 64 &&
        cfg.modulation != 256)
        throw ConfigError("modulation must be one of 4, 16, 64, 256");
    if (cfg.mcs_index >= 0) {
        bool known = false;
        for (int idx : {5, 10, 11, 19, 20, 27})
            known = known || idx == cfg.mcs_index;
        if (!known)
            throw ConfigError("unknown mcs_index " + std::to_string(cfg.mcs_index));
    }
    if (cfg.seeds.empty())
        throw ConfigError("seed list must not be empty");
    if (cfg.snr_db.empty())
        throw ConfigError("snr_db list must not be empty");
    if (cfg.receiver != "semiblind" && cfg.receiver != "pilot_orthogonal" &&
        cfg.receiver != "pilot_nonorthogonal")
        throw ConfigError("unknown receiver '" + cfg.receiver + "'");
    if (cfg.rolloff < 0.0 || cfg.rolloff > 1.0)
        throw ConfigError("rolloff must lie in [0, 1]");
    if (cfg.sample_period <= 0.0)
        throw ConfigError("sample_period must be positive");
    if (cfg.element_spacing <= 0.0)
        throw ConfigError("element_spacing must be positive");
    if (cfg.path_loss <= 0.0)
        throw ConfigError("path_loss must be positive");
    if (cfg.num_tx_antennas >= 512 || cfg.num_rx_antennas >= 128)
        std::cerr << "note: full-scale antenna configuration, expect long runtimes\n";
}

SimConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);

    SimConfig cfg;
    std::map<std::string, std::function<void(const std::string&, const std::string&)>>
        setters;
    setters["num_users"] = [&](auto& k, auto& v) { cfg.num_users = parse_int(k, v); };
    setters["num_streams"] = [&](auto& k, auto& v) { cfg.num_streams = parse_int(k, v); };
    setters["num_tx_antennas"] = [&](auto& k, auto& v) { cfg.num_tx_antennas = parse_int(k, v); };
    setters["num_rx_antennas"] = [&](auto& k, auto& v) { cfg.num_rx_antennas = parse_int(k, v); };
    setters["num_tx_rf_chains"] = [&](auto& k, auto& v) { cfg.num_tx_rf_chains = parse_int(k, v); };
    setters["num_rx_rf_chains"] = [&](auto& k, auto& v) { cfg.num_rx_rf_chains = parse_int(k, v); };
    setters["num_subcarriers"] = [&](auto& k, auto& v) { cfg.num_subcarriers = parse_int(k, v); };
    setters["num_symbols"] = [&](auto& k, auto& v) { cfg.num_symbols = parse_int(k, v); };
    setters["num_taps"] = [&](auto& k, auto& v) { cfg.num_taps = parse_int(k, v); };
    setters["num_paths"] = [&](auto& k, auto& v) { cfg.num_paths = parse_int(k, v); };
    setters["num_blocks"] = [&](auto& k, auto& v) { cfg.num_blocks = parse_int(k, v); };
    setters["num_iterations"] = [&](auto& k, auto& v) { cfg.num_iterations = parse_int(k, v); };
    setters["num_ttis"] = [&](auto& k, auto& v) { cfg.num_ttis = parse_int(k, v); };
    setters["kappa_max"] = [&](auto& k, auto& v) { cfg.kappa_max = parse_double(k, v); };
    setters["llr_threshold"] = [&](auto& k, auto& v) { cfg.llr_threshold = parse_double(k, v); };
    setters["modulation"] = [&](auto& k, auto& v) { cfg.modulation = parse_int(k, v); };
    setters["mcs_index"] = [&](auto& k, auto& v) { cfg.mcs_index = parse_int(k, v); };
    setters["link_adaptation"] = [&](auto& k, auto& v) { cfg.link_adaptation = parse_bool(k, v); };
    setters["receiver"] = [&](auto&, auto& v) { cfg.receiver = v; };
    setters["strict_fail"] = [&](auto& k, auto& v) { cfg.strict_fail = parse_bool(k, v); };
    setters["rolloff"] = [&](auto& k, auto& v) { cfg.rolloff = parse_double(k, v); };
    setters["element_spacing"] = [&](auto& k, auto& v) { cfg.element_spacing = parse_double(k, v); };
    setters["sample_period"] = [&](auto& k, auto& v) { cfg.sample_period = parse_double(k, v); };
    setters["path_loss"] = [&](auto& k, auto& v) { cfg.path_loss = parse_double(k, v); };
    setters["power_budget"] = [&](auto& k, auto& v) { cfg.power_budget = parse_double(k, v); };
    setters["snr_db"] = [&](auto& k, auto& v) {
        cfg.snr_db.clear();
        for (const auto& item : split_list(v))
            cfg.snr_db.push_back(parse_double(k, item));
    };
    setters["seeds"] = [&](auto& k, auto& v) {
        cfg.seeds.clear();
        for (const auto& item : split_list(v))
            cfg.seeds.push_back(static_cast<std::uint64_t>(parse_int(k, item)));
    };

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError("unknown config key '" + key + "'");
        it->second(key, value);
    }

    validate_config(cfg);
    return cfg;
}

} // namespace jcesd::harness

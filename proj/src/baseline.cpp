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

#include "jcesd/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace jcesd::baseline {

PilotPattern make_pattern(PatternKind kind, int num_users, int num_streams,
                          int num_subcarriers, int num_symbols) {
    if (num_users < 1 || num_streams < 1 || num_subcarriers < 1 || num_symbols < 1)
        throw std::invalid_argument("pattern dimensions must be positive");

    PilotPattern p;
    p.kind = kind;
    p.num_users = num_users;
    p.num_streams = num_streams;
    p.num_subcarriers = num_subcarriers;
    p.num_symbols = num_symbols;
    p.stream_res.resize(static_cast<std::size_t>(num_users) * num_streams);

    const long grid = static_cast<long>(num_subcarriers) * num_symbols;
    std::set<std::pair<int, int>> used;

    if (kind == PatternKind::orthogonal) {
        const long total = static_cast<long>(num_users) * num_streams;
        if (total > grid)
            throw CapacityExceeded();
        for (long g = 0; g < total; ++g) {
            const int j = static_cast<int>(g % num_subcarriers);
            const int t = static_cast<int>(g / num_subcarriers);
            p.stream_res[g].emplace_back(j, t);
            used.insert({j, t});
        }
    } else {
        // Fixed comb of ~17% of the subcarriers at every OFDM symbol, shared
        // by all users (worst-case pilot reuse). The streams of one user
        // interleave over the symbol slots of each comb subcarrier. Comb
        // teeth span the band edge to edge so the interpolation stage never
        // extrapolates.
        if (num_symbols < num_streams)
            throw CapacityExceeded();
        const int comb = std::max(
            1L, std::lround(0.17 * static_cast<double>(num_subcarriers)));
        for (int i = 0; i < comb; ++i) {
            const int j = comb == 1
                              ? 0
                              : static_cast<int>(std::lround(
                                    static_cast<double>(i) * (num_subcarriers - 1) /
                                    (comb - 1)));
            for (int t = 0; t < num_symbols; ++t) {
                const int s = t % num_streams;
                for (int k = 0; k < num_users; ++k)
                    p.stream_res[static_cast<std::size_t>(k) * num_streams + s]
                        .emplace_back(j, t);
                used.insert({j, t});
            }
        }
    }

    p.all_res.assign(used.begin(), used.end());
    p.overhead_fraction = static_cast<double>(p.all_res.size()) / static_cast<double>(grid);
    return p;
}

std::vector<arma::cx_mat> pilot_ce(const std::vector<arma::cx_mat>& y,
                                   const PilotPattern& pattern, int user,
                                   std::complex<double> pilot_value) {
    if (user < 0 || user >= pattern.num_users)
        throw std::invalid_argument("user index out of range");
    if (static_cast<int>(y.size()) != pattern.num_subcarriers)
        throw std::invalid_argument("grid size does not match the pattern");
    if (std::abs(pilot_value) == 0.0)
        throw std::invalid_argument("pilot value must be nonzero");
    const int dim = static_cast<int>(y[0].n_rows);
    if (dim != pattern.num_streams)
        throw std::invalid_argument("stream count does not match the pattern");
    const int num_sc = pattern.num_subcarriers;

    std::vector<arma::cx_mat> h(num_sc, arma::cx_mat(dim, dim, arma::fill::zeros));

    for (int s = 0; s < dim; ++s) {
        const auto& res = pattern.stream_res[static_cast<std::size_t>(user) * dim + s];
        if (res.empty())
            throw EstimationImpossible();

        // Column estimates at pilot subcarriers, averaged per subcarrier.
        std::map<int, std::pair<arma::cx_vec, int>> at;
        for (const auto& [j, t] : res) {
            const arma::cx_vec col = y[j].col(t) / pilot_value;
            auto it = at.find(j);
            if (it == at.end())
                at.emplace(j, std::make_pair(col, 1));
            else {
                it->second.first += col;
                it->second.second += 1;
            }
        }
        std::vector<int> pj;
        std::vector<arma::cx_vec> pv;
        for (auto& [j, acc] : at) {
            pj.push_back(j);
            pv.push_back(acc.first / static_cast<double>(acc.second));
        }

        // Piecewise-linear interpolation across subcarriers, constant
        // extrapolation beyond the outermost pilots.
        for (int j = 0; j < num_sc; ++j) {
            arma::cx_vec col;
            if (j <= pj.front()) {
                col = pv.front();
            } else if (j >= pj.back()) {
                col = pv.back();
            } else {
                const auto hi =
                    std::upper_bound(pj.begin(), pj.end(), j) - pj.begin();
                const auto lo = hi - 1;
                const double w = static_cast<double>(j - pj[lo]) /
                                 static_cast<double>(pj[hi] - pj[lo]);
                col = (1.0 - w) * pv[lo] + w * pv[hi];
            }
            h[j].col(s) = col;
        }
    }
    return h;
}

double theoretical_gain(double overhead_baseline, double overhead_proposed) {
    if (overhead_baseline < 0.0 || overhead_baseline >= 1.0 ||
        overhead_proposed < 0.0 || overhead_proposed >= 1.0)
        throw std::invalid_argument("overheads must lie in [0, 1)");
    return (1.0 - overhead_proposed) / (1.0 - overhead_baseline) - 1.0;
}

} // namespace jcesd::baseline

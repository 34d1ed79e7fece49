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

#include "jcesd/precoding.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "jcesd/rng.hpp"

namespace jcesd::precoding {

void build_analog(int num_tx, int num_tx_rf, int num_rx, int num_rx_rf,
                  std::uint64_t seed, arma::cx_mat& f_rf, arma::cx_mat& w_rf) {
    if (num_tx < 1 || num_tx_rf < 1 || num_rx < 1 || num_rx_rf < 1)
        throw std::invalid_argument("antenna and RF chain counts must be positive");
    if (num_tx % num_tx_rf != 0)
        throw std::invalid_argument("transmit antennas must divide evenly across RF chains");

    Rng rng(seed);
    const int block = num_tx / num_tx_rf;
    const double f_mod = 1.0 / std::sqrt(static_cast<double>(block));
    f_rf.zeros(num_tx, num_tx_rf);
    for (int m = 0; m < num_tx_rf; ++m)
        for (int e = 0; e < block; ++e)
            f_rf(static_cast<arma::uword>(m) * block + e, m) = std::polar(f_mod, rng.phase());

    const double w_mod = 1.0 / std::sqrt(static_cast<double>(num_rx));
    w_rf.set_size(num_rx, num_rx_rf);
    for (int m = 0; m < num_rx_rf; ++m)
        for (int r = 0; r < num_rx; ++r)
            w_rf(r, m) = std::polar(w_mod, rng.phase());
}

arma::cx_mat build_digital_combiner(int num_rx_rf, int num_streams, std::uint64_t seed) {
    if (num_rx_rf < 1 || num_streams < 1)
        throw std::invalid_argument("combiner dimensions must be positive");
    if (num_streams > num_rx_rf)
        throw std::invalid_argument("streams exceed RF chains");
    Rng rng(seed);
    const double mod = 1.0 / std::sqrt(static_cast<double>(num_rx_rf) * num_streams);
    arma::cx_mat w(num_rx_rf, num_streams);
    for (int s = 0; s < num_streams; ++s)
        for (int r = 0; r < num_rx_rf; ++r)
            w(r, s) = std::polar(mod, rng.phase());
    return w;
}

std::vector<arma::cx_mat> equivalent_rf_channel(const channel::FreqChannel& h,
                                                const arma::cx_mat& w_rf,
                                                const arma::cx_mat& f_rf) {
    std::vector<arma::cx_mat> out;
    out.reserve(h.per_subcarrier.size());
    for (const auto& hj : h.per_subcarrier)
        out.push_back(w_rf.t() * hj * f_rf);
    return out;
}

void ezf_precoder(const std::vector<std::vector<arma::cx_mat>>& h_rf,
                  const arma::cx_mat& w_bb, int num_streams, double power_budget,
                  std::vector<arma::cx_mat>& f_bb, double& power_factor) {
    if (h_rf.empty() || h_rf[0].empty())
        throw std::invalid_argument("no channels given");
    if (power_budget <= 0.0)
        throw std::invalid_argument("power budget must be positive");
    const int num_users = static_cast<int>(h_rf.size());
    const arma::uword num_rf = h_rf[0][0].n_cols;
    if (static_cast<arma::uword>(num_users) * num_streams > num_rf)
        throw std::invalid_argument("total stream count exceeds transmit RF chains");

    // Stacked per-user dominant bases of the subcarrier-averaged Gram.
    arma::cx_mat v(num_rf, static_cast<arma::uword>(num_users) * num_streams);
    for (int k = 0; k < num_users; ++k) {
        arma::cx_mat gram(num_rf, num_rf, arma::fill::zeros);
        for (const auto& hj : h_rf[k]) {
            const arma::cx_mat a = w_bb.t() * hj; // num_streams x num_rf
            gram += a.t() * a;
        }
        gram /= static_cast<double>(h_rf[k].size());
        gram = 0.5 * (gram + gram.t()); // enforce Hermitian symmetry

        arma::vec eigval;
        arma::cx_mat eigvec;
        if (!arma::eig_sym(eigval, eigvec, gram))
            throw std::runtime_error("eigendecomposition failed");
        // Ascending eigenvalues: take the trailing num_streams columns in
        // descending order, each rotated so its first nonzero entry is
        // real positive (deterministic sign convention).
        for (int s = 0; s < num_streams; ++s) {
            arma::cx_vec col = eigvec.col(eigvec.n_cols - 1 - s);
            for (arma::uword i = 0; i < col.n_elem; ++i) {
                if (std::abs(col(i)) > 1e-12) {
                    col *= std::polar(1.0, -std::arg(col(i)));
                    break;
                }
            }
            v.col(static_cast<arma::uword>(k) * num_streams + s) = col;
        }
    }

    const arma::cx_mat gram_v = v.t() * v;
    const double cond = arma::cond(gram_v);
    if (!std::isfinite(cond) || cond > 1e12)
        throw IllConditionedPrecoder(cond);

    const arma::cx_mat f_all = v * arma::inv(gram_v); // V (V^H V)^-1
    power_factor = std::sqrt(power_budget / std::real(arma::trace(f_all * f_all.t())));

    f_bb.clear();
    f_bb.reserve(num_users);
    for (int k = 0; k < num_users; ++k)
        f_bb.push_back(f_all.cols(static_cast<arma::uword>(k) * num_streams,
                                  static_cast<arma::uword>(k + 1) * num_streams - 1));
}

std::vector<arma::cx_mat> effective_channel(const channel::FreqChannel& h,
                                            const PrecoderSet& set, int user) {
    if (user < 0 || user >= static_cast<int>(set.f_bb.size()))
        throw std::invalid_argument("user index out of range");
    const arma::cx_mat rx_side = set.w_bb.t() * set.w_rf.t();
    const arma::cx_mat tx_side = set.f_rf * set.f_bb[user] * set.power_factor;
    std::vector<arma::cx_mat> out;
    out.reserve(h.per_subcarrier.size());
    for (const auto& hj : h.per_subcarrier)
        out.push_back(rx_side * hj * tx_side);
    return out;
}

channel::Grid combine(const PrecoderSet& set, const channel::Grid& y) {
    const arma::cx_mat rx_side = set.w_bb.t() * set.w_rf.t();
    channel::Grid out;
    out.reserve(y.size());
    for (const auto& yj : y)
        out.push_back(rx_side * yj);
    return out;
}

} // namespace jcesd::precoding

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

#include "jcesd/modem.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jcesd::modem {

namespace {

// Binary-reflected Gray code of a level index.
std::uint32_t from_gray(std::uint32_t g) {
    std::uint32_t k = 0;
    for (; g; g >>= 1)
        k ^= g;
    return k;
}

} // namespace

QamConstellation make_constellation(int order) {
    if (order != 4 && order != 16 && order != 64 && order != 256)
        throw std::invalid_argument("unsupported QAM order " + std::to_string(order));

    QamConstellation c;
    c.order = order;
    c.bits_per_symbol = static_cast<int>(std::lround(std::log2(order)));

    const int axis_bits = c.bits_per_symbol / 2;
    const int levels = 1 << axis_bits; // points per axis
    // Unit average energy: per-axis variance of the odd-integer lattice
    // {-(L-1), ..., L-1} is (L^2-1)/3, two axes.
    const double scale = std::sqrt(3.0 / (2.0 * (order - 1)));

    c.points.resize(order);
    for (std::uint32_t label = 0; label < static_cast<std::uint32_t>(order); ++label) {
        const std::uint32_t gi = label >> axis_bits;
        const std::uint32_t gq = label & ((1u << axis_bits) - 1u);
        const int ki = static_cast<int>(from_gray(gi));
        const int kq = static_cast<int>(from_gray(gq));
        const double re = (2 * ki - (levels - 1)) * scale;
        const double im = (2 * kq - (levels - 1)) * scale;
        c.points[label] = {re, im};
    }
    c.boundary = (levels - 1) * scale;
    return c;
}

std::pair<std::complex<double>, int> nearest(std::complex<double> y,
                                             const QamConstellation& c) {
    if (c.points.empty())
        throw std::invalid_argument("empty constellation");
    double best = std::numeric_limits<double>::infinity();
    int best_idx = 0;
    for (int i = 0; i < static_cast<int>(c.points.size()); ++i) {
        const double d = std::norm(y - c.points[i]);
        if (d < best) { // strict: ties keep the smaller index
            best = d;
            best_idx = i;
        }
    }
    return {c.points[best_idx], best_idx};
}

double llr(std::complex<double> sample, const QamConstellation& c, const LlrParams& p) {
    if (c.points.size() < 4)
        throw std::invalid_argument("llr needs at least four constellation points");
    if (p.floor <= 0.0)
        throw std::invalid_argument("llr noise floor must be positive");
    const double s2 = std::max(p.noise_var, p.floor);

    // Four smallest squared distances, ascending.
    std::array<double, 4> d;
    d.fill(std::numeric_limits<double>::infinity());
    for (const auto& pt : c.points) {
        double dd = std::norm(sample - pt);
        for (int i = 0; i < 4; ++i) {
            if (dd < d[i]) {
                std::swap(dd, d[i]);
            }
        }
    }

    // llr = -d1/(2 s2) - log sum_{i=2..4} exp(-di/(2 s2)), in the log domain.
    const double m = -d[1] / (2.0 * s2); // largest exponent of the sum
    double acc = 0.0;
    for (int i = 1; i < 4; ++i)
        acc += std::exp(-d[i] / (2.0 * s2) - m);
    return -d[0] / (2.0 * s2) - (m + std::log(acc));
}

arma::cx_mat augment(const arma::cx_mat& y) {
    const std::complex<double> i_unit(0.0, 1.0);
    return arma::join_rows(y, -y, i_unit * y, -i_unit * y);
}

arma::cx_mat corner_pilot(const QamConstellation& c, int num_streams) {
    if (num_streams < 1)
        throw std::invalid_argument("pilot needs at least one stream");
    const std::complex<double> p_t(-c.boundary, -c.boundary);
    arma::cx_mat p(num_streams, num_streams, arma::fill::zeros);
    p.diag().fill(p_t);
    return p;
}

std::complex<double> map_label(const QamConstellation& c, std::uint32_t label) {
    if (label >= c.points.size())
        throw std::invalid_argument("symbol label out of range");
    return c.points[label];
}

std::uint32_t hard_label(std::complex<double> y, const QamConstellation& c) {
    return static_cast<std::uint32_t>(nearest(y, c).second);
}

void label_to_bits(const QamConstellation& c, std::uint32_t label,
                   std::vector<std::uint8_t>& out) {
    for (int b = c.bits_per_symbol - 1; b >= 0; --b)
        out.push_back(static_cast<std::uint8_t>((label >> b) & 1u));
}

arma::cx_mat random_symbols(const QamConstellation& c, arma::uword rows,
                            arma::uword cols, Rng& rng) {
    arma::cx_mat x(rows, cols);
    for (arma::uword j = 0; j < cols; ++j)
        for (arma::uword i = 0; i < rows; ++i)
            x(i, j) = c.points[rng.below(c.points.size())];
    return x;
}

} // namespace jcesd::modem

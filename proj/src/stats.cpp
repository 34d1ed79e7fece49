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

#include "jcesd/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace jcesd::stats {

namespace {

// Regularized upper incomplete gamma Q(s, y) for integer s >= 1:
// e^-y * sum_{i<s} y^i / i!, accumulated in the log domain.
double upper_gamma_int(int s, double y) {
    if (y <= 0.0)
        return 1.0;
    double sum = 0.0;
    for (int i = 0; i < s; ++i)
        sum += std::exp(i * std::log(y) - y - std::lgamma(i + 1.0));
    return std::min(1.0, sum);
}

} // namespace

double marcum_q(int order, double a, double b, double tol, int max_terms) {
    if (order < 1)
        throw std::invalid_argument("order must be at least 1");
    if (a < 0.0 || b < 0.0)
        throw std::invalid_argument("arguments must be nonnegative");
    if (b == 0.0)
        return 1.0;

    const double half_delta = 0.5 * a * a; // Poisson mixing rate
    const double y = 0.5 * b * b;
    if (half_delta == 0.0)
        return upper_gamma_int(order, y);

    const double log_hd = std::log(half_delta);
    const double log_y = std::log(y);
    double gamma_tail = upper_gamma_int(order, y); // Q(order + j, y) at j = 0
    double total = 0.0;
    double poisson_mass = 0.0;

    for (int j = 0; j < max_terms; ++j) {
        const double w = std::exp(j * log_hd - half_delta - std::lgamma(j + 1.0));
        total += w * gamma_tail;
        poisson_mass += w;
        // Remaining terms are bounded by the missing Poisson mass (the gamma
        // tails are <= 1), so stop once that mass is negligible. The mass
        // only becomes representable past the Poisson mode for large rates.
        if (j > half_delta && 1.0 - poisson_mass < tol)
            return std::min(1.0, total);
        // Q(order + j + 1, y) = Q(order + j, y) + e^-y y^(order+j)/(order+j)!
        gamma_tail += std::exp((order + j) * log_y - y - std::lgamma(order + j + 1.0));
        if (gamma_tail > 1.0)
            gamma_tail = 1.0;
    }
    throw std::runtime_error("series did not converge within the term budget");
}

} // namespace jcesd::stats

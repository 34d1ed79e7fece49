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

#ifndef JCESD_STATS_HPP
#define JCESD_STATS_HPP

namespace jcesd::stats {

// Generalized Marcum Q function Q_m(a, b) for integer order m >= 1,
// evaluated as the noncentral chi-squared tail
//   Q_m(a, b) = P(W > b^2),  W ~ chi^2(2m, noncentrality a^2),
// by the Poisson-weighted mixture of central chi-squared (integer gamma)
// tails. Terms are accumulated until the remaining Poisson mass drops below
// tol; weights are formed in the log domain so large noncentralities do not
// underflow. Throws std::runtime_error if the series needs more than
// max_terms terms.
double marcum_q(int order, double a, double b, double tol = 1e-10,
                int max_terms = 200000);

} // namespace jcesd::stats

#endif

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

#ifndef JCESD_BASELINE_HPP
#define JCESD_BASELINE_HPP

#include <armadillo>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace jcesd::baseline {

struct BaselineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CapacityExceeded : BaselineError {
    CapacityExceeded() : BaselineError("pilot pattern does not fit in the grid") {}
};
struct EstimationImpossible : BaselineError {
    EstimationImpossible() : BaselineError("a stream has no pilot resource elements") {}
};

enum class PatternKind { orthogonal, non_orthogonal };

// Pilot resource allocation across the K*N_s global streams of one grid.
//
// orthogonal: one dedicated resource element per stream, filling subcarriers
// first and extending across OFDM symbols when K*N_s > J. No two streams
// share an element, so estimates are contamination free.
//
// non_orthogonal: a fixed comb covering 17% of the grid (round(0.17*J*T)
// elements, subcarrier-major), reused identically by every user; within one
// user the N_s streams take interleaved comb positions, so streams of the
// same user stay separable while users collide completely.
//
// Every pilot element is muted for data on all streams.
struct PilotPattern {
    PatternKind kind = PatternKind::orthogonal;
    int num_users = 0;
    int num_streams = 0;
    int num_subcarriers = 0;
    int num_symbols = 0;
    // per global stream k*N_s+s: list of (subcarrier, symbol) elements
    std::vector<std::vector<std::pair<int, int>>> stream_res;
    // union of all pilot elements
    std::vector<std::pair<int, int>> all_res;
    double overhead_fraction = 0.0; // |all_res| / (J*T)
};

PilotPattern make_pattern(PatternKind kind, int num_users, int num_streams,
                          int num_subcarriers, int num_symbols);

// Pilot-based channel estimation on user `user`'s combined grid y (element
// [j] is N_s x T): per stream, least squares y / p at that stream's pilot
// elements (averaged when a subcarrier holds several), then piecewise-linear
// interpolation of each channel column across subcarriers with constant
// extrapolation beyond the outermost pilots. Throws EstimationImpossible.
std::vector<arma::cx_mat> pilot_ce(const std::vector<arma::cx_mat>& y,
                                   const PilotPattern& pattern, int user,
                                   std::complex<double> pilot_value);

// Relative throughput gain from reducing pilot overhead:
//   (1 - overhead_proposed) / (1 - overhead_baseline) - 1.
// Requires overheads in [0, 1); throws std::invalid_argument otherwise.
double theoretical_gain(double overhead_baseline, double overhead_proposed);

} // namespace jcesd::baseline

#endif

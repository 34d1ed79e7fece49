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
//
// Semi-blind receiver. Per frequency block the equivalent channel is treated
// as constant: the received samples are normalized, closed under the QAM
// sign/rotation symmetries, and fitted with the affine constellation fit
// (see fitting.hpp) started from a pilot least-squares estimate. The
// per-block estimates then seed an iterative per-subcarrier refinement:
// reliable symbols are selected by LLR, the channel is re-estimated by least
// squares on them, and symbols are re-detected by LMMSE.

#ifndef JCESD_RECEIVER_HPP
#define JCESD_RECEIVER_HPP

#include <armadillo>
#include <complex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "jcesd/fitting.hpp"
#include "jcesd/modem.hpp"

namespace jcesd::rx {

struct ReceiverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateStream : ReceiverError {
    DegenerateStream() : ReceiverError("stream has zero peak modulus, cannot normalize") {}
};
struct SingularPilot : ReceiverError {
    SingularPilot() : ReceiverError("pilot block is singular") {}
};
struct AmbiguityUnresolvable : ReceiverError {
    AmbiguityUnresolvable()
        : ReceiverError("two streams claim the same pilot position") {}
};
struct InsufficientSamples : ReceiverError {
    InsufficientSamples() : ReceiverError("no columns pass the reliability threshold") {}
};
struct DetectionFailure : ReceiverError {
    DetectionFailure() : ReceiverError("detector gain matrix has a zero diagonal entry") {}
};
struct OutOfRegime : ReceiverError {
    OutOfRegime() : ReceiverError("perturbation is outside the first-order regime") {}
};

// One user's combined receive grid. y[j] is num_streams x T. Pilot resource
// elements live at (pilot_subcarrier, symbol s) for stream s = 0..N_s-1:
// at that column stream s carries the nonzero corner pilot and all other
// streams are zero, so the pilot block across those columns is p_t * I.
struct ReceivedGrid {
    std::vector<arma::cx_mat> y;
    int pilot_subcarrier = 0;
};

// Peak normalization of one stream to target amplitude a: returns the scaled
// row and the applied factor a / max|y|. Throws DegenerateStream on an
// all-zero row.
std::pair<arma::cx_rowvec, double> normalize(const arma::cx_rowvec& y, double a);

// Pilot least squares consistent with Y ~ H X (symbols as columns):
//   H_hat = P_r P_t^H (P_t P_t^H)^-1,
// which reduces to P_r / p_t for the diagonal corner pilot and returns the
// exact channel for noiseless pilots. Throws SingularPilot.
arma::cx_mat ls_init(const arma::cx_mat& p_r, const arma::cx_mat& p_t);

// Post-equalization SINR estimate from the pilot block,
//   ||P_t||_F^2 / ||H_hat^-1 P_r - P_t||_F^2,
// capped at 1e12 (exact pilots give infinite ratio). Throws SingularPilot
// when h_hat is not invertible.
double estimate_sinr(const arma::cx_mat& p_r, const arma::cx_mat& p_t,
                     const arma::cx_mat& h_hat);

// Halves u0 until ||u0 * samples||_inf <= bound; identity operation when
// already feasible.
arma::mat feasible_start(const arma::mat& u0, const arma::mat& samples, double bound);

// Stream permutation and per-stream rotation correction applied by
// resolve_ambiguity. rotation[s] is the factor in {1, -1, i, -i} that was
// divided out of detected stream s; permutation[s] is the detected row that
// was moved to stream s.
struct AmbiguityLog {
    std::vector<int> permutation;
    std::vector<std::complex<double>> rotation;
};

// Undoes the fit's admissible-transform ambiguity using the pilot columns:
// the detected response z_s (soft symbols at pilot position s) identifies the
// stream carrying pilot s by largest modulus, and the rotation by the nearest
// quadrant of z / p_t (a rotation beyond 45 degrees selects the next power
// of i). x rows and h columns are transformed inversely so the product
// h * x is unchanged. Throws AmbiguityUnresolvable when the modulus rule
// does not produce a permutation.
AmbiguityLog resolve_ambiguity(arma::cx_mat& x_soft, arma::cx_mat& h,
                               const arma::uvec& pilot_columns,
                               std::complex<double> p_t);

// Columns of x_soft whose entries all have llr >= threshold; indices in
// always_keep are retained unconditionally. Throws InsufficientSamples when
// nothing survives.
arma::uvec llr_filter(const arma::cx_mat& x_soft, const modem::QamConstellation& c,
                      double noise_var, double threshold,
                      const arma::uvec& always_keep = {});

// Least-squares channel re-estimate from hard symbols, H = Y X^H (X X^H)^-1.
// Returns nullopt (skip refinement) when fewer columns than streams remain
// or the symbol Gram matrix is rank deficient.
std::optional<arma::cx_mat> ls_refine(const arma::cx_mat& x_hard,
                                      const arma::cx_mat& y);

// LMMSE equalization with per-stream bias removal:
//   G = H^H (H H^H + noise_var I)^-1,  X = diag(G H)^-1 G Y.
// noise_var = 0 degenerates to zero forcing for invertible H. Throws
// DetectionFailure when diag(G H) has a (near) zero entry.
arma::cx_mat lmmse_detect(const arma::cx_mat& h, const arma::cx_mat& y,
                          double noise_var);

struct BlockOptions {
    bool augment = true;      // close samples under sign/rotation symmetries
    bool normalize = true;    // peak-normalize each stream before fitting
    double kappa_max = 1e4;   // condition gate on the sample matrix
    double constraint_tol = 1e-8;
    double step_tol = 1e-9;
    int max_iterations = 500;
    bool active_subsampling = true;
};

struct BlockResult {
    arma::cx_mat h_eq;   // block-constant channel estimate (de-normalized)
    arma::cx_mat x_soft; // equalized samples, transmit-domain units
    arma::cx_mat x_hat;  // hard decisions
    arma::vec scale;     // per-stream normalization factors applied
    bool failed = false; // condition gate or solver failure
    int iterations = 0;  // fit iterations used
    AmbiguityLog log;
};

// One block of the semi-blind estimator: normalize, augment, condition-gate,
// fit from the halved reference start, undo the ambiguity. pilot_columns
// (indices into y_block) select the pilot resource elements when the block
// contains them; otherwise the ambiguity is resolved against the reference
// channel h_ref, which should be the best available estimate near this block
// (the pilot least-squares estimate, or an already-aligned neighbor block).
// sinr sets the fit box bound boundary + sqrt(1/sinr).
BlockResult semiblind_block(const arma::cx_mat& y_block, const arma::cx_mat& h_ref,
                            double sinr, const modem::QamConstellation& c,
                            const BlockOptions& opt,
                            const arma::uvec& pilot_columns = {});

struct JcesdConfig {
    const modem::QamConstellation* constellation = nullptr;
    int num_blocks = 8;     // frequency blocks, must divide the subcarrier count
    int num_iterations = 5; // refinement rounds
    double llr_threshold = 15.0;
    bool strict_fail = false; // propagate block failures instead of borrowing
    BlockOptions block;
};

struct EstimationResult {
    std::vector<arma::cx_mat> h_hat;         // final per-subcarrier estimates
    std::vector<arma::cx_mat> h_hat_initial; // block stage output (round 0)
    std::vector<arma::cx_mat> x_hat;         // hard symbols, pilots overwritten
    std::vector<AmbiguityLog> ambiguity_log; // per block
    std::vector<double> scale;               // pilot-block normalization factors
    double sinr_estimate = 0.0;
    int iterations_used = 0;
    int blocks_failed = 0;
    bool failed = false;      // strict mode: some block failed
    long fit_iterations = 0;  // total optimizer iterations (work counter)
};

// Full semi-blind receiver: pilot initialization, per-block fitting, failed
// blocks borrowing the nearest successful block's estimate (strict mode
// instead marks the result failed and skips refinement), then
// num_iterations rounds of llr_filter -> ls_refine -> lmmse_detect per
// subcarrier. The effective noise power used by the LLR and LMMSE stages is
// max(1e-3, 1/sinr_estimate).
EstimationResult jcesd(const ReceivedGrid& grid, const JcesdConfig& cfg);

// First-order sensitivity of inversion: returns (lhs, rhs) with
//   lhs = ||(H + D)^-1 - H^-1||_F,  rhs = ||H^-1||_2^2 ||D||_F.
// Throws OutOfRegime when ||H^-1 D||_2 >= 1 (Neumann series divergent).
std::pair<double, double> init_bound_check(const arma::cx_mat& h, const arma::cx_mat& d);

// Probability that a random start U0 with i.i.d. circular complex Gaussian
// entries of variance alpha^2 lands outside the epsilon-ball around u_star:
//   P(||U0 - u_star||_F > eps)
//   = Q_{n^2}(sqrt(2)||u_star||_F/alpha, sqrt(2) eps/alpha),
// n = dimension of u_star.
double random_init_exceedance(double eps, double alpha, const arma::cx_mat& u_star);

} // namespace jcesd::rx

#endif

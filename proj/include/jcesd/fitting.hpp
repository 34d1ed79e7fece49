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
// Affine constellation fitting. The received sample cloud Y = H X + N is an
// affine image of the QAM lattice; the fit searches for the de-mixing matrix
// U maximizing log|det U| subject to the box constraint
// ||U y_i||_inf <= bound for every sample. The maximizer is the inverse of
// the channel up to an admissible transform (stream permutation times
// per-stream rotation by a power of i).
//
// Everything runs in the real embedding: a complex matrix A maps to
// [[Re A, -Im A], [Im A, Re A]]. U is kept exactly on that structure by
// optimizing only the free blocks A = U_11 and B = U_21 (2*dim^2 real
// parameters, packed column-major as [vec(A); vec(B)]).

#ifndef JCESD_FITTING_HPP
#define JCESD_FITTING_HPP

#include <armadillo>
#include <stdexcept>
#include <utility>

namespace jcesd::fit {

struct FittingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleStart : FittingError {
    InfeasibleStart() : FittingError("initial point violates the sample box constraints") {}
};
struct DegenerateSamples : FittingError {
    DegenerateSamples() : FittingError("sample matrix rank is below the embedded dimension") {}
};
struct NumericalFailure : FittingError {
    using FittingError::FittingError;
};

enum class FitStatus { converged, max_iterations, infeasible_start };

struct FittingProblem {
    arma::mat samples;           // 2*dim x m real stack of received samples
    double bound = 0.0;          // per-coordinate box half width, > 0
    int dim = 0;                 // stream count (complex dimension)
    double constraint_tol = 1e-8;
    double step_tol = 1e-9;
    int max_iterations = 500;
    bool active_subsampling = true; // restrict subproblems to near-active samples
};

struct FittingSolution {
    arma::mat u;            // 2*dim x 2*dim, structure-exact
    double objective = 0.0; // log|det u|
    int iterations = 0;
    FitStatus status = FitStatus::converged;
};

// Real embedding of a complex matrix and its inverse map. complex_extract
// throws NumericalFailure when the matrix deviates from the embedded
// structure by more than tol (elementwise).
arma::mat real_embed(const arma::cx_mat& a);
arma::cx_mat complex_extract(const arma::mat& u, double tol = 1e-9);

// Parameter packing for the structured matrix.
arma::mat unpack(const arma::vec& params, int dim);
arma::vec pack(const arma::mat& u, int dim);

// log|det U(params)| and its gradient in the free parameters. The gradient
// folds the embedded adjoint back onto the structure:
//   d/dA = (U^-T)_11 + (U^-T)_22,  d/dB = (U^-T)_21 - (U^-T)_12.
// Throws NumericalFailure on a singular U.
std::pair<double, arma::vec> objective_and_gradient(const arma::vec& params, int dim);

// Feasible-point sequential quadratic programming. Starts from the feasible
// u0, keeps every iterate feasible (the constraints are linear in the
// parameters, so segments between feasible points stay feasible), uses a
// damped BFGS model of the objective curvature and a primal active-set QP
// for the step. Throws InfeasibleStart when u0 violates the box beyond
// constraint_tol and DegenerateSamples when the samples cannot pin a
// parallelepiped.
FittingSolution solve(const FittingProblem& problem, const arma::mat& u0);

} // namespace jcesd::fit

#endif

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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "jcesd/fitting.hpp"
#include "jcesd/modem.hpp"
#include "jcesd/receiver.hpp"
#include "jcesd/rng.hpp"

namespace {

using cxd = std::complex<double>;

arma::cx_mat random_cx(int rows, int cols, jcesd::Rng& rng) {
    arma::cx_mat m(rows, cols);
    for (auto& v : m)
        v = rng.cgaussian();
    return m;
}

// Real stack of a complex sample matrix: [Re; Im].
arma::mat real_stack(const arma::cx_mat& y) {
    return arma::join_cols(arma::mat(arma::real(y)), arma::mat(arma::imag(y)));
}

// All corner transmit vectors for dim streams of 4-QAM, one per column.
arma::cx_mat corner_vectors(const jcesd::modem::QamConstellation& c, int dim) {
    const int count = 1 << (2 * dim);
    arma::cx_mat x(dim, count);
    for (int i = 0; i < count; ++i)
        for (int s = 0; s < dim; ++s)
            x(s, i) = c.points[(i >> (2 * s)) & 3];
    return x;
}

// Every admissible transform for dim <= 2: stream permutation times a
// per-stream rotation by a power of i.
std::vector<arma::cx_mat> all_admissible_transforms(int dim) {
    const cxd rot[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    std::vector<std::vector<int>> perms;
    if (dim == 1)
        perms = {{0}};
    else
        perms = {{0, 1}, {1, 0}};
    std::vector<arma::cx_mat> out;
    for (const auto& perm : perms) {
        const int combos = dim == 1 ? 4 : 16;
        for (int c = 0; c < combos; ++c) {
            arma::cx_mat t(dim, dim, arma::fill::zeros);
            for (int s = 0; s < dim; ++s)
                t(s, perm[s]) = rot[(c >> (2 * s)) & 3];
            out.push_back(t);
        }
    }
    return out;
}

} // namespace

TEST_CASE("real_embedding_layout_and_determinant") {
    using jcesd::fit::real_embed;

    const arma::cx_mat eye2 = arma::cx_mat(2, 2, arma::fill::eye);
    CHECK(arma::norm(real_embed(eye2) - arma::mat(4, 4, arma::fill::eye), "fro") == 0.0);

    arma::cx_mat i_eye = eye2 * cxd(0.0, 1.0);
    const arma::mat e = real_embed(i_eye);
    arma::mat expected(4, 4, arma::fill::zeros);
    expected.submat(0, 2, 1, 3) = -arma::mat(2, 2, arma::fill::eye);
    expected.submat(2, 0, 3, 1) = arma::mat(2, 2, arma::fill::eye);
    CHECK(arma::norm(e - expected, "fro") == 0.0);

    // det(embed(A)) = |det A|^2.
    jcesd::Rng rng(31);
    for (int t = 0; t < 20; ++t) {
        const arma::cx_mat a = random_cx(3, 3, rng);
        const double lhs = arma::det(real_embed(a));
        const double rhs = std::norm(arma::det(a));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
        CHECK(lhs >= 0.0);
    }
}

TEST_CASE("complex_extract_inverts_the_embedding") {
    jcesd::Rng rng(32);
    const arma::cx_mat a = random_cx(3, 3, rng);
    const arma::mat u = jcesd::fit::real_embed(a);
    CHECK(arma::norm(jcesd::fit::complex_extract(u) - a, "fro") <= 1e-14);

    CHECK(arma::norm(jcesd::fit::complex_extract(arma::mat(4, 4, arma::fill::eye)) -
                         arma::cx_mat(2, 2, arma::fill::eye),
                     "fro") == 0.0);

    // Breaking the block structure beyond the tolerance is rejected.
    arma::mat broken = u;
    broken(0, 0) += 1e-3;
    CHECK_THROWS_AS(jcesd::fit::complex_extract(broken, 1e-9),
                    jcesd::fit::NumericalFailure);
    CHECK_NOTHROW(jcesd::fit::complex_extract(broken, 1e-2));
}

TEST_CASE("parameter_packing_round_trip") {
    const int dim = 3;
    jcesd::Rng rng(33);
    arma::vec params(2 * dim * dim);
    for (auto& v : params)
        v = rng.gaussian();

    const arma::mat u = jcesd::fit::unpack(params, dim);
    REQUIRE(u.n_rows == 2 * static_cast<arma::uword>(dim));

    // The unpacked matrix is structure-exact: U11 = U22 and U12 = -U21.
    const arma::mat u11 = u.submat(0, 0, dim - 1, dim - 1);
    const arma::mat u12 = u.submat(0, dim, dim - 1, 2 * dim - 1);
    const arma::mat u21 = u.submat(dim, 0, 2 * dim - 1, dim - 1);
    const arma::mat u22 = u.submat(dim, dim, 2 * dim - 1, 2 * dim - 1);
    CHECK(arma::norm(u11 - u22, "fro") == 0.0);
    CHECK(arma::norm(u12 + u21, "fro") == 0.0);

    CHECK(arma::norm(jcesd::fit::pack(u, dim) - params) == 0.0);

    // pack/unpack agree with the complex embedding maps.
    const arma::cx_mat a(u11, u21);
    CHECK(arma::norm(jcesd::fit::real_embed(a) - u, "fro") == 0.0);
}

TEST_CASE("objective_value_known_cases") {
    // U = I: log|det| = 0 and the gradient is the structure projection of
    // the identity adjoint (d/dA = 2I for the doubled diagonal blocks).
    const int dim = 2;
    arma::vec p_eye = jcesd::fit::pack(arma::mat(4, 4, arma::fill::eye), dim);
    CHECK(std::abs(jcesd::fit::objective_and_gradient(p_eye, dim).first) <= 1e-14);

    // U = 2I in the one-stream embedding: log det(2 I_2) = ln 4.
    arma::vec p2(2, arma::fill::zeros);
    p2(0) = 2.0;
    CHECK(std::abs(jcesd::fit::objective_and_gradient(p2, 1).first - std::log(4.0)) <=
          1e-12);

    arma::vec p_zero(2, arma::fill::zeros);
    CHECK_THROWS_AS(jcesd::fit::objective_and_gradient(p_zero, 1),
                    jcesd::fit::NumericalFailure);
}

TEST_CASE("gradient_matches_central_finite_differences") {
    jcesd::Rng rng(34);
    for (int dim : {2, 3}) {
        for (int trial = 0; trial < 5; ++trial) {
            arma::vec params(2 * dim * dim);
            for (auto& v : params)
                v = rng.gaussian();
            // Keep away from the singular set.
            params(0) += 3.0;

            const auto [value, grad] = jcesd::fit::objective_and_gradient(params, dim);
            REQUIRE(grad.n_elem == params.n_elem);

            const double h = 1e-6;
            for (arma::uword i = 0; i < params.n_elem; ++i) {
                arma::vec p = params;
                p(i) += h;
                const double fp = jcesd::fit::objective_and_gradient(p, dim).first;
                p(i) -= 2.0 * h;
                const double fm = jcesd::fit::objective_and_gradient(p, dim).first;
                const double fd = (fp - fm) / (2.0 * h);
                CHECK(std::abs(grad(i) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("solve_unit_cube_recovers_identity") {
    // The sign-vector cloud scaled by the bound is its own maximal fit; the
    // optimum inflates U from I/2 back to I.
    for (int dim : {1, 2}) {
        const int n = 2 * dim;
        const double bound = 0.83;
        arma::mat samples(n, 1 << n);
        for (int c = 0; c < (1 << n); ++c)
            for (int r = 0; r < n; ++r)
                samples(r, c) = ((c >> r) & 1) ? bound : -bound;

        jcesd::fit::FittingProblem problem;
        problem.samples = samples;
        problem.bound = bound;
        problem.dim = dim;

        const arma::mat u0 = 0.5 * arma::mat(n, n, arma::fill::eye);
        const auto sol = jcesd::fit::solve(problem, u0);
        CHECK(sol.status == jcesd::fit::FitStatus::converged);
        CHECK(arma::norm(sol.u - arma::mat(n, n, arma::fill::eye), "fro") <= 1e-6);
        CHECK(std::abs(sol.objective) <= 1e-8);
        CHECK(sol.iterations > 0);
    }
}

TEST_CASE("solve_noiseless_corners_recover_channel_up_to_transform") {
    const auto c = jcesd::modem::make_constellation(4);
    jcesd::Rng rng(35);
    for (int dim : {1, 2}) {
        const arma::cx_mat x = corner_vectors(c, dim);
        arma::cx_mat h;
        do {
            h = random_cx(dim, dim, rng);
        } while (arma::cond(h) > 5.0);

        jcesd::fit::FittingProblem problem;
        problem.samples = real_stack(h * x);
        problem.bound = c.boundary;
        problem.dim = dim;

        const arma::mat u0 = jcesd::rx::feasible_start(
            jcesd::fit::real_embed(arma::inv(h)), problem.samples, problem.bound);
        const auto sol = jcesd::fit::solve(problem, u0);

        // U* H must be an admissible transform.
        const arma::cx_mat uh = jcesd::fit::complex_extract(sol.u) * h;
        double best = 1e300;
        for (const auto& t : all_admissible_transforms(dim))
            best = std::min(best, arma::norm(uh - t, "fro"));
        CHECK(best <= 1e-4);
    }
}

TEST_CASE("solve_scaling_homogeneity") {
    const auto c = jcesd::modem::make_constellation(4);
    jcesd::Rng rng(36);
    const int dim = 2;
    const arma::cx_mat x =
        arma::join_rows(corner_vectors(c, dim), random_cx(dim, 32, rng) * 0.4);
    arma::cx_mat h;
    do {
        h = random_cx(dim, dim, rng);
    } while (arma::cond(h) > 5.0);

    jcesd::fit::FittingProblem problem;
    problem.samples = real_stack(h * x);
    problem.bound = c.boundary;
    problem.dim = dim;
    const arma::mat u0 = jcesd::rx::feasible_start(
        jcesd::fit::real_embed(arma::inv(h)), problem.samples, problem.bound);
    const auto base = jcesd::fit::solve(problem, u0);

    // Scaling the samples with the bound fixed scales the argmax inversely:
    // ||U (factor Y)||_inf <= b is the constraint of the base problem at
    // U * factor.
    const double factor = 3.7;
    jcesd::fit::FittingProblem scaled = problem;
    scaled.samples *= factor;
    const arma::mat u0s = jcesd::rx::feasible_start(
        jcesd::fit::real_embed(arma::inv(h)) / factor, scaled.samples, scaled.bound);
    const auto rescaled = jcesd::fit::solve(scaled, u0s);

    // The rescaled argmax lies in the same admissible-transform orbit (the
    // solver may settle on another representative of the equivalence class)
    // and attains the homogeneity-shifted optimum: det scales by the factor
    // raised to the real-embedded dimension.
    const arma::cx_mat base_cx = jcesd::fit::complex_extract(base.u, 1e-2);
    const arma::cx_mat resc_cx =
        factor * jcesd::fit::complex_extract(rescaled.u, 1e-2);
    double orbit_dist = 1e300;
    for (const auto& t : all_admissible_transforms(dim))
        orbit_dist =
            std::min(orbit_dist, arma::norm(arma::cx_mat(t * resc_cx - base_cx), "fro"));
    CHECK(orbit_dist <= 1e-3);

    const double logdet_base = std::log(std::abs(arma::det(base.u)));
    const double logdet_scaled = std::log(std::abs(arma::det(rescaled.u)));
    CHECK(std::abs(logdet_scaled + 2.0 * dim * std::log(factor) - logdet_base) <=
          1e-6);
}

TEST_CASE("solve_augmentation_invariance") {
    // Closing the cloud under the sign/rotation symmetries does not move the
    // structured optimum.
    const auto c = jcesd::modem::make_constellation(4);
    jcesd::Rng rng(37);
    const int dim = 2;
    const arma::cx_mat x = corner_vectors(c, dim);
    arma::cx_mat h;
    do {
        h = random_cx(dim, dim, rng);
    } while (arma::cond(h) > 5.0);
    const arma::cx_mat y = h * x;

    jcesd::fit::FittingProblem plain;
    plain.samples = real_stack(y);
    plain.bound = c.boundary;
    plain.dim = dim;
    const arma::mat u0 = jcesd::rx::feasible_start(
        jcesd::fit::real_embed(arma::inv(h)), plain.samples, plain.bound);

    jcesd::fit::FittingProblem closed = plain;
    closed.samples = real_stack(jcesd::modem::augment(y));

    const auto sol_plain = jcesd::fit::solve(plain, u0);
    const auto sol_closed = jcesd::fit::solve(closed, u0);
    CHECK(arma::norm(sol_plain.u - sol_closed.u, "fro") <= 1e-6);
}

TEST_CASE("solve_keeps_iterates_feasible_and_monotone") {
    jcesd::Rng rng(38);
    const int dim = 2;
    const arma::cx_mat y = random_cx(dim, 48, rng);

    jcesd::fit::FittingProblem problem;
    problem.samples = real_stack(jcesd::modem::augment(y));
    problem.dim = dim;
    problem.bound = 1.0;

    const arma::mat u0 = jcesd::rx::feasible_start(
        arma::mat(2 * dim, 2 * dim, arma::fill::eye), problem.samples, problem.bound);
    const double start_objective =
        jcesd::fit::objective_and_gradient(jcesd::fit::pack(u0, dim), dim).first;

    const auto sol = jcesd::fit::solve(problem, u0);
    CHECK(arma::abs(sol.u * problem.samples).max() <= problem.bound + 1e-8);
    CHECK(sol.objective >= start_objective - 1e-9);

    // The reported solution matrix is structure-exact.
    const arma::mat round_trip =
        jcesd::fit::unpack(jcesd::fit::pack(sol.u, dim), dim);
    CHECK(arma::norm(sol.u - round_trip, "fro") == 0.0);
}

TEST_CASE("solve_rejects_bad_starts_and_degenerate_clouds") {
    const int dim = 1;
    arma::mat cube(2, 4);
    cube = {{1.0, 1.0, -1.0, -1.0}, {1.0, -1.0, 1.0, -1.0}};

    jcesd::fit::FittingProblem problem;
    problem.samples = cube;
    problem.bound = 1.0;
    problem.dim = dim;
    CHECK_THROWS_AS(
        jcesd::fit::solve(problem, 10.0 * arma::mat(2, 2, arma::fill::eye)),
        jcesd::fit::InfeasibleStart);

    // A rank-deficient cloud cannot pin a parallelepiped.
    jcesd::fit::FittingProblem degenerate;
    degenerate.samples = arma::repmat(arma::vec{1.0, 0.5}, 1, 8);
    degenerate.bound = 1.0;
    degenerate.dim = dim;
    CHECK_THROWS_AS(
        jcesd::fit::solve(degenerate, 0.1 * arma::mat(2, 2, arma::fill::eye)),
        jcesd::fit::DegenerateSamples);
}

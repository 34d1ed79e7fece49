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
// The fit maximizes log|det U| over the structured matrices U subject to
// ||U y_i||_inf <= bound. In the free parameters the constraints are exactly
// linear, the feasible set is a convex polytope, and the start produced by
// the receiver's halving loop is interior. The solver below exploits this:
// a sequential quadratic programming loop whose iterates never leave the
// polytope. Each step direction comes from a primal active-set QP over the
// constraints of near-active samples; an exact ratio test against the full
// sample set caps the step, so feasibility is maintained without a merit
// function, and a backtracking line search enforces monotone ascent of
// log|det U| (rejecting steps that cross the det = 0 surface).

#include "jcesd/fitting.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace jcesd::fit {

namespace {

constexpr double kTiny = 1e-13;

// Samples equal up to a factor in {1, -1, i, -i} generate identical
// constraint boxes |(U y)_r| <= b, so one representative per orbit suffices.
// Augmented inputs [Y, -Y, iY, -iY] collapse back to Y here, which keeps
// exact duplicates out of the working-set linear algebra.
arma::mat dedupe_symmetric(const arma::mat& samples, int dim) {
    const arma::uword rows = samples.n_rows;
    std::set<std::vector<double>> seen;
    std::vector<arma::uword> keep;
    keep.reserve(samples.n_cols);
    for (arma::uword j = 0; j < samples.n_cols; ++j) {
        arma::vec v = samples.col(j);
        arma::vec best = v;
        for (int k = 0; k < 3; ++k) {
            // One quarter turn: (re, im) -> (-im, re), exact in floating point.
            arma::vec w(rows);
            w.head(dim) = -v.tail(dim);
            w.tail(dim) = v.head(dim);
            v = w;
            bool greater = false;
            for (arma::uword i = 0; i < rows; ++i) {
                if (v(i) != best(i)) {
                    greater = v(i) > best(i);
                    break;
                }
            }
            if (greater)
                best = v;
        }
        if (seen.insert(std::vector<double>(best.begin(), best.end())).second)
            keep.push_back(j);
    }
    if (keep.size() == samples.n_cols)
        return samples;
    return samples.cols(arma::uvec(keep));
}

// Gradient row of the linear form (U y)_r in the packed parameters.
// For r < dim:      (U y)_r = sum_q A(r,q) y_top(q) - B(r,q) y_bot(q)
// For r >= dim:     (U y)_r = sum_q B(r-dim,q) y_top(q) + A(r-dim,q) y_bot(q)
void constraint_row(const arma::vec& y, int dim, int r, double sign, arma::mat& a,
                    arma::uword out_row) {
    const int n2 = dim * dim;
    if (r < dim) {
        for (int q = 0; q < dim; ++q) {
            a(out_row, static_cast<arma::uword>(q) * dim + r) = sign * y(q);
            a(out_row, static_cast<arma::uword>(n2) + q * dim + r) = -sign * y(dim + q);
        }
    } else {
        const int rr = r - dim;
        for (int q = 0; q < dim; ++q) {
            a(out_row, static_cast<arma::uword>(q) * dim + rr) = sign * y(dim + q);
            a(out_row, static_cast<arma::uword>(n2) + q * dim + rr) = sign * y(q);
        }
    }
}

struct QpResult {
    arma::vec d;
    bool kkt_ok = false;
};

// min 0.5 d^T B d + g^T d subject to A d <= s, s >= 0, from d = 0.
// Primal active set with a null-space KKT solve; working-set rows are kept
// linearly independent (a dependent row can never block a null-space step,
// so skipping one is safe).
QpResult qp_active_set(const arma::mat& b, const arma::vec& g, const arma::mat& a,
                       const arma::vec& s) {
    const arma::uword n = g.n_elem;
    const arma::uword m = a.n_rows;
    QpResult res;
    res.d = arma::vec(n, arma::fill::zeros);

    std::vector<arma::uword> w; // working set (row indices into a)
    std::vector<char> in_w(m, 0);
    const double gscale = std::max(1.0, arma::norm(g, "inf"));
    const double p_tol = 1e-11 * gscale;
    const double mu_tol = 1e-9 * gscale;
    const int max_inner = static_cast<int>(3 * m + 10 * n + 10);

    for (int it = 0; it < max_inner; ++it) {
        // Equality-constrained step p on the current working set.
        arma::vec rhs = g + b * res.d;
        arma::vec p;
        arma::mat aw;
        if (w.empty()) {
            if (!arma::solve(p, b, -rhs,
                             arma::solve_opts::likely_sympd + arma::solve_opts::no_approx))
                p = -rhs; // gradient fallback when the model solve fails
        } else {
            aw.set_size(w.size(), n);
            for (arma::uword i = 0; i < w.size(); ++i)
                aw.row(i) = a.row(w[i]);
            arma::mat q_full, r_full;
            if (!arma::qr(q_full, r_full, aw.t()))
                break;
            if (w.size() >= n) {
                p = arma::vec(n, arma::fill::zeros);
            } else {
                const arma::mat z = q_full.cols(w.size(), n - 1);
                const arma::mat hz = z.t() * b * z;
                arma::vec pz;
                if (!arma::solve(pz, hz, -(z.t() * rhs),
                                 arma::solve_opts::likely_sympd + arma::solve_opts::no_approx))
                    pz = -(z.t() * rhs);
                p = z * pz;
            }
        }

        if (arma::norm(p, "inf") <= p_tol) {
            if (w.empty()) {
                res.kkt_ok = true;
                return res;
            }
            // Multipliers: B d + g + Aw^T mu = 0.
            arma::vec mu;
            const arma::mat gram = aw * aw.t();
            if (!arma::solve(mu, gram, -(aw * rhs), arma::solve_opts::no_approx))
                mu = -arma::pinv(gram) * (aw * rhs);
            arma::uword worst = 0;
            double worst_val = mu(0);
            for (arma::uword i = 1; i < mu.n_elem; ++i)
                if (mu(i) < worst_val) {
                    worst_val = mu(i);
                    worst = i;
                }
            if (worst_val >= -mu_tol) {
                res.kkt_ok = true;
                return res;
            }
            in_w[w[worst]] = 0;
            w.erase(w.begin() + worst);
            continue;
        }

        // Ratio test against rows outside the working set.
        const arma::vec ap = a * p;
        const arma::vec ad = a * res.d;
        double alpha = 1.0;
        arma::sword blocker = -1;
        for (arma::uword i = 0; i < m; ++i) {
            if (in_w[i] || ap(i) <= kTiny)
                continue;
            const double room = std::max(0.0, s(i) - ad(i));
            const double ai = room / ap(i);
            if (ai < alpha - 1e-15) {
                alpha = ai;
                blocker = static_cast<arma::sword>(i);
            }
        }
        res.d += alpha * p;
        if (blocker < 0)
            continue; // full step; next pass checks optimality
        // Independence guard before adding the blocking row.
        bool dependent = false;
        if (!w.empty()) {
            arma::mat q_full, r_full;
            if (arma::qr(q_full, r_full, aw.t())) {
                const arma::mat qr_range = q_full.cols(0, w.size() - 1);
                const arma::vec arow = a.row(static_cast<arma::uword>(blocker)).t();
                const arma::vec resid = arow - qr_range * (qr_range.t() * arow);
                dependent = arma::norm(resid, 2) <= 1e-10 * std::max(1.0, arma::norm(arow, 2));
            }
        }
        if (dependent) {
            if (alpha <= 1e-14)
                break; // degenerate tie, no progress possible
            continue;
        }
        in_w[static_cast<arma::uword>(blocker)] = 1;
        w.push_back(static_cast<arma::uword>(blocker));
    }
    return res;
}

} // namespace

arma::mat real_embed(const arma::cx_mat& a) {
    const arma::mat re = arma::real(a);
    const arma::mat im = arma::imag(a);
    return arma::join_cols(arma::join_rows(re, -im), arma::join_rows(im, re));
}

arma::cx_mat complex_extract(const arma::mat& u, double tol) {
    if (u.n_rows != u.n_cols || u.n_rows % 2 != 0)
        throw NumericalFailure("matrix is not an even-dimension square");
    const arma::uword d = u.n_rows / 2;
    const arma::mat a11 = u.submat(0, 0, d - 1, d - 1);
    const arma::mat a12 = u.submat(0, d, d - 1, 2 * d - 1);
    const arma::mat a21 = u.submat(d, 0, 2 * d - 1, d - 1);
    const arma::mat a22 = u.submat(d, d, 2 * d - 1, 2 * d - 1);
    const double scale = std::max(1.0, arma::norm(u, "inf"));
    if (arma::norm(a11 - a22, "inf") > tol * scale ||
        arma::norm(a12 + a21, "inf") > tol * scale)
        throw NumericalFailure("matrix violates the complex embedding structure");
    return arma::cx_mat(a11, a21);
}

arma::mat unpack(const arma::vec& params, int dim) {
    if (dim < 1 || params.n_elem != static_cast<arma::uword>(2 * dim * dim))
        throw std::invalid_argument("parameter vector size does not match dimension");
    const arma::uword n2 = static_cast<arma::uword>(dim) * dim;
    const arma::mat a = arma::reshape(params.subvec(0, n2 - 1), dim, dim);
    const arma::mat b = arma::reshape(params.subvec(n2, 2 * n2 - 1), dim, dim);
    return arma::join_cols(arma::join_rows(a, -b), arma::join_rows(b, a));
}

arma::vec pack(const arma::mat& u, int dim) {
    if (u.n_rows != static_cast<arma::uword>(2 * dim) || u.n_cols != u.n_rows)
        throw std::invalid_argument("matrix size does not match dimension");
    arma::vec params(2 * static_cast<arma::uword>(dim) * dim);
    const arma::mat a = u.submat(0, 0, dim - 1, dim - 1);
    const arma::mat b = u.submat(dim, 0, 2 * dim - 1, dim - 1);
    params.subvec(0, dim * dim - 1) = arma::vectorise(a);
    params.subvec(dim * dim, 2 * dim * dim - 1) = arma::vectorise(b);
    return params;
}

std::pair<double, arma::vec> objective_and_gradient(const arma::vec& params, int dim) {
    const arma::mat u = unpack(params, dim);
    arma::mat u_inv;
    if (!arma::inv(u_inv, u))
        throw NumericalFailure("singular matrix in objective evaluation");
    const std::complex<double> ld = arma::log_det(u);
    const double value = ld.real(); // log|det|

    const arma::mat g = u_inv.t(); // adjoint of d(log|det U|)/dU
    arma::vec grad(params.n_elem);
    const int n2 = dim * dim;
    for (int q = 0; q < dim; ++q) {
        for (int p = 0; p < dim; ++p) {
            grad(static_cast<arma::uword>(q) * dim + p) =
                g(p, q) + g(dim + p, dim + q);
            grad(static_cast<arma::uword>(n2) + q * dim + p) =
                g(dim + p, q) - g(p, dim + q);
        }
    }
    return {value, grad};
}

FittingSolution solve(const FittingProblem& problem, const arma::mat& u0) {
    const int dim = problem.dim;
    if (dim < 1)
        throw std::invalid_argument("dimension must be positive");
    if (problem.bound <= 0.0)
        throw std::invalid_argument("bound must be positive");
    if (problem.samples.n_rows != static_cast<arma::uword>(2 * dim))
        throw std::invalid_argument("sample rows do not match the embedded dimension");
    if (problem.samples.n_cols < static_cast<arma::uword>(2 * dim))
        throw DegenerateSamples();
    if (arma::rank(problem.samples) < static_cast<arma::uword>(2 * dim))
        throw DegenerateSamples();
    const arma::mat samples = dedupe_symmetric(problem.samples, dim);

    const arma::uword n = 2 * static_cast<arma::uword>(dim) * dim;
    const arma::uword m = samples.n_cols;
    const double bound = problem.bound;

    arma::vec x = pack(u0, dim);
    arma::mat act = unpack(x, dim) * samples;
    if (act.max() > bound + problem.constraint_tol ||
        act.min() < -bound - problem.constraint_tol)
        throw InfeasibleStart();

    double f;
    arma::vec g;
    try {
        std::tie(f, g) = objective_and_gradient(x, dim);
    } catch (const NumericalFailure&) {
        throw NumericalFailure("singular start");
    }

    arma::mat bmat(n, n, arma::fill::eye);
    FittingSolution sol;
    sol.status = FitStatus::max_iterations;
    int slow_progress = 0;

    int iter = 0;
    for (; iter < problem.max_iterations; ++iter) {
        // Near-active sample selection (activity within 5% of the bound).
        arma::uvec selected;
        if (problem.active_subsampling) {
            const arma::rowvec activity = arma::max(arma::abs(act), 0);
            selected = arma::find(activity.t() >= 0.95 * bound);
            const arma::uword min_keep = std::min(m, std::max<arma::uword>(2 * n, 16));
            if (selected.n_elem < min_keep) {
                const arma::uvec order = arma::sort_index(arma::vec(activity.t()), "descend");
                selected = order.head(std::min(min_keep, order.n_elem));
            }
        } else {
            selected = arma::regspace<arma::uvec>(0, m - 1);
        }

        const arma::uword rows = selected.n_elem * 4 * dim;
        arma::mat a(rows, n, arma::fill::zeros);
        arma::vec s(rows);
        arma::uword out = 0;
        for (arma::uword sel = 0; sel < selected.n_elem; ++sel) {
            const arma::vec y = samples.col(selected(sel));
            for (int r = 0; r < 2 * dim; ++r) {
                constraint_row(y, dim, r, +1.0, a, out);
                s(out) = std::max(0.0, bound - act(r, selected(sel)));
                ++out;
                constraint_row(y, dim, r, -1.0, a, out);
                s(out) = std::max(0.0, bound + act(r, selected(sel)));
                ++out;
            }
        }

        const QpResult qp = qp_active_set(bmat, -g, a, s);
        const arma::vec& d = qp.d;
        const double d_norm = arma::norm(d, "inf");
        if (d_norm <= problem.step_tol * (1.0 + arma::norm(x, "inf")) && qp.kkt_ok) {
            sol.status = FitStatus::converged;
            break;
        }
        if (d_norm <= kTiny) {
            // No usable direction; treat as converged when the QP stalled on
            // degeneracy, the outer loop cannot make progress either way.
            sol.status = FitStatus::converged;
            break;
        }

        // Exact feasible range along d over the full sample set.
        const arma::mat tdir = unpack(d, dim) * samples;
        double alpha_max = std::numeric_limits<double>::infinity();
        for (arma::uword j = 0; j < m; ++j) {
            for (arma::uword r = 0; r < static_cast<arma::uword>(2 * dim); ++r) {
                const double t = tdir(r, j);
                if (t > kTiny)
                    alpha_max = std::min(alpha_max, (bound - act(r, j)) / t);
                else if (t < -kTiny)
                    alpha_max = std::min(alpha_max, (bound + act(r, j)) / (-t));
            }
        }
        alpha_max = std::max(0.0, alpha_max);

        // Backtracking ascent on log|det U|.
        const double dir_deriv = arma::dot(g, d); // > 0 for a QP descent step on -f
        double alpha = std::min(1.0, alpha_max);
        bool accepted = false;
        double f_new = f;
        arma::vec x_new;
        while (alpha > 1e-14) {
            x_new = x + alpha * d;
            try {
                const auto [fv, gv] = objective_and_gradient(x_new, dim);
                (void)gv;
                if (fv >= f + 1e-4 * alpha * dir_deriv) {
                    f_new = fv;
                    accepted = true;
                    break;
                }
            } catch (const NumericalFailure&) {
                // det crossed zero inside the trial step; shrink
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            sol.status = FitStatus::converged;
            break;
        }

        auto [fv2, g_new] = objective_and_gradient(x_new, dim);
        f_new = fv2;

        // Damped BFGS update of the curvature model of -log|det U|.
        const arma::vec step = x_new - x;
        const arma::vec yv = g - g_new; // gradient change of the minimized -f
        const arma::vec bs = bmat * step;
        const double sbs = arma::dot(step, bs);
        double sy = arma::dot(step, yv);
        if (sbs > kTiny) {
            arma::vec y_eff = yv;
            if (sy < 0.2 * sbs) {
                const double theta = 0.8 * sbs / (sbs - sy);
                y_eff = theta * yv + (1.0 - theta) * bs;
                sy = arma::dot(step, y_eff);
            }
            if (sy > kTiny)
                bmat += (y_eff * y_eff.t()) / sy - (bs * bs.t()) / sbs;
        }

        const double improvement = f_new - f;
        x = x_new;
        g = g_new;
        f = f_new;
        act = unpack(x, dim) * samples;

        if (improvement <= problem.step_tol * (1.0 + std::abs(f))) {
            if (++slow_progress >= 2) {
                sol.status = FitStatus::converged;
                ++iter;
                break;
            }
        } else {
            slow_progress = 0;
        }
    }

    if (!std::isfinite(f))
        throw NumericalFailure("objective became non-finite");

    sol.u = unpack(x, dim);
    sol.objective = f;
    sol.iterations = iter;
    return sol;
}

} // namespace jcesd::fit

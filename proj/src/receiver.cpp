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

#include "jcesd/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "jcesd/stats.hpp"

namespace jcesd::rx {

namespace {

constexpr double kSinrCap = 1e12;

// Admissible per-stream rotations, checked in this order (ties keep the
// earlier candidate, so a rotation must exceed 45 degrees to be corrected).
const std::complex<double> kRotations[4] = {
    {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};

std::complex<double> choose_rotation(std::complex<double> w) {
    int best = 0;
    double best_align = std::real(w * std::conj(kRotations[0]));
    for (int cidx = 1; cidx < 4; ++cidx) {
        const double align = std::real(w * std::conj(kRotations[cidx]));
        if (align > best_align) {
            best_align = align;
            best = cidx;
        }
    }
    return kRotations[best];
}

void apply_transform(arma::cx_mat& x, arma::cx_mat& h, const AmbiguityLog& log) {
    const int dim = static_cast<int>(log.permutation.size());
    arma::cx_mat x_corr(x.n_rows, x.n_cols);
    arma::cx_mat h_corr(h.n_rows, h.n_cols);
    for (int s = 0; s < dim; ++s) {
        const int r = log.permutation[s];
        const std::complex<double> c = log.rotation[s];
        x_corr.row(s) = x.row(r) / c; // X = T^-1 X_detected
        h_corr.col(s) = h.col(r) * c; // H = H_detected T, product preserved
    }
    x = std::move(x_corr);
    h = std::move(h_corr);
}

// Detects the admissible transform T from the matrix z whose column s should
// equal T * (p_t e_s), and removes it from (x, h) in place. Each column claims
// its largest-modulus row; a collision means the pilots cannot separate the
// streams.
AmbiguityLog apply_ambiguity_correction(arma::cx_mat& x, arma::cx_mat& h,
                                        const arma::cx_mat& z,
                                        std::complex<double> p_t) {
    const int dim = static_cast<int>(z.n_rows);
    AmbiguityLog log;
    log.permutation.resize(dim);
    log.rotation.resize(dim);

    std::vector<char> used(dim, 0);
    for (int s = 0; s < dim; ++s) {
        arma::uword r = arma::abs(z.col(s)).index_max();
        if (used[r])
            throw AmbiguityUnresolvable();
        used[r] = 1;
        log.permutation[s] = static_cast<int>(r);
        log.rotation[s] = choose_rotation(z(r, s) / p_t);
    }
    apply_transform(x, h, log);
    return log;
}

// Variant for blocks without literal pilots: the reference z is synthesized
// from the pilot least-squares channel and is noisier than true pilot
// columns, so independent per-column argmax can collide. The permutation
// maximizing the total claimed modulus never does.
AmbiguityLog align_ambiguity(arma::cx_mat& x, arma::cx_mat& h,
                             const arma::cx_mat& z, std::complex<double> p_t) {
    const int dim = static_cast<int>(z.n_rows);
    const arma::mat mag = arma::abs(z);
    std::vector<int> best_perm(dim);
    if (dim <= 8) {
        std::vector<int> perm(dim);
        for (int s = 0; s < dim; ++s)
            perm[s] = s;
        double best_sum = -1.0;
        do {
            double sum = 0.0;
            for (int s = 0; s < dim; ++s)
                sum += mag(perm[s], s);
            if (sum > best_sum) {
                best_sum = sum;
                best_perm = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        // Greedy strip-out, adequate for large stream counts.
        std::vector<char> row_used(dim, 0), col_used(dim, 0);
        for (int pick = 0; pick < dim; ++pick) {
            double best_val = -1.0;
            int br = 0, bc = 0;
            for (int r = 0; r < dim; ++r)
                for (int s = 0; s < dim; ++s)
                    if (!row_used[r] && !col_used[s] && mag(r, s) > best_val) {
                        best_val = mag(r, s);
                        br = r;
                        bc = s;
                    }
            row_used[br] = 1;
            col_used[bc] = 1;
            best_perm[bc] = br;
        }
    }

    AmbiguityLog log;
    log.permutation.resize(dim);
    log.rotation.resize(dim);
    for (int s = 0; s < dim; ++s) {
        log.permutation[s] = best_perm[s];
        log.rotation[s] = choose_rotation(z(best_perm[s], s) / p_t);
    }
    apply_transform(x, h, log);
    return log;
}

arma::cx_mat hard_decide(const arma::cx_mat& soft, const modem::QamConstellation& c) {
    arma::cx_mat hard(soft.n_rows, soft.n_cols);
    for (arma::uword j = 0; j < soft.n_cols; ++j)
        for (arma::uword i = 0; i < soft.n_rows; ++i)
            hard(i, j) = modem::nearest(soft(i, j), c).first;
    return hard;
}

} // namespace

std::pair<arma::cx_rowvec, double> normalize(const arma::cx_rowvec& y, double a) {
    if (a <= 0.0)
        throw std::invalid_argument("normalization target must be positive");
    const double peak = y.n_elem ? arma::abs(y).max() : 0.0;
    if (peak <= 0.0)
        throw DegenerateStream();
    const double scale = a / peak;
    return {scale * y, scale};
}

arma::cx_mat ls_init(const arma::cx_mat& p_r, const arma::cx_mat& p_t) {
    if (p_r.n_rows != p_t.n_rows || p_r.n_cols != p_t.n_cols)
        throw std::invalid_argument("pilot dimensions mismatch");
    arma::cx_mat gram_inv;
    if (!arma::inv(gram_inv, p_t * p_t.t()))
        throw SingularPilot();
    return p_r * p_t.t() * gram_inv;
}

double estimate_sinr(const arma::cx_mat& p_r, const arma::cx_mat& p_t,
                     const arma::cx_mat& h_hat) {
    arma::cx_mat h_inv;
    if (!arma::inv(h_inv, h_hat))
        throw SingularPilot();
    const double num = std::pow(arma::norm(p_t, "fro"), 2);
    const double den = std::pow(arma::norm(h_inv * p_r - p_t, "fro"), 2);
    if (den <= num / kSinrCap)
        return kSinrCap;
    return std::min(kSinrCap, num / den);
}

arma::mat feasible_start(const arma::mat& u0, const arma::mat& samples, double bound) {
    if (bound <= 0.0)
        throw std::invalid_argument("bound must be positive");
    arma::mat u = u0;
    for (int i = 0; i < 2048; ++i) {
        const arma::mat act = u * samples;
        if (act.n_elem == 0 || arma::abs(act).max() <= bound)
            return u;
        u *= 0.5;
    }
    throw fit::NumericalFailure("halving loop failed to reach feasibility");
}

AmbiguityLog resolve_ambiguity(arma::cx_mat& x_soft, arma::cx_mat& h,
                               const arma::uvec& pilot_columns,
                               std::complex<double> p_t) {
    if (pilot_columns.n_elem != x_soft.n_rows)
        throw std::invalid_argument("need one pilot column per stream");
    const arma::cx_mat z = x_soft.cols(pilot_columns);
    return apply_ambiguity_correction(x_soft, h, z, p_t);
}

arma::uvec llr_filter(const arma::cx_mat& x_soft, const modem::QamConstellation& c,
                      double noise_var, double threshold,
                      const arma::uvec& always_keep) {
    std::vector<char> keep(x_soft.n_cols, 0);
    for (arma::uword k : always_keep)
        keep[k] = 1;
    const modem::LlrParams lp{noise_var, 1e-3};
    std::vector<arma::uword> kept;
    for (arma::uword j = 0; j < x_soft.n_cols; ++j) {
        bool ok = keep[j] != 0;
        if (!ok) {
            ok = true;
            for (arma::uword i = 0; i < x_soft.n_rows && ok; ++i)
                ok = modem::llr(x_soft(i, j), c, lp) >= threshold;
        }
        if (ok)
            kept.push_back(j);
    }
    if (kept.empty())
        throw InsufficientSamples();
    return arma::uvec(kept);
}

std::optional<arma::cx_mat> ls_refine(const arma::cx_mat& x_hard,
                                      const arma::cx_mat& y) {
    if (x_hard.n_cols != y.n_cols)
        throw std::invalid_argument("symbol and sample column counts differ");
    if (x_hard.n_cols < x_hard.n_rows)
        return std::nullopt;
    const arma::cx_mat gram = x_hard * x_hard.t();
    arma::cx_mat gram_inv;
    if (!arma::inv(gram_inv, gram))
        return std::nullopt;
    if (arma::cond(gram) > 1e12)
        return std::nullopt;
    return y * x_hard.t() * gram_inv;
}

arma::cx_mat lmmse_detect(const arma::cx_mat& h, const arma::cx_mat& y,
                          double noise_var) {
    if (noise_var < 0.0)
        throw std::invalid_argument("noise variance must be nonnegative");
    const arma::uword n = h.n_rows;
    arma::cx_mat reg = h * h.t();
    reg.diag() += noise_var;
    arma::cx_mat reg_inv;
    if (!arma::inv(reg_inv, reg))
        throw DetectionFailure();
    const arma::cx_mat g = h.t() * reg_inv;
    const arma::cx_mat gh = g * h;
    const arma::cx_vec bias = gh.diag();
    const double floor = 1e-12 * std::max(1.0, static_cast<double>(arma::norm(gh, "fro")));
    arma::cx_mat x = g * y;
    for (arma::uword i = 0; i < n; ++i) {
        if (std::abs(bias(i)) < floor)
            throw DetectionFailure();
        x.row(i) /= bias(i);
    }
    return x;
}

BlockResult semiblind_block(const arma::cx_mat& y_block, const arma::cx_mat& h_ref,
                            double sinr, const modem::QamConstellation& c,
                            const BlockOptions& opt,
                            const arma::uvec& pilot_columns) {
    const int dim = static_cast<int>(y_block.n_rows);
    BlockResult res;

    // Per-stream peak normalization to the constellation corner radius.
    arma::vec scale(dim, arma::fill::ones);
    arma::cx_mat y_n = y_block;
    if (opt.normalize) {
        const double target = std::numbers::sqrt2 * c.boundary;
        for (int s = 0; s < dim; ++s) {
            auto [row, sc] = normalize(y_block.row(s), target);
            y_n.row(s) = row;
            scale(s) = sc;
        }
    }
    res.scale = scale;

    const arma::cx_mat y_fit = opt.augment ? modem::augment(y_n) : y_n;
    const double kappa = arma::cond(y_fit);
    if (!std::isfinite(kappa) || kappa > opt.kappa_max) {
        res.failed = true;
        return res;
    }

    const double bound = c.boundary + std::sqrt(1.0 / sinr);
    const arma::cx_mat h_ref_scaled = arma::diagmat(arma::cx_vec(scale, arma::vec(dim, arma::fill::zeros))) * h_ref;
    arma::cx_mat u0_c;
    if (!arma::inv(u0_c, h_ref_scaled))
        u0_c = arma::cx_mat(arma::eye(dim, dim), arma::mat(dim, dim, arma::fill::zeros));

    const arma::mat samples =
        arma::join_cols(arma::real(y_fit), arma::imag(y_fit));

    fit::FittingProblem problem;
    problem.samples = samples;
    problem.bound = bound;
    problem.dim = dim;
    problem.constraint_tol = opt.constraint_tol;
    problem.step_tol = opt.step_tol;
    problem.max_iterations = opt.max_iterations;
    problem.active_subsampling = opt.active_subsampling;

    fit::FittingSolution sol;
    try {
        const arma::mat u0 = feasible_start(fit::real_embed(u0_c), samples, bound);
        sol = fit::solve(problem, u0);
    } catch (const fit::FittingError&) {
        res.failed = true;
        return res;
    }
    res.iterations = sol.iterations;

    arma::cx_mat u_c;
    arma::cx_mat h_norm;
    try {
        u_c = fit::complex_extract(sol.u, 1e-6);
    } catch (const fit::FittingError&) {
        res.failed = true;
        return res;
    }
    if (!arma::inv(h_norm, u_c)) {
        res.failed = true;
        return res;
    }

    // De-normalize: the fit ran on diag(scale) * Y.
    res.h_eq = arma::diagmat(arma::cx_vec(1.0 / scale, arma::vec(dim, arma::fill::zeros))) * h_norm;
    res.x_soft = u_c * y_n;

    const std::complex<double> p_t(-c.boundary, -c.boundary);
    try {
        if (pilot_columns.n_elem == static_cast<arma::uword>(dim)) {
            res.log = resolve_ambiguity(res.x_soft, res.h_eq, pilot_columns, p_t);
        } else {
            // No pilots in this block: detect the transform against the
            // reference channel instead.
            const arma::cx_mat z = u_c * h_ref_scaled * p_t;
            res.log = align_ambiguity(res.x_soft, res.h_eq, z, p_t);
        }
    } catch (const AmbiguityUnresolvable&) {
        res.failed = true;
        return res;
    }

    res.x_hat = hard_decide(res.x_soft, c);
    return res;
}

EstimationResult jcesd(const ReceivedGrid& grid, const JcesdConfig& cfg) {
    if (cfg.constellation == nullptr)
        throw std::invalid_argument("constellation not set");
    const modem::QamConstellation& c = *cfg.constellation;
    const int num_sc = static_cast<int>(grid.y.size());
    if (num_sc == 0)
        throw std::invalid_argument("empty grid");
    if (cfg.num_blocks < 1 || num_sc % cfg.num_blocks != 0)
        throw std::invalid_argument("block count must divide the subcarrier count");
    const int dim = static_cast<int>(grid.y[0].n_rows);
    const int num_sym = static_cast<int>(grid.y[0].n_cols);
    if (num_sym < dim)
        throw std::invalid_argument("grid too narrow for the pilot block");
    if (grid.pilot_subcarrier < 0 || grid.pilot_subcarrier >= num_sc)
        throw std::invalid_argument("pilot subcarrier out of range");

    EstimationResult out;
    out.h_hat.assign(num_sc, arma::cx_mat(dim, dim, arma::fill::zeros));
    out.x_hat.assign(num_sc, arma::cx_mat(dim, num_sym, arma::fill::zeros));

    const arma::cx_mat p_t = modem::corner_pilot(c, dim);
    const arma::cx_mat p_r = grid.y[grid.pilot_subcarrier].cols(0, dim - 1);
    const arma::cx_mat h_ls = ls_init(p_r, p_t);
    double sinr = 1.0;
    try {
        sinr = estimate_sinr(p_r, p_t, h_ls);
    } catch (const SingularPilot&) {
        // Degenerate pilot estimate: assume unit SINR, helped later by the
        // halving loop and the iterative stage.
    }
    out.sinr_estimate = sinr;
    const double noise_var = std::max(1e-3, 1.0 / sinr);

    // Block stage, processed outward from the pilot block. A block without
    // literal pilots aligns its ambiguity against the nearest already-aligned
    // neighbor, so the reference tracks the channel across the band instead
    // of staying pinned at the pilot subcarrier; adjacent blocks differ by a
    // small phase step, which keeps the quarter-rotation decision reliable
    // even when the channel rotates through several quarters band-wide.
    const int width = num_sc / cfg.num_blocks;
    const int pilot_block = grid.pilot_subcarrier / width;
    std::vector<BlockResult> blocks(cfg.num_blocks);
    std::vector<int> order;
    order.reserve(cfg.num_blocks);
    order.push_back(pilot_block);
    for (int d = 1; d < cfg.num_blocks; ++d) {
        if (pilot_block - d >= 0)
            order.push_back(pilot_block - d);
        if (pilot_block + d < cfg.num_blocks)
            order.push_back(pilot_block + d);
    }
    for (const int iblk : order) {
        arma::cx_mat y_block(dim, static_cast<arma::uword>(width) * num_sym);
        for (int j = 0; j < width; ++j)
            y_block.cols(static_cast<arma::uword>(j) * num_sym,
                         static_cast<arma::uword>(j + 1) * num_sym - 1) =
                grid.y[iblk * width + j];
        arma::uvec pilot_cols;
        if (iblk == pilot_block) {
            pilot_cols.set_size(dim);
            const int local = grid.pilot_subcarrier - iblk * width;
            for (int s = 0; s < dim; ++s)
                pilot_cols(s) = static_cast<arma::uword>(local) * num_sym + s;
        }
        const arma::cx_mat* h_ref = &h_ls;
        if (iblk != pilot_block) {
            const int step = iblk < pilot_block ? 1 : -1;
            for (int b = iblk + step;; b += step) {
                if (!blocks[b].failed && blocks[b].h_eq.n_elem > 0) {
                    h_ref = &blocks[b].h_eq;
                    break;
                }
                if (b == pilot_block)
                    break;
            }
        }
        blocks[iblk] = semiblind_block(y_block, *h_ref, sinr, c, cfg.block, pilot_cols);
        out.fit_iterations += blocks[iblk].iterations;
        if (blocks[iblk].failed)
            ++out.blocks_failed;
        if (iblk == pilot_block && blocks[iblk].scale.n_elem)
            out.scale = arma::conv_to<std::vector<double>>::from(blocks[iblk].scale);
    }
    for (const auto& blk : blocks)
        if (!blk.failed)
            out.ambiguity_log.push_back(blk.log);

    if (out.blocks_failed > 0 && cfg.strict_fail)
        out.failed = true;

    // Failed blocks borrow the nearest successful estimate (strict mode
    // keeps them empty and skips refinement below).
    if (out.blocks_failed > 0 && out.blocks_failed < cfg.num_blocks && !cfg.strict_fail) {
        for (int iblk = 0; iblk < cfg.num_blocks; ++iblk) {
            if (!blocks[iblk].failed)
                continue;
            int best = -1;
            for (int d = 1; d < cfg.num_blocks && best < 0; ++d) {
                if (iblk - d >= 0 && !blocks[iblk - d].failed)
                    best = iblk - d;
                else if (iblk + d < cfg.num_blocks && !blocks[iblk + d].failed)
                    best = iblk + d;
            }
            blocks[iblk].h_eq = blocks[best].h_eq;
            blocks[iblk].failed = false;
            // Detect with the borrowed channel.
            arma::cx_mat y_block(dim, static_cast<arma::uword>(width) * num_sym);
            for (int j = 0; j < width; ++j)
                y_block.cols(static_cast<arma::uword>(j) * num_sym,
                             static_cast<arma::uword>(j + 1) * num_sym - 1) =
                    grid.y[iblk * width + j];
            try {
                blocks[iblk].x_soft = lmmse_detect(blocks[iblk].h_eq, y_block, noise_var);
            } catch (const DetectionFailure&) {
                blocks[iblk].x_soft = y_block;
            }
            blocks[iblk].x_hat = hard_decide(blocks[iblk].x_soft, c);
        }
    }

    // Expand block results onto subcarriers.
    std::vector<arma::cx_mat> x_soft(num_sc);
    for (int j = 0; j < num_sc; ++j) {
        const int iblk = j / width;
        const int local = j - iblk * width;
        if (blocks[iblk].failed) {
            // Unrecoverable (all blocks failed, or strict mode): zero channel
            // and raw hard decisions keep the output well formed.
            out.h_hat[j].zeros();
            x_soft[j] = grid.y[j];
        } else {
            out.h_hat[j] = blocks[iblk].h_eq;
            x_soft[j] = blocks[iblk].x_soft.cols(
                static_cast<arma::uword>(local) * num_sym,
                static_cast<arma::uword>(local + 1) * num_sym - 1);
        }
    }
    out.h_hat_initial = out.h_hat;

    const bool refine = !(cfg.strict_fail && out.failed) &&
                        out.blocks_failed < cfg.num_blocks;
    if (refine) {
        arma::uvec pilot_keep(dim);
        for (int s = 0; s < dim; ++s)
            pilot_keep(s) = s;
        for (int t = 0; t < cfg.num_iterations; ++t) {
            for (int j = 0; j < num_sc; ++j) {
                const bool has_pilots = (j == grid.pilot_subcarrier);
                arma::uvec kept;
                try {
                    kept = llr_filter(x_soft[j], c, noise_var, cfg.llr_threshold,
                                      has_pilots ? pilot_keep : arma::uvec{});
                } catch (const InsufficientSamples&) {
                    continue; // carry the previous estimate for this subcarrier
                }
                arma::cx_mat x_hard = hard_decide(x_soft[j], c);
                if (has_pilots)
                    x_hard.cols(0, dim - 1) = p_t;
                const auto h_new = ls_refine(x_hard.cols(kept), grid.y[j].cols(kept));
                if (h_new)
                    out.h_hat[j] = *h_new;
                try {
                    x_soft[j] = lmmse_detect(out.h_hat[j], grid.y[j], noise_var);
                } catch (const DetectionFailure&) {
                    // keep the previous soft symbols
                }
            }
        }
        out.iterations_used = cfg.num_iterations;
    }

    for (int j = 0; j < num_sc; ++j) {
        out.x_hat[j] = hard_decide(x_soft[j], c);
        if (j == grid.pilot_subcarrier)
            out.x_hat[j].cols(0, dim - 1) = p_t;
    }
    return out;
}

std::pair<double, double> init_bound_check(const arma::cx_mat& h, const arma::cx_mat& d) {
    arma::cx_mat h_inv;
    if (!arma::inv(h_inv, h))
        throw std::invalid_argument("reference matrix is singular");
    if (arma::norm(h_inv * d, 2) >= 1.0)
        throw OutOfRegime();
    arma::cx_mat hp_inv;
    if (!arma::inv(hp_inv, h + d))
        throw OutOfRegime();
    const double lhs = arma::norm(hp_inv - h_inv, "fro");
    const double inv_2 = arma::norm(h_inv, 2);
    const double rhs = inv_2 * inv_2 * arma::norm(d, "fro");
    return {lhs, rhs};
}

double random_init_exceedance(double eps, double alpha, const arma::cx_mat& u_star) {
    if (eps < 0.0)
        throw std::invalid_argument("radius must be nonnegative");
    if (alpha <= 0.0)
        throw std::invalid_argument("entry scale must be positive");
    if (u_star.n_elem == 0)
        throw std::invalid_argument("empty reference matrix");
    const int order = static_cast<int>(u_star.n_elem); // complex entry count
    const double a = std::numbers::sqrt2 * arma::norm(u_star, "fro") / alpha;
    const double b = std::numbers::sqrt2 * eps / alpha;
    return stats::marcum_q(order, a, b);
}

} // namespace jcesd::rx

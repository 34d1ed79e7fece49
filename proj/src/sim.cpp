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

#include "jcesd/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "jcesd/baseline.hpp"
#include "jcesd/channel.hpp"
#include "jcesd/fitting.hpp"
#include "jcesd/metrics.hpp"
#include "jcesd/modem.hpp"
#include "jcesd/precoding.hpp"
#include "jcesd/receiver.hpp"
#include "jcesd/rng.hpp"

namespace jcesd::harness {

namespace {

// Sub-stream tags. All randomness of one (config, snr, seed) cell derives
// from the cell seed through these fixed tags, so cells are independent of
// execution order and thread count.
constexpr std::uint64_t kTagTti = 0x7711'0000ULL;     // + tti index
constexpr std::uint64_t kTagAnalog = 0xF0F0'0001ULL;
constexpr std::uint64_t kTagCombiner = 0xF0F0'0002ULL;
constexpr std::uint64_t kTagChannel = 0xC4A2'0000ULL; // + user
constexpr std::uint64_t kTagData = 0xDA7A'0000ULL;    // + user
constexpr std::uint64_t kTagNoise = 0x0153'0000ULL;   // transmit() splits per user

// Shortest representation that parses back to the same double; keeps the
// resume path (parse + rewrite) byte stable.
std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct UserAccum {
    double nmse_linear_sum = 0.0;
    long sym_errors = 0;
    long symbols = 0;
    long bit_errors = 0;
    long bits = 0;
    double credited_bits = 0.0;
    int decode_failures = 0; // transport blocks missing the decode rule
    int blocks_failed = 0;   // receiver fit blocks that failed
    long opt_iters = 0;
    double runtime_ms = 0.0;
};

struct SchemeContext {
    modem::QamConstellation constellation;
    std::complex<double> pilot_value;
    double code_rate = 1.0;
    double overhead = 0.0;
    baseline::PilotPattern pattern; // baselines only
    bool is_semiblind = true;
    bool is_orthogonal = false;
};

// True when (j, t) carries no data for any stream of this user.
bool is_pilot_re(const SchemeContext& ctx, int num_streams, int j, int t) {
    if (ctx.is_semiblind)
        return j == 0 && t < num_streams;
    for (const auto& re : ctx.pattern.all_res)
        if (re.first == j && re.second == t)
            return true;
    return false;
}

// Per-user transmit grids with data labels recorded for error counting.
// Label draw order: subcarrier, then OFDM symbol, then stream; pilot
// entries keep the label sentinel -1.
void build_grids(const SimConfig& cfg, const SchemeContext& ctx, std::uint64_t tti_seed,
                 std::vector<channel::Grid>& x,
                 std::vector<std::vector<arma::imat>>& labels) {
    const int K = cfg.num_users;
    const int ns = cfg.num_streams;
    const int J = cfg.num_subcarriers;
    const int T = cfg.num_symbols;
    const auto M = static_cast<std::uint64_t>(ctx.constellation.order);

    x.assign(K, channel::Grid(J));
    labels.assign(K, std::vector<arma::imat>(J));
    for (int k = 0; k < K; ++k) {
        Rng rng(derive_seed(tti_seed, kTagData + static_cast<std::uint64_t>(k)));
        for (int j = 0; j < J; ++j) {
            arma::cx_mat grid(ns, T, arma::fill::zeros);
            arma::imat lab(ns, T);
            lab.fill(-1);
            for (int t = 0; t < T; ++t) {
                const bool pilot_re = is_pilot_re(ctx, ns, j, t);
                for (int s = 0; s < ns; ++s) {
                    if (pilot_re)
                        continue;
                    const auto label = static_cast<std::uint32_t>(rng.below(M));
                    grid(s, t) = ctx.constellation.points[label];
                    lab(s, t) = static_cast<arma::sword>(label);
                }
            }
            x[k][j] = std::move(grid);
            labels[k][j] = std::move(lab);
        }
        if (ctx.is_semiblind) {
            for (int s = 0; s < ns; ++s)
                x[k][0](s, s) = ctx.pilot_value;
        } else {
            for (int s = 0; s < ns; ++s)
                for (const auto& re : ctx.pattern.stream_res[k * ns + s])
                    x[k][re.first](s, re.second) = ctx.pilot_value;
        }
    }
}

// Semi-blind receiver for one user; hard failures degrade to raw decisions
// against a zero channel estimate so the trial always yields a row.
void run_semiblind(const SimConfig& cfg, const SchemeContext& ctx,
                   const std::vector<arma::cx_mat>& combined,
                   std::vector<arma::cx_mat>& h_hat, std::vector<arma::cx_mat>& x_hat,
                   UserAccum& acc) {
    rx::JcesdConfig jc;
    jc.constellation = &ctx.constellation;
    jc.num_blocks = cfg.num_blocks;
    jc.num_iterations = cfg.num_iterations;
    jc.llr_threshold = cfg.llr_threshold;
    jc.strict_fail = cfg.strict_fail;
    jc.block.kappa_max = cfg.kappa_max;
    try {
        rx::ReceivedGrid grid{combined, 0};
        const auto est = rx::jcesd(grid, jc);
        h_hat = est.h_hat;
        x_hat = est.x_hat;
        acc.blocks_failed += est.blocks_failed;
        acc.opt_iters += est.fit_iterations;
    } catch (const rx::ReceiverError&) {
        const int ns = cfg.num_streams;
        h_hat.assign(combined.size(), arma::cx_mat(ns, ns, arma::fill::zeros));
        x_hat.resize(combined.size());
        for (std::size_t j = 0; j < combined.size(); ++j) {
            arma::cx_mat hard(combined[j].n_rows, combined[j].n_cols);
            for (arma::uword t = 0; t < hard.n_cols; ++t)
                for (arma::uword s = 0; s < hard.n_rows; ++s)
                    hard(s, t) = modem::nearest(combined[j](s, t), ctx.constellation).first;
            x_hat[j] = hard;
        }
        acc.blocks_failed += cfg.num_blocks;
    } catch (const fit::FittingError&) {
        const int ns = cfg.num_streams;
        h_hat.assign(combined.size(), arma::cx_mat(ns, ns, arma::fill::zeros));
        x_hat = combined;
        acc.blocks_failed += cfg.num_blocks;
    }
}

void run_pilot_baseline(const SimConfig& cfg, const SchemeContext& ctx, int user,
                        const std::vector<arma::cx_mat>& combined, double noise_eff,
                        std::vector<arma::cx_mat>& h_hat,
                        std::vector<arma::cx_mat>& x_hat) {
    h_hat = baseline::pilot_ce(combined, ctx.pattern, user, ctx.pilot_value);
    x_hat.resize(combined.size());
    for (std::size_t j = 0; j < combined.size(); ++j) {
        arma::cx_mat soft;
        try {
            soft = rx::lmmse_detect(h_hat[j], combined[j], noise_eff);
        } catch (const rx::ReceiverError&) {
            soft = combined[j];
        }
        arma::cx_mat hard(soft.n_rows, soft.n_cols);
        for (arma::uword t = 0; t < soft.n_cols; ++t)
            for (arma::uword s = 0; s < soft.n_rows; ++s)
                hard(s, t) = modem::nearest(soft(s, t), ctx.constellation).first;
        x_hat[j] = hard;
    }
    (void)cfg;
}

// One (snr, seed) cell at a fixed modulation and code rate.
std::vector<UserAccum> run_cell(const SimConfig& cfg, double snr_db, std::uint64_t seed,
                                const SchemeContext& ctx) {
    using clock = std::chrono::steady_clock;
    const int K = cfg.num_users;
    const int ns = cfg.num_streams;
    const int J = cfg.num_subcarriers;
    const int T = cfg.num_symbols;
    const double snr_lin = std::pow(10.0, snr_db / 10.0);
    const double budget =
        cfg.power_budget < 0.0 ? static_cast<double>(K * ns) : cfg.power_budget;

    channel::ChannelParams cp;
    cp.num_tx = cfg.num_tx_antennas;
    cp.num_rx = cfg.num_rx_antennas;
    cp.num_paths = cfg.num_paths;
    cp.num_taps = cfg.num_taps;
    cp.sample_period = cfg.sample_period;
    cp.rolloff = cfg.rolloff;
    cp.path_loss = cfg.path_loss;
    cp.element_spacing = cfg.element_spacing;
    // Near-square planar factorization keeps the array aspect ratio tame for
    // antenna counts that are not perfect squares.
    auto factor = [](int n) {
        int r = static_cast<int>(std::sqrt(static_cast<double>(n)));
        while (r > 1 && n % r != 0)
            --r;
        return std::pair<int, int>{r, n / r};
    };
    cp.tx_array = factor(cfg.num_tx_antennas);
    cp.rx_array = factor(cfg.num_rx_antennas);

    std::vector<UserAccum> acc(K);

    for (int tti = 0; tti < cfg.num_ttis; ++tti) {
        const std::uint64_t tti_seed =
            derive_seed(seed, kTagTti + static_cast<std::uint64_t>(tti));

        precoding::PrecoderSet set;
        precoding::build_analog(cfg.num_tx_antennas, cfg.num_tx_rf_chains,
                                cfg.num_rx_antennas, cfg.num_rx_rf_chains,
                                derive_seed(tti_seed, kTagAnalog), set.f_rf, set.w_rf);
        set.w_bb = precoding::build_digital_combiner(cfg.num_rx_rf_chains, ns,
                                                     derive_seed(tti_seed, kTagCombiner));

        std::vector<channel::FreqChannel> h(K);
        std::vector<std::vector<arma::cx_mat>> h_rf(K);
        for (int k = 0; k < K; ++k) {
            const auto taps = channel::gen_channel(
                cp, derive_seed(tti_seed, kTagChannel + static_cast<std::uint64_t>(k)));
            h[k] = channel::to_frequency(taps, J);
            h_rf[k] = precoding::equivalent_rf_channel(h[k], set.w_rf, set.f_rf);
        }
        precoding::ezf_precoder(h_rf, set.w_bb, ns, budget, set.f_bb, set.power_factor);

        std::vector<std::vector<arma::cx_mat>> h_eff(K);
        double signal_power = 0.0;
        for (int k = 0; k < K; ++k) {
            h_eff[k] = precoding::effective_channel(h[k], set, k);
            for (const auto& hj : h_eff[k])
                signal_power += std::pow(arma::norm(hj, "fro"), 2) / ns;
        }
        signal_power /= static_cast<double>(K * J);
        // Post-combining SNR reference: rho is the per-stream noise gain of
        // the receive chain, so noise_var * rho is the combined-domain noise
        // power that signal_power is measured against.
        const double rho =
            std::pow(arma::norm(arma::cx_mat(set.w_rf * set.w_bb), "fro"), 2) / ns;
        const double noise_var = signal_power / (snr_lin * rho);
        const double noise_eff = noise_var * rho;

        std::vector<channel::Grid> x;
        std::vector<std::vector<arma::imat>> labels;
        build_grids(cfg, ctx, tti_seed, x, labels);

        const auto y =
            channel::transmit(h, set, x, noise_var, derive_seed(tti_seed, kTagNoise));

        for (int k = 0; k < K; ++k) {
            const auto t0 = clock::now();
            const auto combined = precoding::combine(set, y[k]);
            std::vector<arma::cx_mat> h_hat, x_hat;
            if (ctx.is_semiblind)
                run_semiblind(cfg, ctx, combined, h_hat, x_hat, acc[k]);
            else
                run_pilot_baseline(cfg, ctx, k, combined, noise_eff, h_hat, x_hat);
            acc[k].runtime_ms +=
                std::chrono::duration<double, std::milli>(clock::now() - t0).count();

            acc[k].nmse_linear_sum += metrics::nmse_linear(h_hat, h_eff[k]);

            std::vector<std::uint8_t> truth_bits, det_bits;
            for (int j = 0; j < J; ++j) {
                for (int t = 0; t < T; ++t) {
                    for (int s = 0; s < ns; ++s) {
                        const auto label = labels[k][j](s, t);
                        if (label < 0)
                            continue;
                        const auto det = modem::hard_label(x_hat[j](s, t), ctx.constellation);
                        acc[k].symbols += 1;
                        if (det != static_cast<std::uint32_t>(label))
                            acc[k].sym_errors += 1;
                        modem::label_to_bits(ctx.constellation,
                                             static_cast<std::uint32_t>(label), truth_bits);
                        modem::label_to_bits(ctx.constellation, det, det_bits);
                    }
                }
            }
            acc[k].bits += static_cast<long>(truth_bits.size());
            for (std::size_t i = 0; i < truth_bits.size(); ++i)
                acc[k].bit_errors += truth_bits[i] != det_bits[i];
            if (!truth_bits.empty()) {
                const double credit =
                    metrics::throughput_bits(det_bits, truth_bits, ctx.code_rate,
                                             ctx.overhead, truth_bits.size());
                acc[k].credited_bits += credit;
                if (credit <= 0.0)
                    acc[k].decode_failures += 1;
            }
        }
    }
    return acc;
}

SchemeContext make_context(const SimConfig& cfg, int modulation, double code_rate) {
    SchemeContext ctx;
    ctx.constellation = modem::make_constellation(modulation);
    ctx.pilot_value = modem::corner_pilot(ctx.constellation, 1)(0, 0);
    ctx.code_rate = code_rate;
    ctx.is_semiblind = cfg.receiver == "semiblind";
    ctx.is_orthogonal = cfg.receiver == "pilot_orthogonal";
    const double grid = static_cast<double>(cfg.num_subcarriers * cfg.num_symbols);
    if (ctx.is_semiblind) {
        ctx.overhead = static_cast<double>(cfg.num_streams) / grid;
    } else {
        ctx.pattern = baseline::make_pattern(ctx.is_orthogonal
                                                 ? baseline::PatternKind::orthogonal
                                                 : baseline::PatternKind::non_orthogonal,
                                             cfg.num_users, cfg.num_streams,
                                             cfg.num_subcarriers, cfg.num_symbols);
        ctx.overhead = ctx.pattern.overhead_fraction;
    }
    return ctx;
}

std::vector<MetricsRow> rows_from_accum(const SimConfig& cfg, double snr_db,
                                        std::uint64_t seed,
                                        const std::vector<UserAccum>& acc,
                                        int mcs_index) {
    std::vector<MetricsRow> rows;
    rows.reserve(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) {
        MetricsRow r;
        r.snr_db = snr_db;
        r.seed = seed;
        r.user = static_cast<int>(k);
        r.receiver = cfg.receiver;
        r.nmse_db = metrics::linear_to_db(acc[k].nmse_linear_sum / cfg.num_ttis);
        r.ser = acc[k].symbols ? static_cast<double>(acc[k].sym_errors) / acc[k].symbols : 0.0;
        r.ber = acc[k].bits ? static_cast<double>(acc[k].bit_errors) / acc[k].bits : 0.0;
        r.throughput_bits = acc[k].credited_bits;
        r.mcs_index = mcs_index;
        r.blocks_failed = acc[k].blocks_failed;
        r.runtime_ms = acc[k].runtime_ms;
        r.opt_iters = acc[k].opt_iters;
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace

std::string csv_header() {
    return "snr_db,seed,user,receiver,nmse_db,ser,ber,throughput_bits,mcs_index,"
           "blocks_failed,runtime_ms,opt_iters";
}

std::string to_csv(const MetricsRow& row) {
    std::ostringstream os;
    os << fmt(row.snr_db) << ',' << row.seed << ',' << row.user << ',' << row.receiver
       << ',' << fmt(row.nmse_db) << ',' << fmt(row.ser) << ',' << fmt(row.ber) << ','
       << fmt(row.throughput_bits) << ',' << row.mcs_index << ',' << row.blocks_failed
       << ',' << fmt(row.runtime_ms) << ',' << row.opt_iters;
    return os.str();
}

std::vector<MetricsRow> parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open results file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != csv_header())
        throw ConfigError("unexpected results header in " + path);

    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ','))
            f.push_back(item);
        if (f.size() != 12)
            throw ConfigError("malformed results row: " + line);
        MetricsRow r;
        r.snr_db = std::stod(f[0]);
        r.seed = std::stoull(f[1]);
        r.user = std::stoi(f[2]);
        r.receiver = f[3];
        r.nmse_db = std::stod(f[4]);
        r.ser = std::stod(f[5]);
        r.ber = std::stod(f[6]);
        r.throughput_bits = std::stod(f[7]);
        r.mcs_index = std::stoi(f[8]);
        r.blocks_failed = std::stoi(f[9]);
        r.runtime_ms = std::stod(f[10]);
        r.opt_iters = std::stol(f[11]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<MetricsRow> run_trial(const SimConfig& cfg, double snr_db,
                                  std::uint64_t seed) {
    if (cfg.link_adaptation) {
        // Every MCS candidate replays the identical channel and noise
        // realizations (the sub-seed chain does not involve the MCS), so the
        // selection compares like with like.
        std::map<int, std::vector<UserAccum>> per_mcs;
        for (const auto& entry : metrics::mcs_table()) {
            const auto ctx = make_context(cfg, entry.modulation, entry.code_rate);
            per_mcs[entry.index] = run_cell(cfg, snr_db, seed, ctx);
        }
        std::vector<MetricsRow> rows;
        for (int k = 0; k < cfg.num_users; ++k) {
            std::map<int, double> bler;
            for (const auto& [idx, acc] : per_mcs)
                bler[idx] = static_cast<double>(acc[k].decode_failures) / cfg.num_ttis;
            const int chosen = metrics::link_adapt(bler);
            auto user_rows = rows_from_accum(cfg, snr_db, seed, per_mcs[chosen], chosen);
            rows.push_back(user_rows[k]);
        }
        return rows;
    }

    int modulation = cfg.modulation;
    double code_rate = 1.0;
    int mcs_col = -1;
    if (cfg.mcs_index >= 0) {
        for (const auto& entry : metrics::mcs_table()) {
            if (entry.index == cfg.mcs_index) {
                modulation = entry.modulation;
                code_rate = entry.code_rate;
                mcs_col = entry.index;
            }
        }
    }
    const auto ctx = make_context(cfg, modulation, code_rate);
    const auto acc = run_cell(cfg, snr_db, seed, ctx);
    return rows_from_accum(cfg, snr_db, seed, acc, mcs_col);
}

int thread_budget() {
    if (const char* env = std::getenv("JCESD_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

void sweep(const SimConfig& cfg, const std::vector<double>& snrs,
           const std::vector<std::uint64_t>& seeds, const std::string& out_path) {
    std::vector<MetricsRow> rows;
    std::set<std::pair<double, std::uint64_t>> done;
    if (std::filesystem::exists(out_path)) {
        rows = parse_csv(out_path);
        for (const auto& r : rows)
            done.insert({r.snr_db, r.seed});
    }

    std::vector<std::pair<double, std::uint64_t>> cells;
    for (double snr : snrs)
        for (std::uint64_t seed : seeds)
            if (!done.count({snr, seed}))
                cells.emplace_back(snr, seed);

    const int workers =
        std::max(1, std::min<int>(thread_budget(), static_cast<int>(cells.size())));
    std::atomic<std::size_t> next{0};
    std::mutex m;
    std::exception_ptr first_error;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size())
                return;
            try {
                auto cell_rows = run_trial(cfg, cells[i].first, cells[i].second);
                std::lock_guard<std::mutex> lock(m);
                rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
            } catch (...) {
                std::lock_guard<std::mutex> lock(m);
                if (!first_error)
                    first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back(work);
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);

    std::sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
        if (a.snr_db != b.snr_db)
            return a.snr_db < b.snr_db;
        if (a.seed != b.seed)
            return a.seed < b.seed;
        return a.user < b.user;
    });

    const std::string tmp = out_path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out)
            throw ConfigError("cannot write results file: " + tmp);
        out << csv_header() << '\n';
        for (const auto& r : rows)
            out << to_csv(r) << '\n';
    }
    std::filesystem::rename(tmp, out_path);
}

} // namespace jcesd::harness

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "sicfiber/air.hpp"
#include "sicfiber/config.hpp"
#include "sicfiber/cpan.hpp"
#include "sicfiber/dataset.hpp"
#include "sicfiber/fiber.hpp"
#include "sicfiber/sic.hpp"

namespace sicfiber {

struct ResultRow {
    double ptx_dbm = 0.0;
    int n_phases = 0;
    int n_stages = 0;
    std::string stage;  // "amp", "phase1", ..., "total"
    double air_bpcu = 0.0;
    double stderr_bpcu = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;

    auto key() const { return std::tie(ptx_dbm, n_phases, n_stages, stage); }
};

enum class Preset { paper, desk };

namespace detail {

// role tags for seed derivation
inline constexpr std::uint64_t kRoleTrain = 1, kRoleTest = 2, kRoleChannel = 3,
                               kRoleInterferer = 4;

struct TestSequence {
    SymbolSequence x;
    std::vector<std::complex<double>> y;
};

inline TestSequence make_fiber_sequence(const ExperimentConfig& cfg, const Constellation& c,
                                        std::uint64_t combo_seed, std::uint64_t seq_index,
                                        std::uint64_t role) {
    TestSequence out;
    out.x = sample_sequence(c, static_cast<std::size_t>(cfg.seq_len),
                            derive_seed(combo_seed, role, seq_index, 0));
    std::vector<SampledSignal> tx;
    const int center = cfg.link.n_wdm_channels / 2;
    for (int ch = 0; ch < cfg.link.n_wdm_channels; ++ch) {
        const SymbolSequence sym =
            ch == center ? out.x
                         : sample_sequence(c, static_cast<std::size_t>(cfg.seq_len),
                                           derive_seed(combo_seed, kRoleInterferer, seq_index,
                                                       static_cast<std::uint64_t>(ch)));
        tx.push_back(shape_pulses(sym, cfg.link.oversampling, cfg.link.symbol_rate_hz));
    }
    const auto rx =
        propagate(cfg.link, tx, derive_seed(combo_seed, kRoleChannel, seq_index, role));
    out.y = receive(cfg.link, rx);
    return out;
}

inline TestSequence make_cpan_sequence(const Constellation& c, const CpanParams& params,
                                       int seq_len, std::uint64_t combo_seed,
                                       std::uint64_t seq_index, std::uint64_t role) {
    TestSequence out;
    out.x = sample_sequence(c, static_cast<std::size_t>(seq_len),
                            derive_seed(combo_seed, role, seq_index, 0));
    out.y = simulate(params, out.x, derive_seed(combo_seed, kRoleChannel, seq_index, role)).y;
    return out;
}

}  // namespace detail

struct ComboResult {
    std::vector<double> per_seq_total;          // total AIR per test sequence
    std::vector<std::vector<double>> per_seq_stage;  // [seq][stage] incl. amplitude
    CpanParams fitted;
};

// One sweep point: build the constellation, obtain channel parameters (given
// for cpan mode, fitted from generated training data for fiber mode), run the
// genie SIC pipeline on the test sequences and collect per-sequence AIRs.
inline ComboResult run_combo(const ExperimentConfig& cfg, double ptx_dbm, int n_p, int n_stages,
                             int n_train, int n_test,
                             const std::filesystem::path& dataset_dir = {}) {
    const double ptx = dbm_to_watts(ptx_dbm);
    const Constellation c = build_star_qam(cfg.n_rings, n_p, ptx, cfg.truncation);
    const std::uint64_t combo_seed =
        derive_seed(cfg.seed, static_cast<std::uint64_t>(ptx_dbm * 1e6 + 1e9),
                    static_cast<std::uint64_t>(n_p), static_cast<std::uint64_t>(n_stages));

    ComboResult res;
    CpanParams params;
    if (cfg.mode == ChannelMode::cpan) {
        params = make_cpan_params(cfg.cpan_mu_delta, cfg.cpan_sigma_theta_sq, cfg.cpan_sigma_n_sq);
    } else {
        PairedSequences train;
        for (int s = 0; s < n_train; ++s) {
            auto seq = detail::make_fiber_sequence(cfg, c, combo_seed,
                                                   static_cast<std::uint64_t>(s),
                                                   detail::kRoleTrain);
            train.emplace_back(std::move(seq.x), std::move(seq.y));
        }
        if (!dataset_dir.empty()) {
            char name[128];
            std::snprintf(name, sizeof(name), "train_p%+.2fdBm_np%d_S%d.tsv", ptx_dbm, n_p,
                          n_stages);
            write_dataset(dataset_dir / name, train);
        }
        params = fit_params(train).params;
    }
    res.fitted = params;

    const SicSchedule schedule(n_stages);
    for (int s = 0; s < n_test; ++s) {
        const auto seq =
            cfg.mode == ChannelMode::cpan
                ? detail::make_cpan_sequence(c, params, cfg.seq_len, combo_seed,
                                             static_cast<std::uint64_t>(s), detail::kRoleTest)
                : detail::make_fiber_sequence(cfg, c, combo_seed,
                                              static_cast<std::uint64_t>(s), detail::kRoleTest);
        const auto sic = run_sic(seq.y, seq.x, schedule, c, params);
        const auto air = air_from_sic(sic, seq.x, c);
        res.per_seq_total.push_back(air.total_bits);
        res.per_seq_stage.push_back(air.per_stage_bits);
    }
    return res;
}

namespace detail {

inline void mean_stderr(const std::vector<double>& v, double& mean, double& se) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(var / (static_cast<double>(v.size()) *
                                         static_cast<double>(v.size() - 1)))
                      : 0.0;
}

inline std::string format_row(const ResultRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.2f\t%d\t%d\t%s\t%.6f\t%.6f\t%llu\t%s\n", r.ptx_dbm,
                  r.n_phases, r.n_stages, r.stage.c_str(), r.air_bpcu, r.stderr_bpcu,
                  static_cast<unsigned long long>(r.seed), r.config_hash.c_str());
    return buf;
}

}  // namespace detail

// Full campaign: every (ptx, n_p, S) combination, canonical sorted TSV output.
// Rows already present in an existing results file are not recomputed.
inline std::vector<ResultRow> run_campaign(const ExperimentConfig& cfg,
                                           const std::filesystem::path& out_dir,
                                           int workers = 1, Preset preset = Preset::paper) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path results_path = out_dir / "results.tsv";
    const std::string hash = config_hash(cfg.raw);

    int n_train = cfg.n_train_seqs, n_test = cfg.n_test_seqs;
    if (preset == Preset::desk) {
        n_train = std::min(n_train, 8);
        n_test = std::min(n_test, 20);
    }

    // resume: collect keys of completed rows
    std::vector<ResultRow> rows;
    std::set<std::tuple<double, int, int, std::string>> done;
    if (fs::exists(results_path)) {
        std::ifstream in(results_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            ResultRow r;
            char stage[64], h[64];
            unsigned long long seed;
            if (std::sscanf(line.c_str(), "%lf %d %d %63s %lf %lf %llu %63s", &r.ptx_dbm,
                            &r.n_phases, &r.n_stages, stage, &r.air_bpcu, &r.stderr_bpcu, &seed,
                            h) == 8) {
                r.stage = stage;
                r.seed = seed;
                r.config_hash = h;
                if (r.config_hash == hash) {
                    rows.push_back(r);
                    done.insert({r.ptx_dbm, r.n_phases, r.n_stages, r.stage});
                }
            }
        }
    }

    struct Combo {
        double ptx_dbm;
        int n_p, n_stages;
    };
    std::vector<Combo> todo;
    for (double p : cfg.ptx_dbm)
        for (int np : cfg.n_phases)
            for (int s : cfg.stages) {
                const double pr = std::round(p * 100.0) / 100.0;  // match TSV precision
                if (!done.count({pr, np, s, "total"})) todo.push_back({p, np, s});
            }

    auto process = [&](const Combo& cb) {
        auto combo = run_combo(cfg, cb.ptx_dbm, cb.n_p, cb.n_stages, n_train, n_test,
                               cfg.mode == ChannelMode::fiber ? out_dir : fs::path{});
        std::vector<ResultRow> out;
        const std::size_t n_stage_cols = combo.per_seq_stage.front().size();
        for (std::size_t st = 0; st < n_stage_cols; ++st) {
            std::vector<double> v;
            for (const auto& seq : combo.per_seq_stage) v.push_back(seq[st]);
            ResultRow r;
            r.ptx_dbm = cb.ptx_dbm;
            r.n_phases = cb.n_p;
            r.n_stages = cb.n_stages;
            r.stage = st == 0 ? "amp" : "phase" + std::to_string(st);
            detail::mean_stderr(v, r.air_bpcu, r.stderr_bpcu);
            r.seed = cfg.seed;
            r.config_hash = hash;
            out.push_back(r);
        }
        ResultRow total;
        total.ptx_dbm = cb.ptx_dbm;
        total.n_phases = cb.n_p;
        total.n_stages = cb.n_stages;
        total.stage = "total";
        detail::mean_stderr(combo.per_seq_total, total.air_bpcu, total.stderr_bpcu);
        total.seed = cfg.seed;
        total.config_hash = hash;
        out.push_back(total);
        return out;
    };

    if (workers <= 1) {
        for (const auto& cb : todo)
            for (auto& r : process(cb)) rows.push_back(std::move(r));
    } else {
        std::vector<std::future<std::vector<ResultRow>>> futures;
        std::size_t next = 0;
        while (next < todo.size() || !futures.empty()) {
            while (next < todo.size() &&
                   futures.size() < static_cast<std::size_t>(workers)) {
                futures.push_back(std::async(std::launch::async, process, todo[next]));
                ++next;
            }
            for (auto& r : futures.front().get()) rows.push_back(std::move(r));
            futures.erase(futures.begin());
        }
    }

    // canonical order, independent of scheduling
    std::sort(rows.begin(), rows.end(),
              [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });

    std::ofstream out(results_path);
    out << "# ptx_dbm\tn_phases\tn_stages\tstage\tair_bpcu\tstderr\tseed\tconfig_hash\n";
    for (const auto& r : rows) out << detail::format_row(r);
    return rows;
}

}  // namespace sicfiber

// Experiment driver: config-driven sweep campaigns, config validation,
// CPAN parameter fitting from datasets, and memoryless AWGN baselines.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sicfiber/air.hpp"
#include "sicfiber/campaign.hpp"
#include "sicfiber/config.hpp"
#include "sicfiber/cpan.hpp"
#include "sicfiber/dataset.hpp"

namespace fs = std::filesystem;
using namespace sicfiber;

int main(int argc, char** argv) {
    CLI::App app{"sicfiber experiment driver"};
    app.require_subcommand(1);

    std::string config_path, out_dir, preset_name = "paper", data_path, params_out;
    int workers = 1;

    auto* run = app.add_subcommand("run", "run a sweep campaign from a config file");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--workers", workers, "concurrent sweep points")->check(CLI::PositiveNumber);
    run->add_option("--preset", preset_name, "desk|paper")
        ->check(CLI::IsMember({"desk", "paper"}));

    auto* validate_cmd = app.add_subcommand("validate", "validate a config without running");
    validate_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();

    auto* fit = app.add_subcommand("fit", "fit CPAN parameters from a paired dataset");
    fit->add_option("--data", data_path, "dataset TSV (paired x,y records)")->required();
    fit->add_option("--out", params_out, "write fitted parameters as JSON here");

    auto* awgn = app.add_subcommand("awgn", "memoryless AWGN AIR sweep");
    int awgn_rings = 32, awgn_phases = 128;
    std::vector<double> awgn_snr_db{10.0};
    std::size_t awgn_n_mc = 1000000;
    std::uint64_t awgn_seed = 1;
    awgn->add_option("--rings", awgn_rings)->check(CLI::PositiveNumber);
    awgn->add_option("--phases", awgn_phases)->check(CLI::PositiveNumber);
    awgn->add_option("--snr-db", awgn_snr_db, "SNR sweep points in dB");
    awgn->add_option("--n-mc", awgn_n_mc, "Monte Carlo samples per point");
    awgn->add_option("--seed", awgn_seed);
    awgn->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate_cmd) {
            auto load = load_experiment_config(config_path);
            if (load.ok()) {
                std::cout << "ok\n";
                return 0;
            }
            for (const auto& diag : load.diagnostics) std::cerr << "error: " << diag << "\n";
            return 1;
        }

        if (*run) {
            auto load = load_experiment_config(config_path);
            if (!load.ok()) {
                for (const auto& diag : load.diagnostics) std::cerr << "error: " << diag << "\n";
                return 1;
            }
            ExperimentConfig cfg = *load.config;
            const fs::path dir = out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(out_dir);
            const Preset preset = preset_name == "desk" ? Preset::desk : Preset::paper;
            auto rows = run_campaign(cfg, dir, workers, preset);
            std::cout << "wrote " << rows.size() << " rows to " << (dir / "results.tsv").string()
                      << "\n";
            return 0;
        }

        if (*fit) {
            auto data = read_dataset(data_path);
            auto result = fit_params(data);
            nlohmann::json j = to_json(result.params);
            j["degenerate"] = result.degenerate;
            if (!params_out.empty()) {
                std::ofstream out(params_out);
                out << j.dump(2) << "\n";
            }
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*awgn) {
            std::FILE* out = stdout;
            fs::path path;
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                path = fs::path(out_dir) / "awgn.tsv";
                out = std::fopen(path.string().c_str(), "w");
                if (!out) throw std::runtime_error("cannot open " + path.string());
            }
            std::fprintf(out, "# snr_db\trings\tphases\tair_bpcu\tstderr\tgaussian_bpcu\tseed\n");
            for (double snr : awgn_snr_db) {
                const auto c = build_star_qam(awgn_rings, awgn_phases, 1.0);
                const auto mc = awgn_air_starqam(c, snr, awgn_n_mc, awgn_seed);
                std::fprintf(out, "%.2f\t%d\t%d\t%.6f\t%.6f\t%.6f\t%llu\n", snr, awgn_rings,
                             awgn_phases, mc.bits, mc.std_error, awgn_air_gaussian(snr),
                             static_cast<unsigned long long>(awgn_seed));
            }
            if (out != stdout) std::fclose(out);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

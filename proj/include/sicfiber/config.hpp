#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sicfiber/cpan.hpp"
#include "sicfiber/fiber.hpp"

namespace sicfiber {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

enum class ChannelMode { cpan, fiber };

struct ExperimentConfig {
    int schema_version = 1;

    // constellation block
    int n_rings = 32;
    std::vector<int> n_phases{128};
    std::vector<double> ptx_dbm{0.0};
    double truncation = 3.2;

    // channel block
    ChannelMode mode = ChannelMode::cpan;
    double cpan_mu_delta = 0.97;
    double cpan_sigma_theta_sq = 0.01;
    double cpan_sigma_n_sq = 0.01;  // linear watts
    LinkConfig link;

    // training block
    int n_train_seqs = 24;
    int n_test_seqs = 120;
    int seq_len = 8192;
    std::uint64_t seed = 0;
    bool has_seed = false;

    // sic block
    std::vector<int> stages{2};

    // output block
    std::string out_dir = "out";

    nlohmann::json raw;  // canonical source for the config hash
};

namespace detail {

template <typename T>
bool fetch(const nlohmann::json& j, const char* block, const char* key, T& out,
           std::vector<std::string>& diags, bool required) {
    if (!j.contains(block) || !j.at(block).contains(key)) {
        if (required) diags.push_back(std::string(block) + "." + key + ": missing required field");
        return false;
    }
    try {
        out = j.at(block).at(key).template get<T>();
        return true;
    } catch (const nlohmann::json::exception& e) {
        diags.push_back(std::string(block) + "." + key + ": " + e.what());
        return false;
    }
}

}  // namespace detail

struct ConfigLoad {
    std::optional<ExperimentConfig> config;
    std::vector<std::string> diagnostics;
    bool ok() const { return diagnostics.empty() && config.has_value(); }
};

inline ConfigLoad parse_experiment_config(const nlohmann::json& j) {
    ConfigLoad res;
    ExperimentConfig c;
    c.raw = j;
    auto& d = res.diagnostics;

    if (j.contains("schema_version")) c.schema_version = j.at("schema_version").get<int>();
    if (c.schema_version != 1)
        d.push_back("schema_version: unsupported version " + std::to_string(c.schema_version));

    detail::fetch(j, "constellation", "n_rings", c.n_rings, d, true);
    detail::fetch(j, "constellation", "n_phases", c.n_phases, d, true);
    detail::fetch(j, "constellation", "ptx_dbm", c.ptx_dbm, d, true);
    detail::fetch(j, "constellation", "truncation", c.truncation, d, false);
    if (c.n_rings < 1) d.push_back("constellation.n_rings: must be >= 1");
    if (c.n_phases.empty()) d.push_back("constellation.n_phases: sweep must be nonempty");
    for (int np : c.n_phases)
        if (np < 1) d.push_back("constellation.n_phases: entries must be >= 1");
    if (c.ptx_dbm.empty()) d.push_back("constellation.ptx_dbm: sweep must be nonempty");
    if (!(c.truncation > 0.0)) d.push_back("constellation.truncation: must be > 0");

    std::string mode = "cpan";
    detail::fetch(j, "channel", "mode", mode, d, true);
    if (mode == "cpan") {
        c.mode = ChannelMode::cpan;
        if (j.contains("channel") && j.at("channel").contains("cpan")) {
            const auto& cj = j.at("channel").at("cpan");
            nlohmann::json wrap{{"p", cj}};
            detail::fetch(wrap, "p", "mu_delta", c.cpan_mu_delta, d, true);
            detail::fetch(wrap, "p", "sigma_theta_sq", c.cpan_sigma_theta_sq, d, true);
            detail::fetch(wrap, "p", "sigma_n_sq", c.cpan_sigma_n_sq, d, true);
        } else {
            d.push_back("channel.cpan: missing block for mode=cpan");
        }
        if (!(std::abs(c.cpan_mu_delta) < 1.0)) d.push_back("channel.cpan.mu_delta: |mu| must be < 1");
        if (c.cpan_sigma_theta_sq < 0.0) d.push_back("channel.cpan.sigma_theta_sq: must be >= 0");
        if (!(c.cpan_sigma_n_sq > 0.0)) d.push_back("channel.cpan.sigma_n_sq: must be > 0");
    } else if (mode == "fiber") {
        c.mode = ChannelMode::fiber;
        if (j.contains("channel") && j.at("channel").contains("fiber")) {
            const auto& fj = j.at("channel").at("fiber");
            nlohmann::json wrap{{"p", fj}};
            detail::fetch(wrap, "p", "length_km", c.link.length_km, d, false);
            detail::fetch(wrap, "p", "step_km", c.link.step_km, d, false);
            detail::fetch(wrap, "p", "beta2_s2_per_m", c.link.beta2_s2_per_m, d, false);
            detail::fetch(wrap, "p", "gamma_nl_per_w_m", c.link.gamma_nl_per_w_m, d, false);
            detail::fetch(wrap, "p", "alpha_db_per_km", c.link.alpha_db_per_km, d, false);
            detail::fetch(wrap, "p", "ase_psd_w_per_hz", c.link.ase_psd_w_per_hz, d, false);
            detail::fetch(wrap, "p", "symbol_rate_hz", c.link.symbol_rate_hz, d, false);
            detail::fetch(wrap, "p", "n_wdm_channels", c.link.n_wdm_channels, d, false);
            detail::fetch(wrap, "p", "channel_spacing_hz", c.link.channel_spacing_hz, d, false);
            detail::fetch(wrap, "p", "oversampling", c.link.oversampling, d, false);
        }
        try {
            validate(c.link);
        } catch (const std::exception& e) {
            d.push_back(std::string("channel.fiber: ") + e.what());
        }
    } else {
        d.push_back("channel.mode: must be \"cpan\" or \"fiber\"");
    }

    detail::fetch(j, "training", "n_train_seqs", c.n_train_seqs, d, true);
    detail::fetch(j, "training", "n_test_seqs", c.n_test_seqs, d, true);
    detail::fetch(j, "training", "seq_len", c.seq_len, d, true);
    c.has_seed = detail::fetch(j, "training", "seed", c.seed, d, true);
    if (c.n_train_seqs < 1) d.push_back("training.n_train_seqs: must be >= 1");
    if (c.n_test_seqs < 1) d.push_back("training.n_test_seqs: must be >= 1");
    if (c.seq_len < 2) d.push_back("training.seq_len: must be >= 2");

    detail::fetch(j, "sic", "stages", c.stages, d, true);
    if (c.stages.empty()) d.push_back("sic.stages: sweep must be nonempty");
    for (int s : c.stages)
        if (s < 1) d.push_back("sic.stages: entries must be >= 1");

    detail::fetch(j, "output", "directory", c.out_dir, d, false);

    if (d.empty()) res.config = std::move(c);
    return res;
}

inline ConfigLoad load_experiment_config(const std::filesystem::path& path) {
    ConfigLoad res;
    std::ifstream in(path);
    if (!in) {
        res.diagnostics.push_back("cannot open config file: " + path.string());
        return res;
    }
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        return parse_experiment_config(j);
    } catch (const nlohmann::json::parse_error& e) {
        res.diagnostics.push_back(std::string("parse error: ") + e.what());
        return res;
    }
}

// FNV-1a over the canonical (sorted-key) JSON dump.
inline std::string config_hash(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

inline nlohmann::json to_json(const Constellation& c) {
    return {{"radii", c.radii}, {"radial_pmf", c.radial_pmf}, {"n_p", c.n_p}, {"ptx", c.ptx}};
}

inline Constellation constellation_from_json(const nlohmann::json& j) {
    Constellation c;
    c.radii = j.at("radii").get<std::vector<double>>();
    c.radial_pmf = j.at("radial_pmf").get<std::vector<double>>();
    c.n_p = j.at("n_p").get<int>();
    c.ptx = j.at("ptx").get<double>();
    c.phase_set.resize(c.n_p);
    for (int k = 0; k < c.n_p; ++k)
        c.phase_set[k] = kTwoPi * static_cast<double>(k) / static_cast<double>(c.n_p);
    return c;
}

inline nlohmann::json to_json(const CpanParams& p) {
    return {{"mu_delta", p.mu_delta},
            {"sigma_delta_sq", p.sigma_delta_sq},
            {"sigma_theta_sq", p.sigma_theta_sq},
            {"sigma_n_sq", p.sigma_n_sq}};
}

inline CpanParams cpan_params_from_json(const nlohmann::json& j) {
    CpanParams p;
    p.mu_delta = j.at("mu_delta").get<double>();
    p.sigma_delta_sq = j.at("sigma_delta_sq").get<double>();
    p.sigma_theta_sq = j.at("sigma_theta_sq").get<double>();
    p.sigma_n_sq = j.at("sigma_n_sq").get<double>();
    validate(p);
    return p;
}

}  // namespace sicfiber

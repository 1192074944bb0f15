#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sicfiber/campaign.hpp"
#include "sicfiber/config.hpp"
#include "sicfiber/cpan.hpp"
#include "sicfiber/dataset.hpp"

namespace fs = std::filesystem;
using namespace sicfiber;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CmdResult run_cmd(const std::string& args) {
    const std::string cmd = std::string(EXPCLI_PATH) + " " + args + " 2>&1";
    std::FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult res;
    char buf[4096];
    while (std::fgets(buf, sizeof(buf), pipe)) res.output += buf;
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

fs::path fresh_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto stamp =
        std::chrono::steady_clock::now().time_since_epoch().count();
    fs::path p = fs::temp_directory_path() /
                 ("sicfiber_test_" + tag + "_" + std::to_string(stamp) + "_" +
                  std::to_string(counter++));
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json sample_config_json() {
    std::ifstream in(SAMPLE_CONFIG_PATH);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

fs::path write_json(const fs::path& dir, const nlohmann::json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream out(p);
    out << j.dump(2) << "\n";
    return p;
}

}  // namespace

TEST_CASE("validate accepts the sample config") {
    const auto res = run_cmd(std::string("validate --config ") + SAMPLE_CONFIG_PATH);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("ok") != std::string::npos);
}

TEST_CASE("validate reports actionable diagnostics") {
    const auto dir = fresh_dir("validate");
    SECTION("missing training seed") {
        auto j = sample_config_json();
        j["training"].erase("seed");
        const auto res = run_cmd("validate --config " + write_json(dir, j).string());
        CHECK(res.exit_code != 0);
        CHECK(res.output.find("training.seed") != std::string::npos);
    }
    SECTION("zero phase count in the sweep") {
        auto j = sample_config_json();
        j["constellation"]["n_phases"] = {0};
        const auto res = run_cmd("validate --config " + write_json(dir, j).string());
        CHECK(res.exit_code != 0);
        CHECK(res.output.find("n_phases") != std::string::npos);
    }
    SECTION("bad channel mode") {
        auto j = sample_config_json();
        j["channel"]["mode"] = "carrier_pigeon";
        const auto res = run_cmd("validate --config " + write_json(dir, j).string());
        CHECK(res.exit_code != 0);
        CHECK(res.output.find("channel.mode") != std::string::npos);
    }
    SECTION("malformed JSON") {
        const fs::path p = dir / "broken.json";
        std::ofstream(p) << "{ not json";
        const auto res = run_cmd("validate --config " + p.string());
        CHECK(res.exit_code != 0);
        CHECK(res.output.find("parse error") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("run produces a canonical results table") {
    const auto dir = fresh_dir("run");
    const auto res = run_cmd(std::string("run --config ") + SAMPLE_CONFIG_PATH +
                             " --out " + dir.string() + " --preset desk");
    REQUIRE(res.exit_code == 0);
    const fs::path table = dir / "results.tsv";
    REQUIRE(fs::exists(table));
    const std::string body = slurp(table);

    // sample config: one sweep point, stages [1] -> amp, phase1, total
    int data_rows = 0;
    std::istringstream lines(body);
    std::string line;
    bool saw_amp = false, saw_phase1 = false, saw_total = false;
    while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++data_rows;
        saw_amp |= line.find("\tamp\t") != std::string::npos;
        saw_phase1 |= line.find("\tphase1\t") != std::string::npos;
        saw_total |= line.find("\ttotal\t") != std::string::npos;
        CHECK(line.find("\t42\t") != std::string::npos);  // training seed carried per row
    }
    CHECK(data_rows == 3);
    CHECK(saw_amp);
    CHECK(saw_phase1);
    CHECK(saw_total);

    // each row ends with the config hash
    const std::string hash = config_hash(sample_config_json());
    CHECK(body.find(hash) != std::string::npos);

    SECTION("reruns are byte-identical and resume is a no-op") {
        const auto dir2 = fresh_dir("rerun");
        const auto res2 = run_cmd(std::string("run --config ") + SAMPLE_CONFIG_PATH +
                                  " --out " + dir2.string() + " --preset desk");
        REQUIRE(res2.exit_code == 0);
        CHECK(slurp(dir2 / "results.tsv") == body);

        const auto res3 = run_cmd(std::string("run --config ") + SAMPLE_CONFIG_PATH +
                                  " --out " + dir.string() + " --preset desk");
        REQUIRE(res3.exit_code == 0);
        CHECK(slurp(table) == body);
        fs::remove_all(dir2);
    }
    fs::remove_all(dir);
}

TEST_CASE("fit recovers channel parameters from a dataset") {
    const auto dir = fresh_dir("fit");
    const auto c = build_star_qam(8, 16, 1.0, 3.2);
    const auto params = make_cpan_params(0.95, 0.01, 0.002);
    PairedSequences data;
    for (int s = 0; s < 4; ++s) {
        auto x = sample_sequence(c, 8192, 900 + static_cast<std::uint64_t>(s));
        auto y = simulate(params, x, 950 + static_cast<std::uint64_t>(s)).y;
        data.emplace_back(std::move(x), std::move(y));
    }
    const fs::path data_path = dir / "train.tsv";
    write_dataset(data_path, data);

    const fs::path out_path = dir / "fitted.json";
    const auto res = run_cmd("fit --data " + data_path.string() + " --out " + out_path.string());
    REQUIRE(res.exit_code == 0);
    const auto j = nlohmann::json::parse(slurp(out_path));
    CHECK(j.at("mu_delta").get<double>() == Catch::Approx(0.95).margin(0.05));
    CHECK(j.at("sigma_theta_sq").get<double>() == Catch::Approx(0.01).epsilon(0.3));
    CHECK(j.at("sigma_n_sq").get<double>() == Catch::Approx(0.002).epsilon(0.3));
    CHECK_FALSE(j.at("degenerate").get<bool>());

    // stdout carries the same JSON payload
    CHECK(res.output.find("mu_delta") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("awgn subcommand writes the sweep table") {
    const auto dir = fresh_dir("awgn");
    const auto res = run_cmd("awgn --rings 4 --phases 8 --snr-db 5 15 --n-mc 20000 --seed 3 --out " +
                             dir.string());
    REQUIRE(res.exit_code == 0);
    const std::string body = slurp(dir / "awgn.tsv");
    int rows = 0;
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] != '#') ++rows;
    CHECK(rows == 2);
    CHECK(body.find("5.00\t") != std::string::npos);
    CHECK(body.find("15.00\t") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("dataset round trip is bit exact") {
    const auto dir = fresh_dir("dataset");
    const auto c = build_star_qam(8, 16, 1.0, 3.2);
    const auto params = make_cpan_params(0.9, 0.01, 0.01);
    PairedSequences data;
    for (int s = 0; s < 3; ++s) {
        auto x = sample_sequence(c, 257, 10 + static_cast<std::uint64_t>(s));
        auto y = simulate(params, x, 20 + static_cast<std::uint64_t>(s)).y;
        data.emplace_back(std::move(x), std::move(y));
    }
    const fs::path p = dir / "d.tsv";
    write_dataset(p, data);
    const auto back = read_dataset(p);
    REQUIRE(back.size() == data.size());
    for (std::size_t s = 0; s < data.size(); ++s) {
        REQUIRE(back[s].first.size() == data[s].first.size());
        for (std::size_t i = 0; i < data[s].first.size(); ++i) {
            REQUIRE(back[s].first.radius_idx[i] == data[s].first.radius_idx[i]);
            REQUIRE(back[s].first.phase_idx[i] == data[s].first.phase_idx[i]);
            REQUIRE(back[s].first.values[i] == data[s].first.values[i]);
            REQUIRE(back[s].second[i] == data[s].second[i]);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("config hash is sensitive to every field") {
    auto j = sample_config_json();
    const std::string base = config_hash(j);
    auto j2 = j;
    j2["training"]["seed"] = 43;
    CHECK(config_hash(j2) != base);
    auto j3 = j;
    j3["constellation"]["n_rings"] = 9;
    CHECK(config_hash(j3) != base);
    CHECK(config_hash(j) == base);
}

TEST_CASE("parse_experiment_config collects multiple diagnostics at once") {
    auto j = sample_config_json();
    j["constellation"]["n_rings"] = 0;
    j["training"].erase("seed");
    const auto load = parse_experiment_config(j);
    CHECK_FALSE(load.ok());
    CHECK(load.diagnostics.size() >= 2);
}

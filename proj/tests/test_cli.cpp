#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../src/cli/experiment.hpp"

namespace fs = std::filesystem;
using pentropy::cli::ConfigError;
using pentropy::cli::RunOptions;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("pentropy_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
    const fs::path path = dir / name;
    std::ofstream out(path);
    out << body;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Drops the volatile timestamp line so reports can be byte-compared.
std::string without_timestamp(std::string text) {
    const auto pos = text.find("\"generated_at\"");
    if (pos == std::string::npos) return text;
    const auto end = text.find('\n', pos);
    return text.erase(pos, end - pos);
}

const char* kBernoulliConfig = R"({
  "system": {"kind": "bernoulli", "probs": [0.5, 0.5]},
  "partitions": {"family": "generator"},
  "sequence": {"rule": "l_equals_j", "j_max": 6},
  "mode": "exact",
  "tail_fraction": 0.5
})";

int run_binary(const std::string& args) {
    const std::string cmd = std::string(PENTROPY_BIN_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config errors carry the offending field path") {
    const fs::path dir = fresh_dir("paths");
    RunOptions options;
    options.out_dir = (dir / "out").string();

    options.config_path = write_config(dir, "missing.json", R"({"system": {}})").string();
    try {
        pentropy::cli::run_entropy(options);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field_path == "sequence");
    }

    options.config_path =
        write_config(dir, "badkind.json",
                     R"({"system": {"kind": "nope"}, "partitions": {},
                         "sequence": {"rule": "l_equals_j", "j_max": 4}})")
            .string();
    try {
        pentropy::cli::run_entropy(options);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field_path == "system.kind");
    }

    options.config_path = write_config(dir, "notjson.json", "{oops").string();
    CHECK_THROWS_AS(pentropy::cli::run_entropy(options), ConfigError);
}

TEST_CASE("entropy run writes the report files and exact ln2 rows") {
    const fs::path dir = fresh_dir("entropy");
    RunOptions options;
    options.config_path = write_config(dir, "config.json", kBernoulliConfig).string();
    options.out_dir = (dir / "out").string();

    CHECK(pentropy::cli::run_entropy(options) == 0);
    CHECK(fs::exists(dir / "out" / "report.json"));
    CHECK(fs::exists(dir / "out" / "per_j.csv"));
    CHECK(fs::exists(dir / "out" / "summary.txt"));

    const std::string csv = slurp(dir / "out" / "per_j.csv");
    CHECK(csv.find("partition_id,j,L,h_j,stderr,method") == 0);
    CHECK(csv.find(",exact") != std::string::npos);
    // First data row: generator,1,1,<ln2>,0,exact
    std::istringstream rows(csv);
    std::string header, first_row;
    std::getline(rows, header);
    std::getline(rows, first_row);
    std::istringstream fields(first_row);
    std::string id, j_str, l_str, h_str;
    std::getline(fields, id, ',');
    std::getline(fields, j_str, ',');
    std::getline(fields, l_str, ',');
    std::getline(fields, h_str, ',');
    CHECK(id == "generator");
    CHECK(std::stod(h_str) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    CHECK(report.at("meta").at("subcommand") == "entropy");
    CHECK(report.at("meta").at("incomplete") == false);
    CHECK(report.at("results").at("h_P_sup").at("lower_bound").get<double>() ==
          doctest::Approx(std::log(2.0)));
    // Config hash matches an independent recomputation.
    const auto config = pentropy::cli::load_config(options.config_path);
    CHECK(report.at("meta").at("config_hash") == pentropy::cli::config_hash(config));
}

TEST_CASE("identity config: h_j column is ln2/j exactly") {
    const fs::path dir = fresh_dir("identity");
    RunOptions options;
    options.config_path = write_config(dir, "config.json", R"({
      "system": {"kind": "identity"},
      "partitions": {"masses_list": [[0.5, 0.5]]},
      "sequence": {"rule": "l_equals_j", "j_max": 10},
      "mode": "exact"
    })").string();
    options.out_dir = (dir / "out").string();
    CHECK(pentropy::cli::run_entropy(options) == 0);

    std::istringstream rows(slurp(dir / "out" / "per_j.csv"));
    std::string line;
    std::getline(rows, line);  // header
    std::int64_t j = 0;
    while (std::getline(rows, line)) {
        ++j;
        std::istringstream fields(line);
        std::string id, j_str, l_str, h_str;
        std::getline(fields, id, ',');
        std::getline(fields, j_str, ',');
        std::getline(fields, l_str, ',');
        std::getline(fields, h_str, ',');
        CHECK(std::stoll(j_str) == j);
        CHECK(std::stod(h_str) ==
              doctest::Approx(std::log(2.0) / static_cast<double>(j)).epsilon(1e-14));
    }
    CHECK(j == 10);
}

TEST_CASE("rank_one config: synthesized system reports exact joins") {
    const fs::path dir = fresh_dir("rankone");
    RunOptions options;
    options.config_path = write_config(dir, "config.json", R"({
      "system": {"kind": "rank_one", "synthesis": {"depth": 3}, "stage": 3},
      "partitions": {},
      "sequence": {"rule": "l_equals_j", "j_max": 3},
      "mode": "exact",
      "tail_fraction": 0.5
    })").string();
    options.out_dir = (dir / "out").string();
    CHECK(pentropy::cli::run_entropy(options) == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    const auto& rows = report.at("results").at("reports").at(0).at("per_j");
    CHECK(rows.size() == 3);
    for (const auto& row : rows) {
        CHECK(row.at("method") == "exact");
        CHECK(row.at("h_j").get<double>() <= std::log(2.0) + 1e-12);
    }
}

TEST_CASE("identical configs reproduce byte-identical outputs") {
    const fs::path dir = fresh_dir("repro");
    RunOptions options;
    options.config_path = write_config(dir, "config.json", R"({
      "system": {"kind": "rotation", "angle": "golden_mean"},
      "partitions": {"dyadic_depth": 2},
      "sequence": {"rule": "l_equals_j", "j_max": 5},
      "sampling": {"samples": 30000, "seed": 9},
      "mode": "sampled",
      "tail_fraction": 0.5
    })").string();

    options.out_dir = (dir / "a").string();
    CHECK(pentropy::cli::run_entropy(options) == 0);
    options.out_dir = (dir / "b").string();
    CHECK(pentropy::cli::run_entropy(options) == 0);

    CHECK(slurp(dir / "a" / "per_j.csv") == slurp(dir / "b" / "per_j.csv"));
    CHECK(without_timestamp(slurp(dir / "a" / "report.json")) ==
          without_timestamp(slurp(dir / "b" / "report.json")));
}

TEST_CASE("spectral run emits the coefficient table") {
    const fs::path dir = fresh_dir("spectral");
    RunOptions options;
    options.config_path = write_config(dir, "config.json", R"({
      "measure": {"riesz": {"freqs": [4, 13, 40], "coeffs": [1.0, 1.0, 1.0], "weight": 1.0}},
      "n_max": 64,
      "convolution_powers": [1, 2]
    })").string();
    options.out_dir = (dir / "out").string();

    CHECK(pentropy::cli::run_spectral(options) == 0);
    const std::string csv = slurp(dir / "out" / "spectra.csv");
    CHECK(csv.find("n,r,r_pow1,r_pow2") == 0);
    CHECK(csv.find("\n0,1,1,1\n") != std::string::npos);
    CHECK(csv.find("\n4,0.5,0.5,0.25\n") != std::string::npos);   // r(n_1) = 1/2
    CHECK(csv.find("\n17,0.25,0.25,0.0625\n") != std::string::npos);  // r(4+13) = 1/4
    CHECK(csv.find("\n3,0,0,0\n") != std::string::npos);          // off the sum set
}

TEST_CASE("orthogonality run certifies the synthesized construction") {
    const fs::path dir = fresh_dir("orth");
    RunOptions options;
    options.config_path = write_config(dir, "config.json", R"({
      "sequence": {"rule": "l_equals_j", "j_max": 3},
      "depth": 3,
      "control_spacer_free": true
    })").string();
    options.out_dir = (dir / "out").string();

    CHECK(pentropy::cli::run_orthogonality(options) == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    for (const auto& verdict : report.at("results").at("verdicts"))
        CHECK(verdict.at("disjoint") == true);
    CHECK(report.at("results").at("control").at("disjoint") == false);
    CHECK(!report.at("results").at("control").at("witnesses").empty());
    CHECK(fs::exists(dir / "out" / "tower.json"));
}

TEST_CASE("theorem1-demo contrast run at desk scale") {
    const fs::path dir = fresh_dir("demo");
    RunOptions options;
    options.config_path = write_config(dir, "config.json", R"({
      "rotation": {"angle": "golden_mean", "breakpoints": ["0", "1/2"]},
      "gaussian": {"measure": {"preset": "white"},
                   "cylinders": [{"type": "sign", "coord": 0}]},
      "sequence": {"rule": "powers_of_two", "j_max": 9},
      "tail_fraction": 0.3,
      "sampling": {"samples": 60000, "seed": 5},
      "epsilon": 0.06
    })").string();
    options.out_dir = (dir / "out").string();

    CHECK(pentropy::cli::run_theorem1_demo(options) == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    CHECK(report.at("results").at("contrast_holds") == true);
    const double s_tail =
        report.at("results").at("deterministic").at("h_P_estimate").get<double>();
    CHECK(s_tail < 0.06);
    const std::string summary = slurp(dir / "out" / "summary.txt");
    CHECK(summary.find("HOLDS") != std::string::npos);
}

TEST_CASE("budget overruns write a partial report flagged incomplete") {
    const fs::path dir = fresh_dir("incomplete");
    RunOptions options;
    // 2^20 tuples blows the configured cap at j = 20; without allow_skips
    // the run salvages what it has, flags the report, and exits 1.
    options.config_path = write_config(dir, "config.json", R"({
      "system": {"kind": "bernoulli", "probs": [0.5, 0.5]},
      "partitions": {"family": "generator"},
      "sequence": {"entries": [[1, 2], [2, 4], [3, 1048576]]},
      "mode": "sampled",
      "sampling": {"samples": 1000, "seed": 1, "support_cap": 65536}
    })").string();
    options.out_dir = (dir / "out").string();

    CHECK(pentropy::cli::run_entropy(options) == 1);
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    CHECK(report.at("meta").at("incomplete") == true);
    CHECK(fs::exists(dir / "out" / "summary.txt"));
}

TEST_CASE("gaussian runs can dump a plot-ready trajectory") {
    const fs::path dir = fresh_dir("traj");
    RunOptions options;
    options.config_path = write_config(dir, "config.json", R"({
      "system": {"kind": "gaussian", "measure": {"preset": "white"},
                 "dump_trajectory": {"indices": [0, 1, 2, 3], "seed": 4}},
      "partitions": {"cylinders": [{"type": "sign", "coord": 0}]},
      "sequence": {"rule": "l_equals_j", "j_max": 4},
      "sampling": {"samples": 20000, "seed": 2}
    })").string();
    options.out_dir = (dir / "out").string();
    CHECK(pentropy::cli::run_entropy(options) == 0);
    const std::string csv = slurp(dir / "out" / "trajectory.csv");
    CHECK(csv.find("index,value\n0,") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("binary exit codes: 0 on success, 2 on config errors") {
    const fs::path dir = fresh_dir("exitcodes");
    const fs::path good = write_config(dir, "good.json", kBernoulliConfig);
    const fs::path bad = write_config(dir, "bad.json", R"({"system": {}})");
    const fs::path out = dir / "out";

    CHECK(run_binary("entropy --config " + good.string() + " --out " + out.string()) == 0);
    CHECK(run_binary("entropy --config " + bad.string() + " --out " + out.string()) == 2);
    CHECK(run_binary("entropy --config " + (dir / "missing.json").string()) == 2);
    // CLI11 usage errors (no subcommand) are not config errors.
    CHECK(run_binary("") != 0);
    // Seed/samples overrides and kernel pinning parse.
    CHECK(run_binary("entropy --config " + good.string() + " --out " + out.string() +
                     " --seed 7 --samples 1000 --kernels scalar --format csv") == 0);
}

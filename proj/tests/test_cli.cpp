#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "syncsol/io.hpp"

namespace {

namespace fs = std::filesystem;

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / "syncsol_cli_tests";
    fs::create_directories(dir);
    fs::path out = dir / (tag + ".out");
    fs::path err = dir / (tag + ".err");
    std::string cmd = std::string(SYNCSOL_CLI_PATH) + " " + args + " > " + out.string() +
                      " 2> " + err.string();
    int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string config(const char* name) {
    return (fs::path(SYNCSOL_CONFIG_DIR) / name).string();
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("count reports the multiplicity ladder instance") {
    auto r = run_cli("count --config " + config("sym2.json"), "count_sym2");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["total"] == 3);
    CHECK(j["kind"] == "EXACT");
    CHECK(j["solutions"].size() == 3);
    for (const auto& sol : j["solutions"]) CHECK(sol["residual"].get<double>() <= 1e-10);
    CHECK(j["params"]["n"] == 2);
}

TEST_CASE("solve emits solutions with residuals") {
    auto r = run_cli("solve --config " + config("super.json"), "solve_super");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["solutions"].size() == 1);
    CHECK(j["solutions"][0]["k"][0].get<double>() == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(j["max_residual"].get<double>() <= 1e-10);
}

TEST_CASE("verify reports the gap classification without a mismatch") {
    auto r = run_cli("verify --config " + config("gap.json") + " --condition thm2.3b",
                     "verify_gap");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["holds"] == true);
    CHECK(j["predicted_total"] == "NONE");
    CHECK(j["computed_total"] == "0");
    CHECK(j["match"] == true);
}

TEST_CASE("verify runs the threshold catalog") {
    for (const char* id : {"thm2.1a", "rem2.1", "lem4.6", "lem4.7", "lem4.8", "thm2.2c"}) {
        auto r = run_cli("verify --config " + config("sym2.json") + " --condition " + id,
                         std::string("verify_") + id);
        REQUIRE(r.exit_code == 0);
        auto j = nlohmann::json::parse(r.out);
        CHECK(j["holds"] == true);
        CHECK(j["match"] == true);
    }
    auto big = run_cli("verify --config " + config("large_alpha.json") + " --condition thm2.2b",
                       "verify_22b");
    REQUIRE(big.exit_code == 0);
    auto j = nlohmann::json::parse(big.out);
    CHECK(j["holds"] == true);
    CHECK(j["computed_total"] == "1");

    auto tmpl = run_cli(
        "verify --config " + config("matrix_template_a.json") + " --condition prop3.2a",
        "verify_tmpl");
    CHECK(tmpl.exit_code == 0);
    CHECK(nlohmann::json::parse(tmpl.out)["holds"] == true);
}

TEST_CASE("sweep steps through the quadratic gap") {
    auto r = run_cli("sweep --config " + config("gap.json") +
                         " --param alpha --from 0.5 --to 3 --steps 6",
                     "sweep_gap");
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "value,rho_star,rho_star_star,total");
    std::vector<std::string> rows;
    while (std::getline(lines, line))
        if (!line.empty()) rows.push_back(line);
    REQUIRE(rows.size() == 6);
    auto total_of = [](const std::string& row) {
        return row.substr(row.rfind(',') + 1);
    };
    CHECK(total_of(rows[0]) == "1");  // below the gap
    CHECK(total_of(rows[2]) == "0");  // inside the gap
    CHECK(total_of(rows[5]) == "1");  // above the gap
}

TEST_CASE("sweep marks the infinite family") {
    auto r = run_cli("sweep --config " + config("sym2.json") +
                         " --param p --from 2 --to 2 --steps 2",
                     "sweep_inf");
    // degenerate range is refused
    CHECK(r.exit_code == 1);
    auto r2 = run_cli("sweep --config " + config("sym2_p2.json") +
                          " --param alpha --from 0.5 --to 1.5 --steps 3",
                      "sweep_inf2");
    REQUIRE(r2.exit_code == 0);
    std::istringstream lines(r2.out);
    std::string line;
    std::getline(lines, line);
    std::vector<std::string> rows;
    while (std::getline(lines, line))
        if (!line.empty()) rows.push_back(line);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].substr(rows[1].rfind(',') + 1) == "inf");  // alpha = eta_1 = eta_n
}

TEST_CASE("solve on a non-constant coupling reports certified boxes") {
    auto r = run_cli("solve --config " + config("mixed_coupling.json"), "solve_mixed");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["kind"] == "LOWER_BOUND");
    CHECK(j["solutions"].size() == 3);
    CHECK(j["max_residual"].get<double>() <= 1e-10);
}

TEST_CASE("count emits face certificates on the existence path") {
    auto r = run_cli("count --config " + config("mixed_coupling.json"), "count_mixed");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["kind"] == "LOWER_BOUND");
    REQUIRE(j.contains("box_certificates"));
    CHECK(j["box_certificates"].size() == 3);
    for (const auto& cert : j["box_certificates"]) {
        CHECK(cert["verdict"] == "DEGREE_PLUS_MINUS_ONE");
        CHECK(cert["grid_per_face"].get<int>() >= 48);
        CHECK(cert["witnesses"].size() == 4);
    }
}

TEST_CASE("oracle subcommand matches the engine") {
    auto r = run_cli("oracle --config " + config("sym2.json"), "oracle_sym2");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["total"] == 3);
}

TEST_CASE("bubble exports a profile table") {
    auto r = run_cli("bubble --config " + config("super.json") +
                         " --from 0 --to 2 --steps 3",
                     "bubble_super");
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "r,u1,u2");
    std::string row0;
    std::getline(lines, row0);
    // k = 2/3 for both components, bubble peak is 6
    CHECK(row0.rfind("0,4,4", 0) == 0);
}

TEST_CASE("identical invocations produce byte-identical reports") {
    for (const char* spec : {"count --config ", "solve --config "}) {
        auto a = run_cli(spec + config("sym2.json"), "det_a");
        auto b = run_cli(spec + config("sym2.json"), "det_b");
        CHECK(a.exit_code == b.exit_code);
        CHECK(a.out == b.out);
    }
    auto s1 = run_cli("sweep --config " + config("sym2.json") +
                          " --param alpha --from 0.01 --to 1.5 --steps 40",
                      "det_sweep_a");
    auto s2 = run_cli("sweep --config " + config("sym2.json") +
                          " --param alpha --from 0.01 --to 1.5 --steps 40",
                      "det_sweep_b");
    REQUIRE(s1.exit_code == 0);
    CHECK(s1.out == s2.out);
}

TEST_CASE("sweep totals are piecewise constant away from condition boundaries") {
    auto r = run_cli("sweep --config " + config("sym2.json") +
                         " --param alpha --from 0.01 --to 3 --steps 60",
                     "sweep_sym2");
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    std::vector<long long> totals;
    std::vector<double> values;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        values.push_back(std::stod(line.substr(0, line.find(','))));
        totals.push_back(std::stoll(line.substr(line.rfind(',') + 1)));
    }
    REQUIRE(totals.size() == 60);
    CHECK(totals.front() == 3);
    CHECK(totals.back() == 1);
    // monotone staircase for this instance: once the count drops it stays down
    long long prev = totals.front();
    int switches = 0;
    for (long long t : totals) {
        if (t != prev) ++switches;
        prev = t;
    }
    CHECK(switches <= 2);
}

TEST_CASE("two-block uniqueness verifies end to end") {
    auto r = run_cli("verify --config " + config("two_block.json") + " --condition thm2.2d",
                     "verify_2block");
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["holds"] == true);
    CHECK(j["computed_total"] == "1");
    CHECK(j["match"] == true);
    CHECK(j["inputs"]["pair_strict_margin"].get<double>() > 0.0);
}

TEST_CASE("reports map back to the caller index order") {
    using namespace syncsol;
    auto doc = io::json::parse(R"({"n":2,"N":3,"s":0.5,"eta":[2.0,1.0],"alpha":3.0,"p":2.0})");
    auto params = io::params_from_json(doc);
    auto report = count_synchronized(params);
    REQUIRE(report.total == 1);
    auto j = io::count_report_to_json(report, params);
    // caller listed the eta = 2 equation first
    CHECK(j["params"]["eta"][0] == 2.0);
    CHECK(j["solutions"][0]["k"][0].get<double>() == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
    CHECK(j["solutions"][0]["k"][1].get<double>() == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("branch table serializes to diagnostic JSON") {
    using namespace syncsol;
    auto params = make_params(2, 3, 0.5, {1.0, 1.0}, 0.05, 1.0);
    auto table = make_branch_table(params, derive(params));
    auto j = io::branch_table_to_json(table);
    CHECK(j["context"] == "SUB_PEAK");
    CHECK(j["extremum"]["pivot"] == 2);
    REQUIRE(j["entries"].size() == 2);
    CHECK(j["entries"][0]["has_second_branch"] == true);

    auto inc = make_params(2, 3, 0.5, {1.0, 1.0}, 2.0, 1.0);
    auto jinc = io::branch_table_to_json(make_branch_table(inc, derive(inc)));
    CHECK(jinc["context"] == "SUB_INCREASING");
    CHECK(jinc["entries"][0]["s_bound"] == "inf");
}

TEST_CASE("bad configs exit with the config status") {
    auto r = run_cli("count --config /nonexistent.json", "bad_config");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("INVALID_CONFIG") != std::string::npos);
    auto r2 = run_cli("verify --config " + config("sym2.json") + " --condition nosuch",
                      "bad_condition");
    CHECK(r2.exit_code == 1);
}

} // TEST_SUITE

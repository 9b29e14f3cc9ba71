#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#ifndef PAIRS_CLI_PATH
#error "PAIRS_CLI_PATH must point at the pairs_cli binary"
#endif

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(PAIRS_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

void write_price_files(const std::string& path1, const std::string& path2) {
    // AR(1) log-oscillation around a level; p2 held flat so the normalized
    // spread inherits the mean reversion.
    std::ofstream f1(path1), f2(path2);
    f1 << "date,close\n";
    f2 << "date,close\n";
    double u = 0.0;
    unsigned long long state = 12345;
    for (int k = 0; k < 600; ++k) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        const double noise = static_cast<double>(static_cast<long long>(state >> 11)) /
                                 static_cast<double>(1ll << 52) -
                             1.0;
        u = 0.9 * u + 0.03 * noise;
        char date[16];
        std::snprintf(date, sizeof date, "d%05d", k); // lexicographic order is enough
        f1 << date << "," << 10.0 * std::exp(u) << "\n";
        f2 << date << "," << 20.0 << "\n";
    }
}

} // namespace

TEST_CASE("thresholds: defaults solve and verify") {
    const RunResult r = run("thresholds");
    CHECK(r.code == 0);
    CHECK(r.out.find("verified  yes") != std::string::npos);
    CHECK(r.out.find("x0") != std::string::npos);
}

TEST_CASE("thresholds: json output carries the full policy") {
    const RunResult r = run("thresholds --format json");
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(std::fabs(doc["x0"].get<double>() - (-0.141)) < 0.002);
    CHECK(std::fabs(doc["x1"].get<double>() + doc["x2"].get<double>()) < 1e-6);
    CHECK(doc["verified"].get<bool>());
    CHECK(doc["verification"]["eq_x1x2_residual"].get<double>() < 1e-9);

    SUBCASE("byte-identical across runs") {
        const RunResult again = run("thresholds --format json");
        CHECK(again.out == r.out);
    }
    SUBCASE("feeding the parameters back reproduces the solution bitwise") {
        char args[256];
        std::snprintf(args, sizeof args,
                      "thresholds --format json --a %.17g --sigma %.17g --M %.17g",
                      doc["params"]["a"].get<double>(), doc["params"]["sigma"].get<double>(),
                      doc["params"]["M"].get<double>());
        const RunResult again = run(args);
        REQUIRE(again.code == 0);
        const auto doc2 = nlohmann::json::parse(again.out);
        CHECK(doc2["x0"].get<double>() == doc["x0"].get<double>());
        CHECK(doc2["x2"].get<double>() == doc["x2"].get<double>());
    }
}

TEST_CASE("validation failures exit with 2") {
    CHECK(run("thresholds --a -1").code == 2);
    CHECK(run("thresholds --sigma 0").code == 2);
    CHECK(run("thresholds --format yaml").code == 2);
    CHECK(run("sweep --vary a").code == 2);       // empty --values
    CHECK(run("sweep --vary nope --values 1").code == 2);
    CHECK(run("nonsense").code == 2);
}

TEST_CASE("unattainable thresholds exit with 3") {
    // Stop-loss above the buy bound: no solution exists.
    CHECK(run("thresholds --M 0.05").code == 3);
}

TEST_CASE("sweep: transaction cost widens the trading band") {
    const RunResult r = run("sweep --vary K --values 0.001,0.004 --format json");
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    REQUIRE(doc["rows"].size() == 2);
    CHECK(doc["rows"][0]["ok"].get<bool>());
    CHECK(doc["rows"][1]["ok"].get<bool>());
    CHECK(doc["rows"][1]["x2"].get<double>() > doc["rows"][0]["x2"].get<double>());
    CHECK(doc["rows"][1]["x1"].get<double>() < doc["rows"][0]["x1"].get<double>());
}

TEST_CASE("simulate: seeded runs are reproducible") {
    const std::string args = "simulate --paths 200 --dt 0.01 --horizon 5 --seed 7 --format csv";
    const RunResult a = run(args);
    REQUIRE(a.code == 0);
    const RunResult b = run(args);
    CHECK(a.out == b.out);
    const RunResult c = run("simulate --paths 200 --dt 0.01 --horizon 5 --seed 8 --format csv");
    REQUIRE(c.code == 0);
    CHECK(c.out != a.out);
    CHECK(a.out.rfind("mc_mean,mc_stderr,analytic", 0) == 0);
}

TEST_CASE("calibrate and backtest on generated price files") {
    write_price_files("cli_p1.csv", "cli_p2.csv");

    SUBCASE("calibrate emits a stationary fit") {
        const RunResult r =
            run("calibrate --p1 cli_p1.csv --p2 cli_p2.csv --window 20 --format json");
        REQUIRE(r.code == 0);
        const auto doc = nlohmann::json::parse(r.out);
        CHECK(doc["a"].get<double>() > 0.0);
        CHECK(doc["sigma"].get<double>() > 0.0);
        CHECK(doc["c1"].get<double>() > 0.0);
        CHECK(doc["c1"].get<double>() < 1.0);
        CHECK(doc["n"].get<int>() == 580); // 600 joined - 19 warmup - 1 difference
    }
    SUBCASE("backtest writes the report files") {
        const RunResult r = run(
            "backtest --p1 cli_p1.csv --p2 cli_p2.csv --window 20 --sigma 0.2 --K 0.0001 "
            "--M -0.2 --capital 50000 --commission 1 --out cli_bt --format json");
        REQUIRE(r.code == 0);
        const auto doc = nlohmann::json::parse(r.out);
        CHECK(doc["end_balance"].get<double>() > 0.0);
        std::ifstream trades("cli_bt_trades.csv"), equity("cli_bt_equity.csv");
        CHECK(trades.good());
        CHECK(equity.good());
        std::string header;
        std::getline(trades, header);
        CHECK(header == "entry_date,exit_date,entry_z,exit_z,reason,profit");
        std::getline(equity, header);
        CHECK(header == "date,equity");
        std::remove("cli_bt_trades.csv");
        std::remove("cli_bt_equity.csv");
    }
    SUBCASE("missing input file exits with 4") {
        CHECK(run("calibrate --p1 cli_p1.csv --p2 missing.csv").code == 4);
    }
    std::remove("cli_p1.csv");
    std::remove("cli_p2.csv");
}

TEST_CASE("config file through the environment") {
    {
        std::ofstream cfg("cli_cfg.toml");
        cfg << "[thresholds]\nsigma = 0.36\n";
    }
    const std::string prefix = "PAIRS_CONFIG=cli_cfg.toml ";
    const std::string cmd = std::string(prefix) + PAIRS_CLI_PATH + " thresholds --format json 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    const int code = WEXITSTATUS(pclose(pipe));
    REQUIRE(code == 0);
    const auto doc = nlohmann::json::parse(out);
    CHECK(doc["params"]["sigma"].get<double>() == doctest::Approx(0.36));
    // Matches the equivalent flag invocation.
    const auto direct = nlohmann::json::parse(run("thresholds --sigma 0.36 --format json").out);
    CHECK(doc["x2"].get<double>() == direct["x2"].get<double>());
    std::remove("cli_cfg.toml");
}

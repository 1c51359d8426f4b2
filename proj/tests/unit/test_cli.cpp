#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "pooltest/cli.hpp"
#include "pooltest/codec.hpp"

using namespace pooltest;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "pooltest");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("pooltest_cli_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Cli, FitBeta) {
    const CliRun r = run({"fit-beta", "--lo", "0.258", "--hi", "0.505"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_NEAR(j["alpha"].get<double>() / 21.78, 1.0, 0.02);
    EXPECT_NEAR(j["beta"].get<double>() / 35.92, 1.0, 0.02);
}

TEST(Cli, SweepCsvRowCount) {
    const CliRun r = run({"sweep", "--n", "1..30", "--pi", "0.054", "--tau", "0.38", "--format", "csv", "--draws", "5000"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream is(r.out);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, metrics_csv_header());
    int rows = 0;
    while (std::getline(is, line)) rows += !line.empty();
    EXPECT_EQ(rows, 60);
    EXPECT_NE(r.err.find("seed: "), std::string::npos);
}

TEST(Cli, MetricsPerfectTestEfficiency) {
    const CliRun r = run({"metrics", "--n", "5", "--pi", "0.002", "--tau", "0", "--perfect-test"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_NEAR(j["metrics"]["tests_per_sample"].get<double>(), 0.20996, 1e-5);
    EXPECT_TRUE(j.contains("seed"));
}

TEST(Cli, CsvRoundTrip) {
    const CliRun r = run({"sweep", "--n", "1..12", "--pi", "beta:14.38,251.01", "--tau", "ci:0.142,0.221", "--format",
                       "csv", "--draws", "4000", "--curve", "logistic:35,1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_sweep_csv(r.out);
    EXPECT_EQ(rows.size(), 24u);
    EXPECT_EQ(sweep_csv(rows), r.out);
}

TEST(Cli, ByteIdenticalOutputFiles) {
    const std::vector<std::vector<std::string>> commands = {
        {"sweep", "--n", "1..15", "--pi", "0.01", "--tau", "0.18", "--draws", "4000"},
        {"sweep", "--n", "1..15", "--pi", "0.01", "--tau", "0.18", "--draws", "4000", "--format", "csv"},
        {"metrics", "--n", "7", "--pi", "0.02", "--tau", "0.3", "--draws", "4000"},
        {"simulate", "--prevalence", "Maine, October 2020", "--transmission", "Household (Spouses)", "--setting",
         "all_graph", "-B", "20", "--n", "1..10", "--draws", "4000", "--format", "csv"},
        {"recommend", "--pi", "0.01", "--tau", "beta:21.78,35.92", "--setting", "tau_graph", "-B", "20", "--n",
         "1..10", "--draws", "4000", "--min-pass-rate", "0.5"},
        {"fit-beta", "--lo", "0.02", "--hi", "0.052"},
        {"catalog", "--format", "csv"},
    };
    int i = 0;
    for (auto cmd : commands) {
        const fs::path a = temp_file("a" + std::to_string(i)), b = temp_file("b" + std::to_string(i));
        ++i;
        auto ca = cmd, cb = cmd;
        ca.insert(ca.end(), {"--output", a.string()});
        cb.insert(cb.end(), {"--output", b.string()});
        ASSERT_EQ(run(ca).code, 0) << cmd[0];
        ASSERT_EQ(run(cb).code, 0) << cmd[0];
        EXPECT_FALSE(slurp(a).empty());
        EXPECT_EQ(slurp(a), slurp(b)) << cmd[0];
        fs::remove(a);
        fs::remove(b);
    }
}

TEST(Cli, SeedChangesStochasticOutput) {
    const CliRun a = run({"metrics", "--n", "7", "--pi", "0.02", "--draws", "4000", "--seed", "1"});
    const CliRun b = run({"metrics", "--n", "7", "--pi", "0.02", "--draws", "4000", "--seed", "2"});
    EXPECT_NE(a.out, b.out);
    EXPECT_NE(a.err.find("seed: 1"), std::string::npos);
}

TEST(Cli, EnvironmentSeed) {
    ::setenv("POOLTEST_SEED", "31337", 1);
    const CliRun r = run({"metrics", "--n", "3", "--pi", "0.02", "--draws", "1000"});
    ::unsetenv("POOLTEST_SEED");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out)["seed"], 31337);
}

TEST(Cli, HelpForEverySubcommand) {
    const std::vector<std::pair<std::string, std::vector<std::string>>> flags = {
        {"metrics", {"--n", "--pi", "--tau", "--null-model", "--curve", "--perfect-test", "--tail", "--tail-ct",
                     "--weibull", "--draws", "--seed", "--threads", "--paper-literal-missed", "--format", "--output"}},
        {"sweep", {"--n", "--pi", "--tau", "--curve", "--format", "--output", "--seed"}},
        {"simulate", {"--prevalence", "--transmission", "--scenario-file", "--pi", "--tau", "--setting",
                      "--replicates", "--n", "--seed"}},
        {"fit-beta", {"--lo", "--hi", "--p-lo", "--p-hi", "--output"}},
        {"recommend", {"--min-sensitivity", "--min-pass-rate", "--pass-threshold", "--objective", "--setting"}},
        {"catalog", {"--format", "--output"}},
        {"serve", {"--bind", "--port", "--cors", "--seed", "--threads"}},
    };
    for (const auto& [sub, fl] : flags) {
        const CliRun r = run({sub, "--help"});
        EXPECT_EQ(r.code, 0) << sub;
        for (const auto& f : fl) EXPECT_NE(r.out.find(f), std::string::npos) << sub << " " << f;
    }
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({"sweep", "--pi", "0.01", "--bogus"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"sweep", "--pi", "abc"}).code, 2);
    EXPECT_EQ(run({"sweep", "--pi", "0.01", "--n", "0..5"}).code, 2);
    EXPECT_EQ(run({"sweep", "--pi", "0.01", "--curve", "cubic"}).code, 2);
    EXPECT_EQ(run({"simulate", "--prevalence", "Maine, October 2020"}).code, 2);
    EXPECT_EQ(run({"fit-beta", "--lo", "0.5", "--hi", "0.1"}).code, 2);
}

TEST(Cli, ComputationErrorExitsOne) {
    // A prevalence of zero leaves no positive pools to measure.
    EXPECT_EQ(run({"metrics", "--n", "4", "--pi", "0"}).code, 1);
}

TEST(Cli, InfeasibleRecommendationExitsZero) {
    const CliRun r = run({"recommend", "--pi", "0.01", "--tau", "0.2", "--n", "1..6", "--draws", "2000",
                       "--min-sensitivity", "1.01"});
    EXPECT_EQ(r.code, 0);
    const json j = json::parse(r.out);
    EXPECT_FALSE(j["recommendation"]["feasible"].get<bool>());
    EXPECT_EQ(j["recommendation"]["binding"][0], "min_sensitivity");
}

TEST(Cli, ScenarioFile) {
    const fs::path p = temp_file("scenario.json");
    std::ofstream(p) << R"J({"name":"ward","pi":{"ci95":{"lo":0.02,"hi":0.052}},"tau":{"point":0.1}})J";
    const CliRun r = run({"simulate", "--scenario-file", p.string(), "--setting", "pi_graph", "-B", "10", "--n", "1..4",
                       "--draws", "1000"});
    fs::remove(p);
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["result"]["scenario"], "ward");
    EXPECT_TRUE(j["config"]["scenario"]["pi"].contains("beta"));
}

TEST(Cli, LiteralMissedFlagSwitchesColumn) {
    const CliRun a = run({"metrics", "--n", "5", "--pi", "0.05", "--tau", "0.2", "--draws", "2000"});
    const CliRun b = run({"metrics", "--n", "5", "--pi", "0.05", "--tau", "0.2", "--draws", "2000",
                       "--paper-literal-missed"});
    const json ja = json::parse(a.out), jb = json::parse(b.out);
    EXPECT_EQ(jb["metrics"]["missed_per_sample"], ja["metrics"]["missed_paper_literal"]);
}

TEST(Cli, Catalog) {
    const CliRun r = run({"catalog"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out)["scenarios"].size(), 12u);
}

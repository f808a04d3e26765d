#include <gtest/gtest.h>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <tvcox/io.hpp>

namespace fs = std::filesystem;
using tvcox::io::json;
using tvcox::io::read_file;

namespace {

struct CliResult
{
    int exit_code;
    std::string out;
    std::string err;
};

/// Fresh scratch directory per test; the CLI runs inside it.
class Cli : public ::testing::Test
{
protected:
    fs::path dir;

    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() /
              ("tvcox_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    void TearDown() override
    {
        if (!HasFailure()) fs::remove_all(dir);
    }

    CliResult run(const std::string& args, const std::string& env = "") const
    {
        const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" TVCOX_CLI_PATH "' " + args +
                                " > stdout.txt 2> stderr.txt";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(dir / "stdout.txt"), read_file(dir / "stderr.txt")};
    }

    size_t line_count(const fs::path& p) const
    {
        std::ifstream in(dir / p);
        size_t n = 0;
        for (std::string line; std::getline(in, line);) ++n;
        return n;
    }

    void simulate_setting1(size_t n = 400) const
    {
        ASSERT_EQ(run("simulate --setting 1 --n " + std::to_string(n) + " --P 3 --seed 7 --out data.csv").exit_code, 0);
    }
};

} // namespace

TEST_F(Cli, SimulateWritesHeaderPlusRowsAndSidecar)
{
    const auto r = run("simulate --setting 1 --n 1000 --P 4 --seed 3 --out sim.csv");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(line_count("sim.csv"), 1001u);
    const auto side = json::parse(read_file(dir / "sim.csv.json"));
    EXPECT_EQ(side["tvcox_version"], std::string(tvcox::version));
    EXPECT_EQ(side["config"]["seed"], 3);
    EXPECT_EQ(side["coefficients"].size(), 4u);
    const auto ds = tvcox::survdata::load_csv((dir / "sim.csv").string());
    EXPECT_EQ(ds.n(), 1000u);
    EXPECT_EQ(ds.P(), 4);
}

TEST_F(Cli, SimulateSettingThreeRejectsFiveCovariates)
{
    const auto r = run("simulate --setting 3 --n 100 --P 5 --seed 1 --out s.csv");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.err.rfind("error: USAGE: ", 0), 0u) << r.err;
    EXPECT_FALSE(fs::exists(dir / "s.csv"));
}

TEST_F(Cli, SimulateRejectsUnknownSetting)
{
    const auto r = run("simulate --setting 4 --n 100 --P 2 --seed 1 --out s.csv");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.err.rfind("error: USAGE: ", 0), 0u) << r.err;
}

TEST_F(Cli, SimulateIsReproducible)
{
    ASSERT_EQ(run("simulate --setting 2 --n 300 --P 5 --J 3 --seed 9 --out a.csv").exit_code, 0);
    ASSERT_EQ(run("simulate --setting 2 --n 300 --P 5 --J 3 --seed 9 --out b.csv").exit_code, 0);
    ASSERT_EQ(run("simulate --setting 2 --n 300 --P 5 --J 3 --seed 10 --out c.csv").exit_code, 0);
    EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
    EXPECT_NE(read_file(dir / "a.csv"), read_file(dir / "c.csv"));
}

TEST_F(Cli, FitWritesThreeFilesAndConverges)
{
    simulate_setting1();
    const auto r = run("fit --data data.csv --K 5 --out out");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    for (const char* f : {"fit.json", "curves.csv", "tests.csv"}) EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
    const auto doc = json::parse(read_file(dir / "out/fit.json"));
    EXPECT_EQ(doc["tvcox_version"], std::string(tvcox::version));
    EXPECT_EQ(doc["config"]["K"], 5);
    EXPECT_TRUE(doc["fit"]["converged"].get<bool>());
    EXPECT_EQ(doc["theta"].size(), 3u);
    EXPECT_EQ(doc["theta"][0].size(), 5u);
    EXPECT_EQ(doc["tests"]["tests"].size(), 3u);
    // preamble + header + 100 grid points x 3 covariates
    EXPECT_EQ(line_count("out/curves.csv"), 302u);
    EXPECT_EQ(line_count("out/tests.csv"), 5u);
    const std::string curves = read_file(dir / "out/curves.csv");
    EXPECT_EQ(curves.rfind("# tvcox " + std::string(tvcox::version) + " config={", 0), 0u);
    EXPECT_NE(curves.find("\ntime,covariate,estimate,se,lower,upper\n"), std::string::npos);
}

TEST_F(Cli, FitIsDeterministicApartFromWallClock)
{
    simulate_setting1();
    ASSERT_EQ(run("fit --data data.csv --K 5 --seed 3 --out a").exit_code, 0);
    ASSERT_EQ(run("fit --data data.csv --K 5 --seed 3 --out a_again").exit_code, 0);
    auto a = json::parse(read_file(dir / "a/fit.json"));
    auto b = json::parse(read_file(dir / "a_again/fit.json"));
    a["fit"].erase("seconds");
    b["fit"].erase("seconds");
    a["config"].erase("out");
    b["config"].erase("out");
    EXPECT_EQ(a.dump(), b.dump());
}

TEST_F(Cli, NewtonOverGuardFailsWithCapacity)
{
    simulate_setting1();
    const auto r = run("fit --data data.csv --K 5 --optimizer newton --hessian-guard 10 --out out");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.err.rfind("error: CAPACITY: ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
    EXPECT_FALSE(fs::exists(dir / "out/fit.json"));
}

TEST_F(Cli, IterationCapExitsTwoWithOutputs)
{
    simulate_setting1();
    const auto r = run("fit --data data.csv --K 5 --max-iter 3 --out out");
    EXPECT_EQ(r.exit_code, 2) << r.err;
    const auto doc = json::parse(read_file(dir / "out/fit.json"));
    EXPECT_FALSE(doc["fit"]["converged"].get<bool>());
    EXPECT_EQ(doc["fit"]["convergence_reason"], "max-iterations");
    EXPECT_FALSE(doc["tests"]["converged"].get<bool>());
}

TEST_F(Cli, MalformedDataReportsParseError)
{
    std::ofstream(dir / "bad.csv") << "time,status,stratum,x1\n1.0,1,A,0.5\n2.0,1,A,oops\n";
    const auto r = run("fit --data bad.csv --K 4 --out out");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.err.rfind("error: PARSE: ", 0), 0u) << r.err;
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST_F(Cli, ConfigFileFillsUnsetFlagsOnly)
{
    simulate_setting1();
    std::ofstream(dir / "cfg.json") << R"({"K": 7, "optimizer": "newton", "data": "data.csv", "tol": 1e-7})";
    const auto r = run("fit --config cfg.json --K 4 --out out");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto doc = json::parse(read_file(dir / "out/fit.json"));
    EXPECT_EQ(doc["config"]["K"], 4);
    EXPECT_EQ(doc["config"]["optimizer"], "newton");
    EXPECT_EQ(doc["config"]["tol"], 1e-7);
    EXPECT_EQ(doc["spline"]["K"], 4);
}

TEST_F(Cli, ConfigFileRejectsUnknownKeys)
{
    simulate_setting1();
    std::ofstream(dir / "cfg.json") << R"({"learning_rate": 0.1})";
    const auto r = run("fit --config cfg.json --data data.csv --K 4");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.err.rfind("error: USAGE: ", 0), 0u) << r.err;
}

TEST_F(Cli, BenchEmitsOneRowPerReplicateAndOptimizer)
{
    const auto r = run("bench --setting 3 --n 200 --P 2 --K 5 --gamma 2 --optimizers mmsa,gradient --replicates 5 "
                       "--max-iter 300 --seed 4 --out bench.csv");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    // preamble + header + 10 rows
    EXPECT_EQ(line_count("bench.csv"), 12u);
    EXPECT_EQ(line_count("bench_summary.csv"), 4u);
    const std::string summary = read_file(dir / "bench_summary.csv");
    EXPECT_NE(summary.find("scenario,optimizer,n,P,K,time_sec,bias,imse,rejection_rate"), std::string::npos);
}

TEST_F(Cli, BenchPairsOptimizersOnIdenticalData)
{
    // The same optimizer listed twice must give identical rows per replicate.
    ASSERT_EQ(run("bench --setting 3 --n 200 --P 2 --K 5 --optimizers mmsa,mmsa --replicates 3 --seed 8 --out b.csv")
                  .exit_code, 0);
    std::istringstream in(read_file(dir / "b.csv"));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    for (int r = 0; r < 3; ++r) {
        std::string first, second;
        std::getline(in, first);
        std::getline(in, second);
        const auto strip = [](std::string s) {
            // drop time_sec (8th column)
            size_t start = 0;
            for (int c = 0; c < 7; ++c) start = s.find(',', start) + 1;
            return s.erase(start, s.find(',', start) - start);
        };
        EXPECT_EQ(strip(first), strip(second));
    }
}

TEST_F(Cli, BenchOutputDoesNotDependOnThreadCount)
{
    const std::string args = "bench --setting 1 --n 200 --P 2 --K 4 --optimizers mmsa,newton --replicates 4 --seed 2 --out ";
    ASSERT_EQ(run(args + "one.csv", "TVCOX_THREADS=1").exit_code, 0);
    ASSERT_EQ(run(args + "two.csv", "TVCOX_THREADS=3").exit_code, 0);
    const auto body = [&](const char* f) {
        std::string text = read_file(dir / f);
        text = text.substr(text.find('\n') + 1);
        std::string out;
        std::istringstream in(text);
        for (std::string l; std::getline(in, l);) {
            size_t start = 0;
            for (int c = 0; c < 7; ++c) start = l.find(',', start) + 1;
            out += l.erase(start, l.find(',', start) - start) + "\n";
        }
        return out;
    };
    EXPECT_EQ(body("one.csv"), body("two.csv"));
}

TEST_F(Cli, CvSingleCandidateIsChosen)
{
    simulate_setting1(300);
    const auto r = run("cv --data data.csv --K-grid 5 --folds 3 --optimizer newton --seed 1 --out cv");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("chosen K=5"), std::string::npos) << r.out;
    EXPECT_EQ(line_count("cv/cv.csv"), 3u);
}

TEST_F(Cli, CvIsDeterministic)
{
    simulate_setting1(300);
    ASSERT_EQ(run("cv --data data.csv --K-grid 4,6 --folds 3 --optimizer newton --seed 5 --out a").exit_code, 0);
    ASSERT_EQ(run("cv --data data.csv --K-grid 4,6 --folds 3 --optimizer newton --seed 5 --out a").exit_code, 0);
    const std::string first = read_file(dir / "a/cv.csv");
    ASSERT_EQ(run("cv --data data.csv --K-grid 4,6 --folds 3 --optimizer newton --seed 5 --out a").exit_code, 0);
    EXPECT_EQ(first, read_file(dir / "a/cv.csv"));
}

TEST_F(Cli, UnknownSubcommandOrFlagIsUsageError)
{
    EXPECT_EQ(run("frobnicate").exit_code, 1);
    const auto r = run("fit --data x.csv --K 4 --bogus");
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.err.rfind("error: USAGE: ", 0), 0u) << r.err;
}

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "erlangs_cli.hpp"

namespace fs = std::filesystem;
using erlangs::cli::json;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "erlangs");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = erlangs::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const std::vector<std::string> kUL{"--lambda", "100", "--mu", "5", "--theta", "1", "--p", "0.1", "--gamma", "0.5",
                                   "--c", "100"};
const std::vector<std::string> kOL{"--lambda", "100", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "1",
                                   "--c", "100"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail)
{
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

class TempDir : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("erlangs_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override
    {
        unsetenv("ERLANGS_OUTPUT_DIR");
        fs::remove_all(dir_);
    }
    fs::path dir_;
};

}  // namespace

TEST(Cli, FixedPointUnderloaded)
{
    const Outcome o = invoke(with({"fixed-point"}, kUL));
    ASSERT_EQ(o.code, 0) << o.err;
    const json j = json::parse(o.out);
    EXPECT_NEAR(j["q_star"].get<double>(), 20.0, 1e-9);
    EXPECT_NEAR(j["s_star"].get<double>(), 80.0, 1e-9);
    EXPECT_EQ(j["regime"], "UL");
}

TEST(Cli, OptionsBeforeSubcommand)
{
    const Outcome a = invoke(with({"fixed-point"}, kUL));
    const Outcome b = invoke(with(kUL, {"fixed-point"}));
    EXPECT_EQ(b.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, MomentsOverloaded)
{
    const Outcome o = invoke(with({"moments"}, kOL));
    ASSERT_EQ(o.code, 0) << o.err;
    const json j = json::parse(o.out);
    EXPECT_NEAR(j["v_qq"].get<double>(), 100.0, 1e-9);
    EXPECT_TRUE(j.contains("J"));
    EXPECT_TRUE(j.contains("Sigma"));
    EXPECT_EQ(j["regime"], "OL");
    EXPECT_NEAR(j["excess"]["mean_excess"].get<double>(), 100.0 / 3.0, 0.01);
}

TEST(Cli, JsonRoundTripsByteIdentical)
{
    for (const auto& args : {with({"fixed-point"}, kUL), with({"moments"}, kOL), with({"moments"}, kUL),
                             with({"thresholds"}, {"--lambda", "12", "--theta", "0.2", "--p", "0.3", "--gamma", "1",
                                                   "--c", "10"}),
                             with({"staff", "--metric", "delay", "--epsilon", "0.05", "--method", "all"},
                                  {"--lambda", "80", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "0.1"})}) {
        const Outcome o = invoke(args);
        ASSERT_EQ(o.code, 0) << o.err;
        EXPECT_EQ(json::parse(o.out).dump(2) + "\n", o.out);
    }
}

TEST(Cli, MissingFlagIsUsageError)
{
    const Outcome o = invoke({"fixed-point", "--lambda", "100", "--mu", "5"});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find("--theta"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError)
{
    EXPECT_EQ(invoke(with({"fixed-point", "--bogus", "1"}, kUL)).code, 2);
}

TEST(Cli, InvalidParametersReportFields)
{
    Outcome o = invoke({"fixed-point", "--lambda", "-1", "--mu", "5", "--theta", "1", "--p", "1.5", "--gamma", "0.5",
                        "--c", "100"});
    EXPECT_EQ(o.code, 2);
    const json j = json::parse(o.err);
    ASSERT_EQ(j["violations"].size(), 2u);
    EXPECT_EQ(j["violations"][0]["field"], "lambda");
    EXPECT_EQ(j["violations"][1]["field"], "p");
}

TEST(Cli, HelpExitsZero)
{
    const Outcome o = invoke({"--help"});
    EXPECT_EQ(o.code, 0);
    EXPECT_NE(o.out.find("simulate"), std::string::npos);
}

TEST(Cli, ThresholdsExample)
{
    const Outcome o = invoke({"thresholds", "--lambda", "12", "--theta", "0.2", "--p", "0.3", "--gamma", "1", "--c",
                              "10"});
    ASSERT_EQ(o.code, 0) << o.err;
    const json j = json::parse(o.out);
    EXPECT_NEAR(j["mu_neg"].get<double>(), 1.2 / 0.7, 1e-12);
    EXPECT_NEAR(j["mu_ol"].get<double>(), 1.875, 1e-12);
}

TEST(Cli, FluidCsv)
{
    const Outcome o = invoke(with({"fluid", "--horizon", "50", "--every", "100"}, kUL));
    ASSERT_EQ(o.code, 0) << o.err;
    std::istringstream is(o.out);
    std::string line, last;
    std::getline(is, line);
    EXPECT_EQ(line, "t,q,s");
    while (std::getline(is, line)) {
        last = line;
    }
    double t, q, s;
    char c1, c2;
    std::istringstream ls(last);
    ls >> t >> c1 >> q >> c2 >> s;
    EXPECT_DOUBLE_EQ(t, 50.0);
    EXPECT_NEAR(q, 20.0, 1e-6);
    EXPECT_NEAR(s, 80.0, 1e-6);
}

TEST(Cli, StaffDelayTable2Row)
{
    const Outcome o = invoke({"staff", "--metric", "delay", "--epsilon", "0.05", "--method", "all", "--lambda", "80",
                              "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "0.1"});
    ASSERT_EQ(o.code, 0) << o.err;
    const json j = json::parse(o.out);
    ASSERT_EQ(j["results"].size(), 2u);
    EXPECT_NEAR(j["results"][0]["c_real"].get<double>(), 494.71, 0.005);
    EXPECT_NEAR(j["results"][1]["c_real"].get<double>(), 516.04, 0.005);
    EXPECT_EQ(j["results"][1]["c_int"], 517);
}

TEST(Cli, StaffAbandonTable3Row)
{
    const Outcome o = invoke({"staff", "--metric", "abandonment", "--epsilon", "0.1", "--method", "all", "--lambda",
                              "80", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "10"});
    ASSERT_EQ(o.code, 0) << o.err;
    const json j = json::parse(o.out);
    EXPECT_NEAR(j["results"][0]["c_real"].get<double>(), 75.6, 1e-9);
    EXPECT_NEAR(j["results"][1]["c_real"].get<double>(), 76.73, 0.005);
}

TEST(Cli, StaffInfeasibleIsStatusNotFailure)
{
    const Outcome o = invoke({"staff", "--metric", "abandonment", "--epsilon", "0.001", "--c-max", "80", "--lambda",
                              "80", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "10"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(json::parse(o.out)["result"]["status"], "infeasible");
}

TEST(Cli, StaffRejectsBadTarget)
{
    EXPECT_EQ(invoke({"staff", "--metric", "delay", "--epsilon", "1.5", "--lambda", "80", "--mu", "1", "--theta", "1",
                      "--p", "0.5", "--gamma", "0.1"})
                  .code,
              2);
    EXPECT_EQ(invoke({"staff", "--metric", "delay", "--epsilon", "0.1", "--method", "implicit", "--lambda", "80",
                      "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "0.1"})
                  .code,
              2);
}

TEST(Cli, TablePresetRows)
{
    const Outcome o = invoke({"table", "--kind", "abandonment", "--digits", "2"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.err.find("9 preset rows"), std::string::npos);
    EXPECT_NE(o.out.find("80,1,1,0.5,10,0.1,,75.60,,76.73,,ok"), std::string::npos) << o.out;
}

TEST(Cli, TableGridAndEmptyDimension)
{
    const std::vector<std::string> grid{"table", "--kind", "delay", "--lambdas", "80,100", "--mus", "1",
                                        "--thetas", "1", "--ps", "0.5", "--gammas", "0.1", "--epsilons", "0.05"};
    const Outcome o = invoke(grid);
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.err.find("2 grid rows"), std::string::npos);
    std::vector<std::string> missing(grid.begin(), grid.end() - 2);
    EXPECT_EQ(invoke(missing).code, 2);
    EXPECT_EQ(invoke(with(grid, {"--cap", "1"})).code, 2);
}

TEST(Cli, SimulateDeterministicAndNoCiForOneRep)
{
    const auto args = with({"simulate", "--customers", "2000", "--reps", "1", "--seed", "42"}, kOL);
    const Outcome a = invoke(args);
    const Outcome b = invoke(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const json j = json::parse(a.out);
    EXPECT_EQ(j["seed"], 42);
    EXPECT_FALSE(j["metrics"]["mean_q"].contains("half_width"));
    EXPECT_TRUE(j["conservation"]["counts_conserved"].get<bool>());

    const json k = json::parse(invoke(with({"simulate", "--customers", "2000", "--reps", "3", "--seed", "42"}, kOL)).out);
    EXPECT_TRUE(k["metrics"]["mean_q"].contains("half_width"));
}

TEST(Cli, SimulateRejectsFractionalServers)
{
    EXPECT_EQ(invoke({"simulate", "--lambda", "10", "--mu", "1", "--theta", "1", "--p", "0.5", "--gamma", "1", "--c",
                      "2.5"})
                  .code,
              2);
}

TEST_F(TempDir, OutputFilesAtomicAndRepeatable)
{
    const std::string out = (dir_ / "summary.json").string();
    const std::string traj = (dir_ / "traj.csv").string();
    const std::string ev = (dir_ / "events.csv").string();
    const auto args = with({"simulate", "--customers", "1000", "--reps", "2", "--seed", "7", "--grid-dt", "1",
                            "--trajectory-csv", traj, "--events-csv", ev, "--out", out},
                           kOL);
    ASSERT_EQ(invoke(args).code, 0);
    const std::string s1 = slurp(out), t1 = slurp(traj), e1 = slurp(ev);
    EXPECT_EQ(t1.rfind("t,q,s\n", 0), 0u);
    EXPECT_EQ(e1.rfind("t,event,q,s\n", 0), 0u);
    ASSERT_EQ(invoke(args).code, 0);
    EXPECT_EQ(slurp(out), s1);
    EXPECT_EQ(slurp(traj), t1);
    EXPECT_EQ(slurp(ev), e1);
    for (const auto& entry : fs::directory_iterator(dir_)) {
        EXPECT_NE(entry.path().extension(), ".tmp");
    }
}

TEST_F(TempDir, OutputDirectoryFromEnvironment)
{
    setenv("ERLANGS_OUTPUT_DIR", dir_.c_str(), 1);
    const Outcome o = invoke(with({"fixed-point", "--out", "fp.json"}, kUL));
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_TRUE(o.out.empty());
    EXPECT_EQ(json::parse(slurp(dir_ / "fp.json"))["regime"], "UL");
}

TEST_F(TempDir, UnwritableOutputIsIoError)
{
    const Outcome o = invoke(with({"fixed-point", "--out", (dir_ / "missing" / "fp.json").string()}, kUL));
    EXPECT_EQ(o.code, 3);
}

TEST_F(TempDir, ConfigFileAndFlagPrecedence)
{
    const fs::path cfg = dir_ / "model.toml";
    std::ofstream(cfg) << "lambda = 100\nmu = 5\ntheta = 1\np = 0.1\ngamma = 0.5\nc = 100\n";
    Outcome o = invoke({"--config", cfg.string(), "fixed-point"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NEAR(json::parse(o.out)["s_star"].get<double>(), 80.0, 1e-9);

    o = invoke({"--config", cfg.string(), "--c", "200", "fixed-point"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NEAR(json::parse(o.out)["s_star"].get<double>(), 180.0, 1e-9);

    EXPECT_EQ(invoke({"--config", (dir_ / "absent.toml").string(), "fixed-point"}).code, 2);
}

TEST(Cli, ValidateGate)
{
    const std::vector<std::string> small{"validate", "--draws", "50", "--customers", "20000", "--reps", "10"};
    const Outcome ok = invoke(small);
    EXPECT_EQ(ok.code, 0) << ok.out;
    EXPECT_TRUE(json::parse(ok.out)["passed"].get<bool>());

    const Outcome bad = invoke(with(small, {"--inject-sigma-fault"}));
    EXPECT_EQ(bad.code, 1);
    const json j = json::parse(bad.out);
    EXPECT_FALSE(j["passed"].get<bool>());
    bool lyapunov_failed = false;
    for (const auto& c : j["checks"]) {
        if (c["name"].get<std::string>().find("lyapunov") != std::string::npos && !c["passed"].get<bool>()) {
            lyapunov_failed = true;
        }
    }
    EXPECT_TRUE(lyapunov_failed);
}

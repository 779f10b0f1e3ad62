#include "cli.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

namespace ncelm {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ncelm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), {out, err});
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = dir_.file("data.csv");
    testing::write_csv(testing::gaussian_blobs({60, 40}, 6, 17, 0.8), data_);
  }

  std::vector<std::string> train_args(const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"train", "--data", data_, "--output-dir", out, "--hidden", "10", "--learners", "3"};
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  }

  testing::TempDir dir_;
  std::string data_;
};

TEST_F(CliTest, TrainWritesModelAndTrace) {
  const auto out = dir_.file("run");
  const auto r = run_cli(train_args(out));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("iterations=10"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("accuracy="), std::string::npos);
  EXPECT_NE(r.out.find("converged="), std::string::npos);

  const std::string csv = testing::read_file(out + "/trace.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
  const Json model = Json::parse(testing::read_file(out + "/model.json"));
  EXPECT_EQ(model["learners"].size(), 3U);
  EXPECT_EQ(model["training_split"]["seed"], 1);
  const Json trace = Json::parse(testing::read_file(out + "/trace.json"));
  EXPECT_EQ(trace["records"].size(), 10U);
}

TEST_F(CliTest, SingleIterationAndNoTrace) {
  const auto out = dir_.file("one");
  const auto r = run_cli(train_args(out, {"--iterations", "1", "--no-trace"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("iterations=1 "), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(out + "/model.json"));
  EXPECT_FALSE(std::filesystem::exists(out + "/trace.csv"));
}

TEST_F(CliTest, ErrorsMapToExitCodes) {
  const auto missing = run_cli({"train", "--data", dir_.file("nope.csv"), "--output-dir", dir_.file("x")});
  EXPECT_EQ(missing.code, 3);
  EXPECT_NE(missing.err.find("nope.csv"), std::string::npos);

  EXPECT_EQ(run_cli(train_args(dir_.file("x"), {"--C", "0"})).code, 2);
  EXPECT_EQ(run_cli(train_args(dir_.file("x"), {"--lambda", "-1"})).code, 2);
  EXPECT_EQ(run_cli(train_args(dir_.file("x"), {"--activation", "relu"})).code, 2);
  EXPECT_EQ(run_cli(train_args(dir_.file("x"), {"--test-fraction", "1.5"})).code, 2);
  EXPECT_EQ(run_cli({"train"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);

  const auto bad = run_cli({"train", "--data", std::string(NCELM_TEST_DATA) + "/bad_cell.csv", "--output-dir",
                            dir_.file("x")});
  EXPECT_EQ(bad.code, 3);
  EXPECT_NE(bad.err.find("oops"), std::string::npos);
}

TEST_F(CliTest, TracesAreByteIdenticalAcrossRuns) {
  ASSERT_EQ(run_cli(train_args(dir_.file("a"), {"--lambda", "1e-3"})).code, 0);
  ASSERT_EQ(run_cli(train_args(dir_.file("b"), {"--lambda", "1e-3"})).code, 0);
  for (const char* name : {"/trace.csv", "/trace.json", "/model.json"}) {
    EXPECT_EQ(testing::read_file(dir_.file("a") + name), testing::read_file(dir_.file("b") + name)) << name;
  }
}

TEST_F(CliTest, ConfigFileWithCommandLineOverride) {
  {
    std::ofstream cfg(dir_.file("run.ini"));
    cfg << "hidden = 5\nlearners = 2\niterations = 3\nlambda = 0.01\n";
  }
  const auto out = dir_.file("cfg");
  const auto r = run_cli({"train", "--config", dir_.file("run.ini"), "--data", data_, "--output-dir", out,
                          "--iterations", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json model = Json::parse(testing::read_file(out + "/model.json"));
  EXPECT_EQ(model["config"]["hidden"], 5);
  EXPECT_EQ(model["config"]["learners"], 2);
  EXPECT_EQ(model["config"]["max_iterations"], 2);
  EXPECT_EQ(model["config"]["lambda"], 0.01);

  {
    std::ofstream cfg(dir_.file("bad.ini"));
    cfg << "hiden = 5\n";
  }
  const auto bad = run_cli({"train", "--config", dir_.file("bad.ini"), "--data", data_, "--output-dir", out});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("hiden"), std::string::npos);
}

TEST_F(CliTest, SweepSharesFirstIterateAcrossLambda) {
  const auto out = dir_.file("sweep");
  const auto r = run_cli({"sweep", "--data", data_, "--output-dir", out, "--hidden", "10", "--learners", "3",
                          "--iterations", "4", "--lambdas", "1e-6,1e-4,1e-2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  std::istringstream in(testing::read_file(out + "/sweep.csv"));
  const auto table = parse_csv(in);
  EXPECT_EQ(table.header, (std::vector<std::string>{"lambda", "r", "d_l1"}));
  ASSERT_EQ(table.rows.size(), 12U);
  for (std::size_t i : {4U, 8U}) {
    EXPECT_EQ(table.rows[i][1], "1");
    EXPECT_EQ(table.rows[i][2], table.rows[0][2]);
  }
  EXPECT_EQ(run_cli({"sweep", "--data", data_, "--output-dir", out, "--lambdas", ""}).code, 2);
  EXPECT_EQ(run_cli({"sweep", "--data", data_, "--output-dir", out}).code, 2);
  EXPECT_EQ(run_cli({"sweep", "--data", data_, "--output-dir", out, "--lambdas", "1e-3,abc"}).code, 2);
}

TEST_F(CliTest, DiagnoseFixedPointAndEarlyModel) {
  const auto fixed = dir_.file("fixed");
  ASSERT_EQ(run_cli(train_args(fixed, {"--lambda", "0", "--iterations", "2"})).code, 0);
  const auto r = run_cli({"diagnose", "--model", fixed + "/model.json", "--data", data_});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_LE(j["d_B_TB"].get<double>(), 1e-20);
  EXPECT_EQ(j["lambda_bound_prime"], "inf");
  EXPECT_EQ(j["lambda_below_bound"], true);

  const auto early = dir_.file("early");
  ASSERT_EQ(run_cli(train_args(early, {"--lambda", "1e-2", "--iterations", "1"})).code, 0);
  const auto e = run_cli({"diagnose", "--model", early + "/model.json", "--data", data_});
  ASSERT_EQ(e.code, 0) << e.err;
  const Json ej = Json::parse(e.out);
  EXPECT_GT(ej["d_B_TB"].get<double>(), 0.0);
  EXPECT_EQ(ej["per_learner_d"].size(), 3U);
  EXPECT_EQ(ej["eta"].size(), 3U);

  const auto mismatch =
      run_cli({"diagnose", "--model", early + "/model.json", "--data", std::string(NCELM_TEST_DATA) + "/three_class.csv"});
  EXPECT_EQ(mismatch.code, 3);
  EXPECT_NE(mismatch.err.find("K=6"), std::string::npos) << mismatch.err;
}

TEST_F(CliTest, PredictWritesLabels) {
  const auto out = dir_.file("pred");
  ASSERT_EQ(run_cli(train_args(out)).code, 0);
  const auto r = run_cli({"predict", "--model", out + "/model.json", "--data", data_, "--label-column", "label"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("prediction\n", 0), 0U);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 101);
  EXPECT_NE(r.err.find("accuracy="), std::string::npos);

  const auto file = run_cli({"predict", "--model", out + "/model.json", "--data", data_, "--label-column", "label",
                             "--output", dir_.file("p.csv")});
  ASSERT_EQ(file.code, 0);
  EXPECT_EQ(testing::read_file(dir_.file("p.csv")), r.out);

  const auto wrong = run_cli({"predict", "--model", out + "/model.json", "--data", data_});
  EXPECT_EQ(wrong.code, 3);  // label column read as a feature
}

}  // namespace
}  // namespace ncelm

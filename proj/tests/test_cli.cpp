#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kData = THERMIDENT_DATA_DIR;
const fs::path kTmp = fs::path(THERMIDENT_TEST_TMP) / "cli";

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

CliResult run(const std::string& args) {
  fs::create_directories(kTmp);
  const fs::path out = kTmp / "stdout.txt";
  const fs::path err = kTmp / "stderr.txt";
  const std::string cmd = std::string("\"") + THERMIDENT_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// A shortened twin run: two weeks of operation and a one-day horizon of
// eight steps.
std::string small_run(const fs::path& out) {
  return "--config \"" + (kData / "twin" / "run.json").string() + "\" --out \"" + out.string() +
         "\" --set /operation/weeks=2 --set /operation/training_weeks=1 --set /optimizer/max_iterations=2"
         " --set /prediction/horizon=8";
}

class Pipeline : public ::testing::Test {
 protected:
  static fs::path out() { return kTmp / "pipeline"; }

  static void SetUpTestSuite() {
    fs::remove_all(out());
    for (const char* cmd : {"excite", "synthesize", "identify", "estimate-ig", "predict", "evaluate"}) {
      const CliResult r = run(std::string(cmd) + " " + small_run(out()));
      statuses().push_back(r.status);
      if (r.status != 0) std::fprintf(stderr, "%s failed: %s\n", cmd, r.err.c_str());
      if (std::string(cmd) == "evaluate") evaluate_out() = r.out;
    }
  }

  static std::vector<int>& statuses() {
    static std::vector<int> s;
    return s;
  }
  static std::string& evaluate_out() {
    static std::string s;
    return s;
  }
};

TEST_F(Pipeline, EveryStageSucceeds) {
  EXPECT_EQ(statuses(), std::vector<int>(6, 0));
  EXPECT_NE(evaluate_out().find("1-step"), std::string::npos) << evaluate_out();
}

TEST_F(Pipeline, WritesTheExpectedFiles) {
  for (const char* f : {"excitation/schedule_0.csv", "data/weekend_1.csv", "data/weekend_1.truth.csv",
                        "data/training.csv", "data/validation.csv", "identification/params.json",
                        "identification/report.json", "ig/profile.csv", "ig/weekly.csv",
                        "ig/temperature_equivalent.csv", "predictions/fixed.csv", "predictions/online_1step.csv",
                        "evaluation/report.json", "evaluation/report_1step.json", "evaluation/zone_rms.csv",
                        "evaluation/horizon_curve.csv"}) {
    EXPECT_TRUE(fs::exists(out() / f)) << f;
  }
  EXPECT_FALSE(fs::exists(out() / ".thermident.lock"));
}

TEST_F(Pipeline, OutputsCarryTheConfigHash) {
  const json report = json::parse(slurp(out() / "evaluation" / "report.json"));
  const std::string hash = report["metadata"]["config_hash"];
  EXPECT_EQ(hash.size(), 16u);
  EXPECT_EQ(json::parse(slurp(out() / "identification" / "params.json"))["metadata"]["config_hash"], hash);
  for (const char* f : {"data/training.csv", "ig/profile.csv", "predictions/fixed.csv", "evaluation/zone_rms.csv"}) {
    EXPECT_EQ(slurp(out() / f).rfind("# config_hash: " + hash + "\n", 0), 0u) << f;
  }
  EXPECT_EQ(report["predictors"]["fixed"]["horizon"], 8);
}

TEST_F(Pipeline, RerunIsByteIdentical) {
  const std::string before = slurp(out() / "data" / "validation.csv");
  const std::string sched = slurp(out() / "excitation" / "schedule_1.csv");
  ASSERT_EQ(run("excite " + small_run(out())).status, 0);
  ASSERT_EQ(run("synthesize " + small_run(out())).status, 0);
  EXPECT_EQ(slurp(out() / "data" / "validation.csv"), before);
  EXPECT_EQ(slurp(out() / "excitation" / "schedule_1.csv"), sched);
}

TEST_F(Pipeline, IdentifyFromTruthHasZeroObjective) {
  const fs::path truth_out = kTmp / "truth";
  fs::remove_all(truth_out);
  fs::create_directories(truth_out);
  fs::copy(out() / "data", truth_out / "data", fs::copy_options::recursive);
  const CliResult r = run("identify " + small_run(truth_out) + " --set /optimizer/initial_guess=" +
                    (kData / "twin" / "params.json").string());
  ASSERT_EQ(r.status, 0) << r.err;
  ASSERT_EQ(r.out.rfind("objective ", 0), 0u) << r.out;
  EXPECT_LT(std::stod(r.out.substr(10)), 1e-6);
}

TEST_F(Pipeline, LockedOutputIsAnIoError) {
  { std::ofstream(out() / ".thermident.lock") << ""; }
  const CliResult r = run("estimate-ig " + small_run(out()));
  fs::remove(out() / ".thermident.lock");
  EXPECT_EQ(r.status, 1);
  const json err = json::parse(r.err.substr(r.err.find('{')));
  EXPECT_EQ(err["error"]["code"], "E_IO");
}

TEST(Cli, BuildWritesTheArtifact) {
  const fs::path dir = kTmp / "build";
  fs::remove_all(dir);
  const CliResult r = run("build --building \"" + (kData / "twin" / "building.json").string() + "\" --params \"" +
                    (kData / "twin" / "params.json").string() + "\" --output \"" + (dir / "model.json").string() + "\"");
  ASSERT_EQ(r.status, 0) << r.err;
  const json model = json::parse(slurp(dir / "model.json"));
  EXPECT_EQ(model["schema"], "thermident-model/1");
  EXPECT_EQ(model["metadata"]["state_count"], "71");
  EXPECT_EQ(model["dt"], 900.0);
}

TEST(Cli, MissingAdjacencyIsASchemaError) {
  std::string text = slurp(kData / "twin" / "building.json");
  const auto begin = text.find("\"adjacent\"");
  text.erase(begin, text.find(']', begin) - begin + 1);
  text.erase(text.rfind(',', begin), 1);
  fs::create_directories(kTmp);
  const fs::path bad = kTmp / "no_adjacency.json";
  std::ofstream(bad) << text;
  const CliResult r = run("build --building \"" + bad.string() + "\" --params \"" +
                    (kData / "twin" / "params.json").string() + "\" --output \"" + (kTmp / "m.json").string() + "\"");
  EXPECT_EQ(r.status, 1);
  const json err = json::parse(r.err.substr(r.err.find('{')));
  EXPECT_EQ(err["error"]["code"], "E_SCHEMA");
  const std::string msg = err["error"]["message"];
  EXPECT_NE(msg.find("no_adjacency.json:5:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("adjacent"), std::string::npos) << msg;
}

TEST(Cli, CompareRecomputesTheFixture) {
  const fs::path dir = kTmp / "compare";
  fs::remove_all(dir);
  const CliResult r = run("evaluate --compare \"" + (kData / "fixtures" / "table3.json").string() + "\" --out \"" +
                    dir.string() + "\"");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("improvement 36.43%"), std::string::npos) << r.out;
  const json report = json::parse(slurp(dir / "compare.json"));
  EXPECT_NEAR(report["improvement"]["mean_percent"].get<double>(), 36.43, 0.01);
  EXPECT_EQ(report["metadata"]["config_hash"].get<std::string>().size(), 16u);
}

TEST(Cli, ConfigProblemsAreReported) {
  const CliResult missing = run("evaluate");
  EXPECT_EQ(missing.status, 1);
  EXPECT_NE(missing.err.find("E_CONFIG"), std::string::npos);
  const CliResult bad_set = run("excite --config \"" + (kData / "twin" / "run.json").string() + "\" --set nonsense");
  EXPECT_EQ(bad_set.status, 1);
  EXPECT_NE(bad_set.err.find("E_CONFIG"), std::string::npos);
  EXPECT_NE(run("no-such-command").status, 0);
}

}  // namespace

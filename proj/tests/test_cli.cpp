#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "erode/cli.hpp"
#include "erode/reference_models.hpp"
#include "support/oracles.hpp"

namespace erode {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "erode_cli_test" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    store_ = (dir_ / "test.store").string();
    unsetenv(kStoreEnvVar);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void ingest_seed() {
    const CliRun r = run({"ingest", testing::seed_csv_path().string(), "--store", store_});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  std::string write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream(path) << content;
    return path.string();
  }

  fs::path dir_;
  std::string store_;
};

// ---------------------------------------------------------------------------
// ingest

TEST_F(Cli, IngestSeed) {
  const CliRun r = run({"ingest", testing::seed_csv_path().string(), "--store", store_});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "12 added, 0 rejected\n");
  EXPECT_TRUE(r.err.empty());
}

TEST_F(Cli, IngestEmptyCsv) {
  const CliRun r = run({"ingest", write("empty.csv", ""), "--store", store_});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("0 added", 0), 0u);
}

TEST_F(Cli, IngestBadRowFails) {
  const std::string csv = write(
      "bad.csv",
      "po_material,to_material,machine,operation,regime,voltage_v,current_a,power_w,time_s\n"
      "PC52,OL37,MEC-50,debiting,I,16,30,480,152\n"
      "PC52,OL37,MEC-50,debiting,I,16,30,500,152\n");
  const CliRun r = run({"ingest", csv, "--store", store_});
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.out, "1 added, 1 rejected\n");
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, IngestUnreadableFile) {
  const CliRun r = run({"ingest", (dir_ / "missing.csv").string(), "--store", store_});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
  EXPECT_FALSE(fs::exists(store_));
}

TEST_F(Cli, IngestAppends) {
  ingest_seed();
  ingest_seed();
  const CliRun r = run({"query", "--store", store_});
  EXPECT_EQ(count_lines(r.out), 25u);
  EXPECT_NE(r.out.find("\n24,PC52"), std::string::npos);
}

TEST_F(Cli, StorePathFromEnvironment) {
  setenv(kStoreEnvVar, store_.c_str(), 1);
  EXPECT_EQ(run({"ingest", testing::seed_csv_path().string()}).code, 0);
  EXPECT_TRUE(fs::exists(store_));
  EXPECT_EQ(count_lines(run({"query"}).out), 13u);
  unsetenv(kStoreEnvVar);
}

// ---------------------------------------------------------------------------
// query

TEST_F(Cli, QueryFilters) {
  ingest_seed();
  EXPECT_EQ(count_lines(run({"query", "--store", store_, "--regime", "IV"}).out), 4u);
  EXPECT_EQ(count_lines(run({"query", "--store", store_, "--machine", "MEC-50"}).out), 13u);
  const CliRun none = run({"query", "--store", store_, "--po-material", "none"});
  EXPECT_EQ(none.code, 0);
  EXPECT_EQ(count_lines(none.out), 1u);
}

TEST_F(Cli, QueryOrderedById) {
  ingest_seed();
  const CliRun r = run({"query", "--store", store_, "--regime", "IV"});
  EXPECT_EQ(r.out,
            "id,po_material,to_material,machine,operation,regime,voltage_v,current_a,power_w,"
            "time_s\n"
            "10,PC52,OL37,MEC-50,debiting,IV,25,120,3000,30\n"
            "11,PC52,OL37,MEC-50,debiting,IV,30,150,4500,23\n"
            "12,PC52,OL37,MEC-50,debiting,IV,35,200,7000,15\n");
}

TEST_F(Cli, QueryMissingStore) {
  const CliRun r = run({"query", "--store", (dir_ / "nope.store").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("store not found"), std::string::npos);
}

// ---------------------------------------------------------------------------
// fit

TEST_F(Cli, FitPrintsClosedFormSlope) {
  ingest_seed();
  const CliRun r = run({"fit", "--store", store_, "--degrees", "1"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("132.7743904 - 0.01907173932*P"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("training data"), std::string::npos);
}

TEST_F(Cli, FitMarksCubicWithCubicValidation) {
  ingest_seed();
  std::string validation = "power_w,time_s\n";
  for (double p = 500; p <= 6900; p += 400) {
    validation += format_exact(p) + "," + format_exact(reference::cubic().evaluate(p)) + "\n";
  }
  const std::string path = write("validation.csv", validation);
  const std::string model_path = (dir_ / "best.model").string();
  const CliRun r = run({"fit", "--store", store_, "--validation", path, "--format", "csv",
                     "--save-model", model_path});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\n3,"), std::string::npos);
  const auto row3 = r.out.substr(r.out.find("\n3,") + 1);
  EXPECT_NE(row3.find(",optimum,"), std::string::npos) << r.out;
  std::ifstream m(model_path);
  EXPECT_EQ(read_model(m).degree(), 3);
}

TEST_F(Cli, FitSkipsUnsupportedDegree) {
  const std::string csv = write(
      "two.csv",
      "po_material,to_material,machine,operation,regime,voltage_v,current_a,power_w,time_s\n"
      "PC52,OL37,MEC-50,debiting,I,16,30,480,152\n"
      "PC52,OL37,MEC-50,debiting,I,18,35,630,140\n");
  ASSERT_EQ(run({"ingest", csv, "--store", store_}).code, 0);
  const CliRun r = run({"fit", "--store", store_, "--degrees", "1,3"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("degree 3 skipped"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("degree 1"), std::string::npos);
}

TEST_F(Cli, FitRejectsDegreeOutOfRange) {
  ingest_seed();
  EXPECT_EQ(run({"fit", "--store", store_, "--degrees", "0"}).code, 2);
}

// ---------------------------------------------------------------------------
// optimize / invert

TEST_F(Cli, OptimizeReferenceQuadratic) {
  const CliRun r = run({"optimize", "--reference", "quadratic", "--format", "csv"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "method,argmin_p_w,min_time_s,evaluations,converged,physically_valid\n"
            "analytic,5195.4555,0.6945,3,true,true\n");
}

TEST_F(Cli, OptimizeReferenceLinearIsInvalid) {
  const CliRun r = run({"optimize", "--reference", "linear", "--format", "csv"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("analytic,7000.0000,-19.0472,2,true,false"), std::string::npos) << r.out;
  EXPECT_NE(r.err.find("not a positive processing time"), std::string::npos);
}

TEST_F(Cli, OptimizeAllMethodsAgree) {
  for (const char* ref : {"linear", "quadratic", "cubic"}) {
    const CliRun r = run({"optimize", "--reference", ref, "--method", "all", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto pos = r.out.find("max |t* - analytic t*|: ");
    ASSERT_NE(pos, std::string::npos);
    const double spread = std::stod(r.out.substr(pos + 24));
    EXPECT_LT(spread, 1e-2) << ref;
  }
}

TEST_F(Cli, OptimizeIsDeterministic) {
  const std::vector<std::string> args{"optimize", "--reference", "cubic", "--method", "all",
                                      "--seed", "17"};
  EXPECT_EQ(run(args).out, run(args).out);
}

TEST_F(Cli, OptimizeFromStoreFit) {
  ingest_seed();
  const CliRun r = run({"optimize", "--store", store_, "--degree", "2", "--format", "csv"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("analytic,"), std::string::npos);
}

TEST_F(Cli, AnalyticRejectsHighDegree) {
  const std::string path = write("quartic.model",
                                 "erode-model v1\ndegree 4\ncoefficients 100 0 0 0 1e-12\n"
                                 "domain 350 7000\nscaling 3675 3325\n");
  const CliRun r = run({"optimize", "--model", path});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("grid"), std::string::npos);
  EXPECT_EQ(run({"optimize", "--model", path, "--method", "grid"}).code, 0);
}

TEST_F(Cli, OptimizeRequiresModelSource) {
  EXPECT_EQ(run({"optimize"}).code, 2);
  EXPECT_EQ(run({"optimize", "--reference", "quintic"}).code, 2);
  EXPECT_EQ(run({"optimize", "--reference", "linear", "--lo", "-5"}).code, 2);
  EXPECT_EQ(run({"optimize", "--reference", "linear", "--method", "magic"}).code, 2);
}

TEST_F(Cli, InvertReferenceLinear) {
  const CliRun r = run({"invert", "--reference", "linear", "--target", "71.75"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "P = 3000.1233 W  (t_p = 71.7500 s)\n");
  const CliRun none = run({"invert", "--reference", "quadratic", "--target", "0.1"});
  EXPECT_EQ(none.code, 0);
  EXPECT_NE(none.out.find("no power"), std::string::npos);
}

// ---------------------------------------------------------------------------
// report

TEST_F(Cli, ReportWritesFiles) {
  ingest_seed();
  const auto out_dir = dir_ / "report";
  const CliRun r = run({"report", "--store", store_, "--out", out_dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 7u);
  const std::string scatter = testing::read_file(out_dir / "scatter.csv");
  EXPECT_EQ(count_lines(scatter), 13u);
  const std::string curves = testing::read_file(out_dir / "curves.csv");
  EXPECT_NE(curves.find("\n3000,"), std::string::npos);
  EXPECT_NE(curves.find(",71.7528,"), std::string::npos);
}

TEST_F(Cli, ReportEmptyStoreWritesNothing) {
  std::ofstream(store_) << "erode-store v1\n";
  const auto out_dir = dir_ / "report";
  const CliRun r = run({"report", "--store", store_, "--out", out_dir.string()});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(out_dir));
}

TEST_F(Cli, ReportRejectsTooFewCurvePoints) {
  ingest_seed();
  EXPECT_EQ(run({"report", "--store", store_, "--out", (dir_ / "r").string(), "--curve-points",
                 "50"})
                .code,
            2);
}

// ---------------------------------------------------------------------------
// process level

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  const CliRun help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("optimize"), std::string::npos);
}

TEST_F(Cli, BinaryExitCodes) {
  const std::string exe = ERODE_CLI_PATH;
  const std::string quiet = " >/dev/null 2>&1";
  EXPECT_EQ(std::system((exe + " ingest " + testing::seed_csv_path().string() + " --store " +
                         store_ + quiet)
                            .c_str()),
            0);
  const int missing =
      std::system((exe + " query --store " + (dir_ / "nope").string() + quiet).c_str());
  EXPECT_NE(missing, 0);
}

}  // namespace
}  // namespace erode

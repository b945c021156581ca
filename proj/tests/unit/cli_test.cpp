#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ember/cli/cli.hpp"
#include "ember/common/memory_json.hpp"
#include "test_util.hpp"

namespace ember {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ember_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "tiny.json") << memory_to_json(test::tiny_sls_inputs()).dump();
  }
  void TearDown() override { fs::remove_all(dir_); }

  int ember(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string kernel(const std::string& name) { return std::string(EMBER_SOURCE_DIR) + "/kernels/" + name + ".scf"; }
  static std::string golden(const std::string& name) { return slurp(std::string(EMBER_TEST_DATA_DIR) + "/golden/" + name); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, CompileMatchesGoldens) {
  ASSERT_EQ(ember({"compile", kernel("sls"), "--opt", "0"}), cli::kOk) << err_.str();
  EXPECT_EQ(out_.str(), golden("sls_opt0.dlc"));
  ASSERT_EQ(ember({"compile", kernel("sls"), "--opt", "3", "--vlen", "8", "-o", path("a.dlc")}), cli::kOk);
  EXPECT_EQ(slurp(path("a.dlc")), golden("sls_opt3_v8.dlc"));
}

TEST_F(Cli, KernelFilesMatchBuiltins) {
  for (auto k : workloads::kAllKernels)
    EXPECT_EQ(slurp(kernel(workloads::kernel_name(k))), workloads::kernel_source(k)) << workloads::kernel_name(k);
}

TEST_F(Cli, TwoCandidatesAtOneLevelIsADiagnostic) {
  std::ofstream(path("two.scf")) << R"(void two(a: mref<4 x idx>, b: mref<4 x idx>, o: mref<4 x idx>, n: idx) {
  for(idx i = 0; i < n; i++) {
    idx x = a[i];
    o[i] = x;
  }
  for(idx j = 0; j < n; j++) {
    idx y = b[j];
    o[j] = y;
  }
}
)";
  EXPECT_EQ(ember({"compile", path("two.scf")}), cli::kDiagnostics);
  EXPECT_NE(err_.str().find("decouple:"), std::string::npos) << err_.str();
}

TEST_F(Cli, SyntaxErrorsNameTheStage) {
  std::ofstream(path("bad.scf")) << "void f(a: mref<4 x idx>) { for( }";
  EXPECT_EQ(ember({"compile", path("bad.scf")}), cli::kDiagnostics);
  EXPECT_EQ(err_.str().rfind("error: scf: 1:", 0), 0u) << err_.str();
}

TEST_F(Cli, RunWritesOutputsAndStats) {
  ASSERT_EQ(ember({"compile", kernel("sls"), "-o", path("p.dlc")}), cli::kOk);
  ASSERT_EQ(ember({"run", path("p.dlc"), path("tiny.json"), "-o", path("out.json"), "--stats", path("stats.json")}),
            cli::kOk)
      << err_.str();
  auto out = json::parse(slurp(path("out.json")));
  EXPECT_EQ(out.size(), 1u);
  std::vector<float> got;
  for (auto& x : out["out"]["data"]) got.push_back(x.get<float>());
  EXPECT_EQ(got, (std::vector<float>{4, 6, 5, 6}));
  auto stats = json::parse(slurp(path("stats.json")));
  EXPECT_EQ(stats["schema"], "ember.stats/1");
  EXPECT_EQ(stats["counters"]["ctrl_pushes"], 7);
  EXPECT_EQ(stats["counters"]["data_elements"], 18);
}

TEST_F(Cli, RunErrorsMapToExitCodes) {
  ASSERT_EQ(ember({"compile", kernel("sls"), "-o", path("p.dlc")}), cli::kOk);
  auto in = test::tiny_sls_inputs();
  in.buffers["idxs"].data[2] = 9;
  std::ofstream(path("bounds.json")) << memory_to_json(in).dump();
  EXPECT_EQ(ember({"run", path("p.dlc"), path("bounds.json")}), cli::kBounds);
  in.buffers.erase("vals");
  std::ofstream(path("missing.json")) << memory_to_json(in).dump();
  EXPECT_EQ(ember({"run", path("p.dlc"), path("missing.json")}), cli::kDiagnostics);
  EXPECT_EQ(ember({"run", path("p.dlc"), path("tiny.json"), "--data-capacity", "0"}), cli::kDiagnostics);
}

TEST_F(Cli, DumpedSlcRecompilesToTheSameProgram) {
  for (const char* k : {"sls", "mp", "spattn"}) {
    ASSERT_EQ(ember({"compile", kernel(k), "--dump-ir", "slc", "--dump-ir", "classify", "--dump-dir", dir_.string()}),
              cli::kOk);
    std::string once = out_.str();
    ASSERT_EQ(ember({"compile", kernel(k), "--opt", "3", "--vlen", "4"}), cli::kOk);
    once = out_.str();
    ASSERT_EQ(ember({"compile", path(std::string(k) + ".slc"), "--opt", "3", "--vlen", "4"}), cli::kOk) << err_.str();
    EXPECT_EQ(out_.str(), once) << k;
    EXPECT_NO_THROW(json::parse(slurp(path(std::string(k) + ".classify.json"))));
  }
}

TEST_F(Cli, HintsAreValidated) {
  EXPECT_EQ(ember({"compile", kernel("sls"), "--hint", "vals=L2,nontemporal"}), cli::kOk);
  EXPECT_NE(out_.str().find("hint(L2, nontemporal)"), std::string::npos);
  EXPECT_EQ(ember({"compile", kernel("sls"), "--hint", "vals=L4,temporal"}), cli::kDiagnostics);
  EXPECT_EQ(ember({"compile", kernel("sls"), "--hint", "nope=L2,temporal"}), cli::kDiagnostics);
  EXPECT_EQ(ember({"compile", kernel("sls"), "--opt", "5"}), cli::kDiagnostics);
}

TEST_F(Cli, VerifyPassesOnKernels) {
  for (auto k : workloads::kAllKernels) {
    EXPECT_EQ(ember({"verify", workloads::kernel_name(k), "--seeds", "2"}), cli::kOk) << err_.str();
    EXPECT_NE(out_.str().find("32 cells pass"), std::string::npos) << out_.str();
  }
  EXPECT_EQ(ember({"verify", kernel("sls"), "--opt", "1", "--vlen", "4", "--seeds", "1", "--report", path("r.json")}),
            cli::kOk);
  EXPECT_EQ(json::parse(slurp(path("r.json"))).size(), 1u);
}

TEST_F(Cli, VerifyDetectsACorruptedPass) {
  auto fn = workloads::build_kernel(workloads::Kernel::Sls);
  cli::VerifyOptions opts;
  opts.seeds = 3;
  auto inputs = [&](std::uint64_t seed) { return workloads::kernel_inputs(workloads::Kernel::Sls, opts.dims, seed); };
  // Truncates the innermost loop to one element.
  auto corrupt = [](slc::Function& f) {
    slc::Loop* l = f.body[0].loop.get();
    while (l->child()) l = l->child();
    l->upper = slc::Operand::lit(1);
  };
  auto cells = cli::verify_matrix(fn, inputs, opts, corrupt);
  ASSERT_FALSE(cells.empty());
  EXPECT_FALSE(cells.back().pass);
  EXPECT_NE(cells.back().mismatch.find("out["), std::string::npos) << cells.back().mismatch;
  EXPECT_TRUE(std::all_of(cells.begin(), cells.end() - 1, [](const auto& c) { return c.pass; }));
}

TEST_F(Cli, CdfOfSmallTraces) {
  std::ofstream(path("abab.txt")) << "1\n2\n1\n2\n";
  ASSERT_EQ(ember({"cdf", path("abab.txt")}), cli::kOk);
  auto j = json::parse(out_.str());
  EXPECT_EQ(j["cdf"], json::parse("[[1, 1.0]]"));
  EXPECT_EQ(j["cold"], 2);
  std::ofstream(path("aaba.txt")) << "# a comment\n1\n1\n2\n1\n";
  ASSERT_EQ(ember({"cdf", path("aaba.txt"), "--capacity", "1", "--capacity", "2"}), cli::kOk);
  j = json::parse(out_.str());
  EXPECT_EQ(j["hit_rates"][0]["rate"], 0.25);
  EXPECT_EQ(j["hit_rates"][1]["rate"], 0.5);
  std::ofstream(path("empty.txt")) << "";
  EXPECT_EQ(ember({"cdf", path("empty.txt")}), cli::kDiagnostics);
}

TEST_F(Cli, CdfGeneratorsOrderByLocality) {
  ASSERT_EQ(ember({"cdf", "--gen", "uniform", "--rows", "512", "--lookups", "5000", "--capacity", "32"}), cli::kOk);
  double uniform = json::parse(out_.str())["hit_rates"][0]["rate"];
  ASSERT_EQ(ember({"cdf", "--gen", "zipf1.2", "--rows", "512", "--lookups", "5000", "--capacity", "32"}), cli::kOk);
  double zipf = json::parse(out_.str())["hit_rates"][0]["rate"];
  EXPECT_GT(zipf, uniform);
  EXPECT_EQ(ember({"cdf", "--gen", "bogus"}), cli::kDiagnostics);
}

TEST_F(Cli, DeterministicAcrossRuns) {
  ASSERT_EQ(ember({"verify", "kg", "--seeds", "2", "--seed", "9"}), cli::kOk);
  std::string first = out_.str();
  ASSERT_EQ(ember({"verify", "kg", "--seeds", "2", "--seed", "9"}), cli::kOk);
  EXPECT_EQ(out_.str(), first);
}

}  // namespace
}  // namespace ember

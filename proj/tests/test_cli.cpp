#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "bbmlab/cli.hpp"

using namespace bbm;
namespace fs = std::filesystem;

namespace {

const char* kExperiment = R"(# small run
[experiment small]
p = 2
n_points = 1024
domain_length = 200
x_min = -50
dt = 0.05
t_end = 10
data = gaussian
epsilon = 0.01
data_width = 2
b = 0.5
a = 0.25
L = 10
sigma_tilde = 0.5
alpha_right = 0
alpha_left = 1
sigma_list = -1.5, 0.1875
t0_list = 5, 10
)";

const char* kIdentities = R"([identities]
n_points = 512
domain_length = 100
x_min = -50
p_list = 2, 3
trials = 3
seed = 5
data = random
epsilon = 0.1
L = 10
b = 0.5
sigma_tilde = 0.5
tolerance = 1e-9
fd_step = 0.001
fd_tolerance = 1e-5
)";

const char* kLemmas = R"([lemmas]
seed = 3
norm_trials = 100
norm_L = 10
norm_a = 1, 1, 1, 1
comparison_trials = 10
quartic_trials = 10
nonlinear_shapes = 2
nonlinear_p_list = 2, 3
nonlinear_eps_list = 0.1, 0.05, 0.025
nonlinear_L = 10
sigma_tilde = 0.5
weight_L_list = 10
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos == std::string::npos) throw std::logic_error("pattern not found: " + from);
  return s.replace(pos, from.size(), to);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string body(const fs::path& p) {
  const std::string s = slurp(p);
  EXPECT_EQ(s.rfind("# ", 0), 0u) << p;
  return s.substr(s.find('\n') + 1);
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / ("bbmlab_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string write(const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
  CliOptions opts(const std::string& config, const std::string& out = "out") {
    CliOptions o;
    o.config_path = config;
    o.out_dir = (dir / out).string();
    o.quiet = true;
    return o;
  }
  int run_binary(const std::string& args) {
    const std::string cmd = std::string(BBMLAB_CLI) + " " + args + " >" + (dir / "stdout").string() + " 2>" +
                            (dir / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string stderr_text() { return slurp(dir / "stderr"); }
};

}  // namespace

TEST_F(Cli, ParserReportsLineOfMalformedEntry) {
  const auto path = write("bad.ini", "[lemmas]\nseed = 1\n\nnot an entry\n");
  EXPECT_EQ(run_binary("lemma-tests --quiet --config " + path), kExitConfig);
  EXPECT_NE(stderr_text().find("bad.ini:4:"), std::string::npos) << stderr_text();
}

TEST_F(Cli, UnknownKeyIsRejectedWithItsLine) {
  const auto path = write("bad.ini", replace(kIdentities, "seed = 5\n", "seed = 5\ntolerence = 1\n"));
  EXPECT_EQ(run_binary("verify-identities --config " + path), kExitConfig);
  EXPECT_NE(stderr_text().find("bad.ini:8:"), std::string::npos) << stderr_text();
  EXPECT_NE(stderr_text().find("tolerence"), std::string::npos);
}

TEST_F(Cli, BadValueIsRejectedWithItsLine) {
  const auto path = write("bad.ini", replace(kExperiment, "dt = 0.05", "dt = 0.75"));
  EXPECT_EQ(run_binary("simulate --config " + path), kExitConfig);
  EXPECT_NE(stderr_text().find("bad.ini:7:"), std::string::npos) << stderr_text();
}

TEST_F(Cli, MissingFileAndMissingFlagAreConfigErrors) {
  EXPECT_EQ(run_binary("simulate --config " + (dir / "nope.ini").string()), kExitConfig);
  EXPECT_EQ(run_binary("simulate"), kExitConfig);
  EXPECT_EQ(run_binary(""), kExitConfig);
  EXPECT_EQ(run_binary("simulate --config x --seed abc"), kExitConfig);
}

TEST_F(Cli, ZeroSuiteSizeIsAConfigError) {
  EXPECT_EQ(cmd_lemma_tests(opts(write("l.ini", replace(kLemmas, "quartic_trials = 10", "quartic_trials = 0")))),
            kExitConfig);
  EXPECT_EQ(cmd_verify_identities(opts(write("i.ini", replace(kIdentities, "trials = 3", "trials = 0")))),
            kExitConfig);
}

TEST_F(Cli, EmptySweepIsAConfigError) {
  EXPECT_EQ(cmd_sweep(opts(write("s.ini", "# no experiments\n"))), kExitConfig);
  EXPECT_FALSE(fs::exists(dir / "out" / "sweep_summary.csv"));
}

TEST_F(Cli, SectionsForAnotherCommandAreRejected) {
  EXPECT_EQ(cmd_simulate(opts(write("l.ini", kLemmas))), kExitConfig);
  EXPECT_EQ(cmd_lemma_tests(opts(write("x.ini", std::string(kLemmas) + kIdentities))), kExitConfig);
  EXPECT_EQ(cmd_simulate(opts(write("two.ini", std::string(kExperiment) +
                                                   replace(kExperiment, "[experiment small]", "[experiment b]")))),
            kExitConfig);
}

TEST_F(Cli, IdentitiesPassAndWriteReport) {
  EXPECT_EQ(cmd_verify_identities(opts(write("i.ini", kIdentities))), kExitOk);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "identities.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["checks"].size(), 6u);
  EXPECT_EQ(j["states"].get<int>(), 6);
}

TEST_F(Cli, ImpossibleToleranceFails) {
  const auto path = write("i.ini", replace(kIdentities, "tolerance = 1e-9", "tolerance = 1e-30"));
  EXPECT_EQ(cmd_verify_identities(opts(path)), kExitCheckFailed);
  EXPECT_FALSE(nlohmann::json::parse(slurp(dir / "out" / "identities.json"))["passed"].get<bool>());
}

TEST_F(Cli, ZeroFieldSatisfiesEveryIdentity) {
  const auto path = write("i.ini", replace(replace(kIdentities, "data = random", "data = zero"), "tolerance = 1e-9",
                                           "tolerance = 0"));
  EXPECT_EQ(cmd_verify_identities(opts(path)), kExitOk);
}

TEST_F(Cli, LemmaSuitesPass) {
  EXPECT_EQ(cmd_lemma_tests(opts(write("l.ini", kLemmas))), kExitOk);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "lemmas.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  for (const auto& r : j["reports"]) EXPECT_TRUE(r["passed"].get<bool>()) << r.dump();
}

TEST_F(Cli, SimulateWritesCsvJsonAndManifest) {
  EXPECT_EQ(cmd_simulate(opts(write("e.ini", kExperiment))), kExitOk);
  const fs::path out = dir / "out";
  const std::string csv = body(out / "small.csv");
  EXPECT_EQ(csv.rfind("t,mass,energy,h1_left,h1_right,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 21);  // header + t = 0, 0.5, ..., 10
  EXPECT_EQ(csv.find(';'), std::string::npos);
  const auto j = nlohmann::ordered_json::parse(slurp(out / "small.json"));
  EXPECT_EQ(j.begin().key(), "name");
  EXPECT_EQ(j["status"], "ok");
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["config"][0]["section"], "experiment small");
}

TEST_F(Cli, BlowUpExitsWithThree) {
  auto text = replace(replace(replace(kExperiment, "p = 2", "p = 5"), "epsilon = 0.01", "epsilon = 10"), "dt = 0.05",
                      "dt = 0.5");
  text = replace(text, "t0_list = 5, 10\n", "");
  EXPECT_EQ(cmd_simulate(opts(write("b.ini", text))), kExitBlowUp);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "out" / "small.json"))["status"], "blow_up");
}

TEST_F(Cli, TaintedBoundaryExitsWithTwo) {
  auto text = replace(replace(kExperiment, "data_width = 2", "data_width = 2\ndata_center = 140"), "t_end = 10",
                      "t_end = 1");
  text = replace(text, "t0_list = 5, 10\n", "");
  EXPECT_EQ(cmd_simulate(opts(write("t.ini", text))), kExitTainted);
}

TEST_F(Cli, RerunsAreByteIdenticalBelowTheCommentLine) {
  const auto path = write("e.ini", kExperiment);
  ASSERT_EQ(cmd_simulate(opts(path, "a")), kExitOk);
  ASSERT_EQ(cmd_simulate(opts(path, "b")), kExitOk);
  EXPECT_EQ(body(dir / "a" / "small.csv"), body(dir / "b" / "small.csv"));
  // Rerun from the recorded manifest.
  ASSERT_EQ(cmd_simulate(opts((dir / "a" / "manifest.json").string(), "c")), kExitOk);
  EXPECT_EQ(body(dir / "a" / "small.csv"), body(dir / "c" / "small.csv"));
}

TEST_F(Cli, SweepSummaryAndManifestRerun) {
  const std::string text =
      std::string(kExperiment) + "\n" +
      replace(replace(kExperiment, "[experiment small]", "[experiment bigger]"), "epsilon = 0.01", "epsilon = 0.02");
  ASSERT_EQ(cmd_sweep(opts(write("s.ini", text), "a")), kExitOk);
  const std::string summary = body(dir / "a" / "sweep_summary.csv");
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 1 + 2 * 2);
  EXPECT_NE(summary.find("\nsmall,2,0.01,"), std::string::npos);
  EXPECT_NE(summary.find("\nbigger,2,0.02,"), std::string::npos);
  ASSERT_EQ(cmd_sweep(opts((dir / "a" / "manifest.json").string(), "b")), kExitOk);
  EXPECT_EQ(summary, body(dir / "b" / "sweep_summary.csv"));
  EXPECT_EQ(body(dir / "a" / "bigger.csv"), body(dir / "b" / "bigger.csv"));
}

TEST_F(Cli, SweepReportsTheMostSevereStatus) {
  auto blow = replace(replace(replace(kExperiment, "p = 2", "p = 5"), "epsilon = 0.01", "epsilon = 10"), "dt = 0.05",
                      "dt = 0.5");
  blow = replace(replace(blow, "[experiment small]", "[experiment blow]"), "t0_list = 5, 10\n", "");
  EXPECT_EQ(cmd_sweep(opts(write("s.ini", std::string(kExperiment) + blow))), kExitBlowUp);
  EXPECT_TRUE(fs::exists(dir / "out" / "small.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "blow.csv"));
}

TEST_F(Cli, SeedOverrideIsRecordedAndReproducible) {
  auto o = opts(write("l.ini", kLemmas), "a");
  o.seed = 1234;
  ASSERT_EQ(cmd_lemma_tests(o), kExitOk);
  const auto a = nlohmann::json::parse(slurp(dir / "a" / "lemmas.json"));
  EXPECT_EQ(a["manifest"]["seed"].get<int>(), 1234);
  EXPECT_EQ(a["manifest"]["config"][0]["values"]["seed"], "1234");
  ASSERT_EQ(cmd_lemma_tests(opts((dir / "a" / "manifest.json").string(), "b")), kExitOk);
  const auto b = nlohmann::json::parse(slurp(dir / "b" / "lemmas.json"));
  ASSERT_EQ(a["reports"].size(), b["reports"].size());
  for (std::size_t i = 0; i < a["reports"].size(); ++i) {
    EXPECT_EQ(a["reports"][i]["worst_margin"], b["reports"][i]["worst_margin"]) << i;
    EXPECT_EQ(a["reports"][i]["witness"], b["reports"][i]["witness"]) << i;
  }
  // A different seed draws different trials.
  ASSERT_EQ(cmd_lemma_tests(opts(write("l2.ini", kLemmas), "c")), kExitOk);
  const auto c = nlohmann::json::parse(slurp(dir / "c" / "lemmas.json"));
  EXPECT_NE(a["reports"][1]["metrics"]["ratio_low"], c["reports"][1]["metrics"]["ratio_low"]);
}

TEST_F(Cli, BinaryRunsEachSubcommand) {
  EXPECT_EQ(run_binary("verify-identities --quiet --config " + write("i.ini", kIdentities) + " --out " +
                       (dir / "o").string()),
            kExitOk);
  EXPECT_EQ(run_binary("simulate --config " + write("e.ini", kExperiment) + " --out " + (dir / "o").string()),
            kExitOk);
  EXPECT_NE(slurp(dir / "stdout").find("small: ok"), std::string::npos);
  EXPECT_EQ(run_binary("--version"), kExitOk);
}

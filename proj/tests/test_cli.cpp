#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hcbloch/config.hpp"
#include "hcbloch/emit.hpp"

using namespace hcbloch;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hcbloch_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(HCBLOCH_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return ConfigError("", -1, "");
}

const char* kBloch =
    "command: bloch\n"
    "n: 16\n"
    "microstructure:\n"
    "  kind: inclusion\n"
    "  beta: 5\n"
    "eta: [0.3, 0.2]\n";

}  // namespace

TEST(ParseConfig, FillsDefaults) {
  const auto c = parse_config(kBloch);
  EXPECT_EQ(c.kind(), Command::bloch);
  EXPECT_EQ(c.dim, 2);
  EXPECT_EQ(c.n, (std::vector<int>{16, 16}));
  EXPECT_EQ(c.microstructure.kind, "inclusion");
  EXPECT_EQ(c.microstructure.rho, 0.5);
  EXPECT_EQ(c.eta_list, (std::vector<std::vector<double>>{{0.3, 0.2}}));
  EXPECT_EQ(c.seed, 24389u);
  EXPECT_EQ(c.stem(), "bloch");

  const auto e = parse_config("command: experiment:thm31\n");
  EXPECT_EQ(e.experiment(), "thm31");
  EXPECT_EQ(e.dim, 3);
  EXPECT_EQ(e.eps_list.size(), 4u);
  EXPECT_EQ(e.gamma, 2.0);
  EXPECT_EQ(e.beta_exponent, 5.0);
  EXPECT_EQ(e.stem(), "experiment_thm31");

  const auto f = parse_config("command: homogenize\nmicrostructure: {kind: fiber, eps: 0.25}\n");
  EXPECT_DOUBLE_EQ(f.microstructure.r_eps, radius_for_gamma(0.25, 2.0));
  EXPECT_DOUBLE_EQ(f.microstructure.beta, BetaRule{5.0}(0.25, f.microstructure.r_eps));
}

TEST(ParseConfig, MinimalBloch) {
  const auto c = parse_config("command: bloch\nmicrostructure: {kind: constant, a0: 1}\neta: [0.3, 0.2]\nn: 64\n");
  EXPECT_EQ(c.n, (std::vector<int>{64, 64}));
  EXPECT_EQ(c.k, 1);
  EXPECT_EQ(c.microstructure.a0, 1.0);
  EXPECT_EQ(c.q_normalization, "cell-average");
  EXPECT_TRUE(c.mesh_check);
}

#ifdef HCBLOCH_CONFIG_DIR
TEST(ParseConfig, ShippedExamples) {
  int seen = 0;
  for (const auto& e : fs::directory_iterator(HCBLOCH_CONFIG_DIR)) {
    if (e.path().extension() != ".yaml") continue;
    ++seen;
    const auto c = parse_config(slurp(e.path()));
    EXPECT_TRUE(parse_config(serialize_config(c)) == c) << e.path();
  }
  EXPECT_GE(seen, 10);
}
#endif

TEST(ParseConfig, ErrorsNameKeyPathAndLine) {
  auto e = config_error("command: bloch\neta: [0.3, 0.2]\nmicrostructure:\n  kind: inclusion\n  beta: x\n");
  EXPECT_EQ(e.key_path(), "microstructure.beta");
  EXPECT_EQ(e.line(), 4);
  EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);

  e = config_error("command: bloch\neta: [0.3, 0.2]\nbogus: 1\n");
  EXPECT_EQ(e.key_path(), "bogus");
  EXPECT_EQ(e.line(), 2);

  e = config_error("command: bloch\neta: [0.3, 0.2]\ngamma: -1\n");
  EXPECT_EQ(e.key_path(), "gamma");
  EXPECT_NE(std::string(e.what()).find("capacity density gamma"), std::string::npos);

  e = config_error("command: bloch\neta: [0.3, 0.2, 0.1]\n");
  EXPECT_EQ(e.key_path(), "eta");
  e = config_error("command: bloch\n");
  EXPECT_EQ(e.key_path(), "eta");
  e = config_error("command: experiment:thm31\neta: [0.1, 0.2, 0.0]\n");
  EXPECT_NE(std::string(e.what()).find("eta3"), std::string::npos);
  e = config_error("command: experiment:thm22\neps_list: [0.3]\n");
  EXPECT_EQ(e.key_path(), "eps_list[0]");
  e = config_error("command: experiment:nope\n");
  EXPECT_EQ(e.key_path(), "command");
  e = config_error("command: bloch\neta: [0.3, 0.2]\nn: 2.5\n");
  EXPECT_EQ(e.key_path(), "n");
  e = config_error("command: bloch\neta: [0.3, 0.2]\nmicrostructure: {kind: constant, beta: 3}\n");
  EXPECT_EQ(e.key_path(), "microstructure.beta");
  e = config_error("command: bloch\neta: [0.3, 0.2]\nconventions: {q_normalization: unit-volume}\n");
  EXPECT_EQ(e.key_path(), "conventions.q_normalization");
  e = config_error("command: [bloch\n");
  EXPECT_EQ(e.key_path(), "<document>");
  e = config_error("");
  EXPECT_EQ(e.key_path(), "<root>");
}

TEST(SerializeConfig, RoundTrip) {
  for (const std::string text :
       {std::string(kBloch), std::string("command: experiment:thm31\neps_list: [0.3333333333333333, 0.25]\nmesh_check: false\nseed: 7\n"),
        std::string("command: homogenize\ndim: 3\nn: [8, 8, 16]\nmicrostructure: {kind: fiber, eps: 0.25, R: 1.1}\n"),
        std::string("command: capacity\nmicrostructure: {kind: file, path: \"a \\\"b\\\".bin\"}\n"),
        std::string("command: bloch\nmicrostructure: {kind: constant, a0: 2}\neta_list: [[0.1, 0], [0, 0.2]]\nk: 3\n")}) {
    const auto c = parse_config(text);
    const auto s = serialize_config(c);
    const auto c2 = parse_config(s);
    EXPECT_TRUE(c == c2) << s;
    EXPECT_EQ(serialize_config(c2), s);
  }
}

TEST(RunConfig, CsvShapeAndByteStableReruns) {
  auto c = parse_config(kBloch);
  const auto t1 = run_config(c);
  const auto t2 = run_config(c);
  const auto csv = to_csv(t1);
  EXPECT_EQ(csv, to_csv(t2));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "eta_1,eta_2,lambda1,residual,iterations,converged");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_TRUE(t1.passed());
}

TEST(RunConfig, EveryPlainCommand) {
  for (const char* text :
       {"command: homogenize\nn: 16\nmicrostructure: {kind: inclusion, beta: 4}\n",
        "command: dispersion\nn: 16\nmicrostructure: {kind: inclusion, beta: 4}\neta_list: [[1, 0], [0.6, 0.8]]\n",
        "command: pw\nn: 16\nmicrostructure: {kind: inclusion, beta: 4}\neta: [1, 0]\n",
        "command: capacity\nn: 256\neps_list: [0.3333333333333333, 0.25]\n"}) {
    const auto c = parse_config(text);
    const auto t = run_config(c);
    EXPECT_FALSE(t.rows.empty()) << text;
    EXPECT_NO_THROW(to_csv(t)) << text;
    if (c.kind() != Command::capacity) EXPECT_TRUE(t.passed()) << text;
  }
}

TEST(RunAndEmit, WritesCsvAndSidecar) {
  const auto dir = scratch("emit");
  auto c = parse_config(kBloch);
  c.output = dir.string();
  std::ostringstream diag;
  EXPECT_EQ(run_and_emit(c, diag), kExitOk) << diag.str();
  const auto csv = slurp(dir / "bloch.csv");
  EXPECT_EQ(csv, to_csv(run_config(c)));
  const auto j = nlohmann::json::parse(slurp(dir / "bloch.json"));
  EXPECT_EQ(j["seed"], 24389u);
  EXPECT_EQ(j["conventions"]["q_normalization"], "cell-average");
  EXPECT_EQ(j["config"], serialize_config(c));
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["row_runtime_seconds"].size(), 1u);

  c.microstructure = MicrostructureConfig{};
  c.microstructure.kind = "file";
  c.microstructure.path = (dir / "missing.bin").string();
  EXPECT_EQ(run_and_emit(c, diag), kExitError);
  EXPECT_NE(diag.str().find("error: "), std::string::npos);
}

TEST(Cli, ExitCodesAndOutputs) {
  const auto dir = scratch("cli");
  write(dir / "ok.yaml", kBloch);
  EXPECT_EQ(run_cli("--config " + (dir / "ok.yaml").string() + " --out " + (dir / "a").string(), dir / "log1"), 0) << slurp(dir / "log1");
  EXPECT_EQ(run_cli("--config " + (dir / "ok.yaml").string() + " --out " + (dir / "b").string(), dir / "log2"), 0);
  EXPECT_EQ(slurp(dir / "a" / "bloch.csv"), slurp(dir / "b" / "bloch.csv"));
  EXPECT_FALSE(slurp(dir / "a" / "bloch.csv").empty());

  write(dir / "bad.yaml", "command: bloch\neta: [0.3, 0.2]\ngamma: -1\n");
  EXPECT_EQ(run_cli("--config " + (dir / "bad.yaml").string(), dir / "log3"), 1);
  EXPECT_NE(slurp(dir / "log3").find("gamma (line 3)"), std::string::npos) << slurp(dir / "log3");
  EXPECT_EQ(run_cli("--config " + (dir / "nonexistent.yaml").string(), dir / "log4"), 1);
  EXPECT_EQ(run_cli("--bogus", dir / "log5"), 1);
  EXPECT_EQ(run_cli("--help", dir / "log6"), 0);

  // a gating check that cannot hold on this coarse grid -> exit 2
  write(dir / "cap.yaml", "command: capacity\nn: 64\neps_list: [0.3333333333333333, 0.25]\ncapacity_R: 3\n");
  EXPECT_EQ(run_cli("--config " + (dir / "cap.yaml").string() + " --out " + (dir / "c").string(), dir / "log7"), 2) << slurp(dir / "log7");
  EXPECT_NE(slurp(dir / "log7").find("assertion failed: "), std::string::npos);
}

TEST(Cli, Thm31TableWithPassFailColumns) {
  const auto dir = scratch("thm31");
  write(dir / "t.yaml", "command: experiment:thm31\neps_list: [0.3333333333333333, 0.25]\nmesh_check: false\n");
  ASSERT_EQ(run_cli("--config " + (dir / "t.yaml").string() + " --out " + dir.string(), dir / "log"), 0) << slurp(dir / "log");
  const auto csv = slurp(dir / "experiment_thm31.csv");
  const auto header = csv.substr(0, csv.find('\n'));
  for (const char* col : {"eps", "lambda1", "gap", "target_gamma", "control_excess", "approaching_gamma", "control_ok", "in_band"})
    EXPECT_NE(header.find(col), std::string::npos) << col;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const auto j = nlohmann::json::parse(slurp(dir / "experiment_thm31.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["checks"].size(), 4u);
  EXPECT_NE(j["family"].get<std::string>().find("eps^-5"), std::string::npos);
}

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "conedef/cli.hpp"

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome call(std::vector<std::string> args) {
  args.insert(args.begin(), "conedef");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome r;
  r.code = conedef::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::map<std::string, std::string> kv(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

std::string data(const std::string& name) { return std::string(CONEDEF_DATA_DIR) + "/" + name; }

// runs the installed binary; returns the exit status and stdout
std::pair<int, std::string> shell(const std::string& args) {
  std::string cmd = std::string(CONEDEF_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string s;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) s.append(buf, n);
  int st = pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, s};
}

class EnvGuard {
public:
  EnvGuard(const char* name, const char* value) : name_(name) { setenv(name, value, 1); }
  ~EnvGuard() { unsetenv(name_); }

private:
  const char* name_;
};

}  // namespace

TEST(Cli, T1CubicDimensions) {
  Outcome r = call({"t1", "--example", "cubic", "--format", "kv"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_EQ(m["dim.-3"], "1");
  EXPECT_EQ(m["dim.-2"], "4");
  EXPECT_EQ(m["dim.-1"], "6");
  EXPECT_EQ(m["dim.0"], "4");
  EXPECT_EQ(m["dim.1"], "1");
  EXPECT_EQ(m["dim.2"], "0");
}

TEST(Cli, RateFromDataFile) {
  Outcome r = call({"rate", data("cubic_aij.cone"), "--format", "kv"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_EQ(m["weight"], "-1");
  EXPECT_EQ(m["lambda"], "3");
  EXPECT_EQ(m["status"], "ok");
}

TEST(Cli, RateRefusedWithoutWeight) {
  Outcome r = call({"rate", data("odp_linear.cone")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("refused"), std::string::npos);
  EXPECT_EQ(call({"rate", "--example", "odp3-z3"}).code, 2);
}

TEST(Cli, WeightOfCompleteIntersection) {
  Outcome r = call({"weight", data("ci_quartic.cone"), "--format", "kv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(kv(r.out)["weight"], "-2");
}

TEST(Cli, CechDiagonalReport) {
  Outcome r = call({"cech", "--example", "p1p1-diagonal", "--format", "kv"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_EQ(m["m_xd"], "2");
  EXPECT_EQ(m["chain.0.h1.locus"], "a = -1/2");
  EXPECT_NE(r.out.find("locus=a = 0"), std::string::npos);
  EXPECT_EQ(m["weight"], "-2");
}

TEST(Cli, CechDataFiles) {
  Outcome d = call({"cech", data("p1p1_diagonal.tr"), "--format", "kv"});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_EQ(kv(d.out)["m_xd"], "2");
  Outcome c = call({"cech", data("p2_conic.tr"), "--format", "kv"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(kv(c.out)["m_xd"], "1");
  Outcome g = call({"cech", data("gaussian_twist.tr"), "--format", "kv"});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_EQ(kv(g.out)["m_xd"], "2");
}

TEST(Cli, MetricDefaults) {
  Outcome r = call({"metric", "--format", "kv"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_EQ(m["renormalized"], "false");
  EXPECT_LT(std::stod(m["christoffel.fd_defect"]), 1e-6);
  EXPECT_NEAR(std::stod(m["slope.0.measured"]), 1.0, 0.01);
}

TEST(Cli, MetricStrictRejectsUnnormalizedChart) {
  Outcome loose = call({"metric", "--potential", "2+|z1|^2", "--format", "kv"});
  ASSERT_EQ(loose.code, 0) << loose.err;
  EXPECT_EQ(kv(loose.out)["renormalized"], "true");
  EXPECT_EQ(call({"metric", "--potential", "2+|z1|^2", "--strict"}).code, 1);
}

TEST(Cli, DbarZeroModel) {
  Outcome r = call({"dbar", "--model", "const:0", "--format", "kv"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = kv(r.out);
  EXPECT_EQ(m["row.0.residual"], "0");
  EXPECT_EQ(m["status"], "ok");
}

TEST(Cli, DbarRefusesLargeCoefficient) {
  Outcome r = call({"dbar", "--model", "const:0.3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("refused"), std::string::npos);
}

TEST(Cli, InputErrorsExitOne) {
  Outcome bad = call({"t1", data("bad_exponent.cone")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("line 2, column 4"), std::string::npos) << bad.err;
  EXPECT_EQ(call({"t1", data("bad_degree.cone")}).code, 1);
  EXPECT_EQ(call({"t1", data("missing.cone")}).code, 1);
  EXPECT_EQ(call({"t1", "--example", "nope"}).code, 1);
  EXPECT_EQ(call({"bogus"}).code, 1);
  EXPECT_EQ(call({}).code, 1);
  EXPECT_EQ(call({"t1", "--example", "cubic", "--format", "xml"}).code, 1);
}

TEST(Cli, EnvOverrides) {
  {
    EnvGuard e("CONEDEF_FD_STEP", "abc");
    Outcome r = call({"metric"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("CONEDEF_FD_STEP"), std::string::npos);
  }
  {
    EnvGuard e("CONEDEF_DBAR_MAXITER", "-3");
    EXPECT_EQ(call({"dbar", "--model", "const:0"}).code, 1);
  }
  {
    EnvGuard e("CONEDEF_DBAR_TOL", "1e-6");
    EXPECT_EQ(call({"dbar", "--model", "const:0"}).code, 0);
  }
}

TEST(Cli, HelpListsEnvironment) {
  Outcome r = call({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* v : {"CONEDEF_FD_STEP", "CONEDEF_NORMAL_TOL", "CONEDEF_DBAR_TOL", "CONEDEF_DBAR_MAXITER"})
    EXPECT_NE(r.out.find(v), std::string::npos) << v;
  Outcome v = call({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(conedef::cli::version), std::string::npos);
}

TEST(Cli, GlobalFlagsAfterSubcommand) {
  Outcome a = call({"--format", "kv", "rate", "--example", "cubic-ak"});
  Outcome b = call({"rate", "--example", "cubic-ak", "--format", "kv"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(kv(a.out)["lambda"], "6");
}

TEST(Cli, ReportsAreDeterministic) {
  for (std::vector<std::string> args : {std::vector<std::string>{"t1", "--example", "ci"},
                                        {"rate", "--example", "cubic-eps", "--seed", "5"},
                                        {"cech", "--example", "p2-conic"},
                                        {"metric", "--delta", "1/2", "--mu", "2"},
                                        {"dbar", "--model", "power:0.05,0.8", "--R", "0.4,0.2"}}) {
    Outcome a = call(args), b = call(args);
    EXPECT_EQ(a.code, 0) << args[0] << ": " << a.err;
    EXPECT_EQ(a.out, b.out) << args[0];
  }
}

TEST(Cli, OutputFile) {
  auto path = std::filesystem::temp_directory_path() / "conedef_cli_test_report.txt";
  Outcome r = call({"rate", "--example", "odp4", "--format", "kv", "-o", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(kv(ss.str())["lambda"], "8/3");
  std::filesystem::remove(path);
}

TEST(Cli, BinaryMatchesInProcess) {
  auto [code, text] = shell("cech --example p1p1-diagonal --format kv");
  EXPECT_EQ(code, 0);
  EXPECT_EQ(text, call({"cech", "--example", "p1p1-diagonal", "--format", "kv"}).out);
  EXPECT_EQ(shell("rate --example odp3-z3").first, 2);
  EXPECT_EQ(shell(std::string("t1 ") + data("bad_exponent.cone")).first, 1);
}

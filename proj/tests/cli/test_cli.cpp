#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using pfenergy::cli::kExitError;
using pfenergy::cli::kExitNoSolution;
using pfenergy::cli::kExitOk;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
  json doc() const { return json::parse(out); }
};

Invocation run(std::vector<std::string> args) {
  args.insert(args.begin(), "pfenergy");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = pfenergy::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pfenergy_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Solve, TwoBusJson) {
  const Invocation r = run({"solve", "two_bus"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = r.doc();
  EXPECT_EQ(j["meta"]["command"], "solve");
  EXPECT_EQ(j["status"], "SolutionFound");
  EXPECT_TRUE(j["certificate"]["in_C"].get<bool>());
  EXPECT_NEAR(j["state"]["V"][1].get<double>(), 0.8798668869, 1e-8);
}

TEST(Solve, NewtonAgrees) {
  const json c = run({"solve", "three_bus"}).doc();
  const json n = run({"solve", "three_bus", "--method", "newton"}).doc();
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(c["state"]["V"][i].get<double>(), n["state"]["V"][i].get<double>(), 1e-7);
    EXPECT_NEAR(c["state"]["theta"][i].get<double>(), n["state"]["theta"][i].get<double>(), 1e-7);
  }
}

TEST(Solve, NoSolutionExitCode) {
  const Invocation r = run({"--scale", "2.5", "solve", "two_bus"});
  EXPECT_EQ(r.code, kExitNoSolution);
  EXPECT_EQ(r.doc()["status"], "NoSolutionInC");
}

TEST(Solve, LossyTwoBus) {
  const Invocation r = run({"solve", "two_bus", "--lossy-kappa", "0.2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
}

TEST(Solve, Deterministic) {
  const Invocation a = run({"--seed", "5", "solve", "three_bus"});
  const Invocation b = run({"--seed", "5", "solve", "three_bus"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.doc()["meta"]["seed"], 5);
  EXPECT_EQ(a.doc()["meta"]["case_hash"].get<std::string>().rfind("fnv1a64:", 0), 0u);
}

TEST(Errors, MissingCaseAndGarbage) {
  EXPECT_EQ(run({"solve", "no_such_case"}).code, kExitError);
  const fs::path bad = scratch("garbage.json");
  write(bad, "{not json");
  const Invocation r = run({"solve", bad.string()});
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("ParseError"), std::string::npos);
  EXPECT_EQ(run({}).code, kExitError);
  EXPECT_EQ(run({"--format", "xml", "solve", "two_bus"}).code, kExitError);
}

TEST(Check, RoundTripsASolveResult) {
  const Invocation s = run({"solve", "three_bus"});
  const fs::path state = scratch("three_bus_state.json");
  write(state, s.out);
  const Invocation c = run({"check", "three_bus", state.string(), "--samples", "8"});
  ASSERT_EQ(c.code, kExitOk) << c.err;
  const json j = c.doc();
  EXPECT_TRUE(j["in_C"].get<bool>());
  EXPECT_TRUE(j.contains("in_D_sampled"));
}

TEST(Check, LargePhaseIsOutside) {
  const fs::path state = scratch("wide.json");
  write(state, R"({"V":[1,1],"theta":[0,1.7453292519943295]})");
  const Invocation c = run({"check", "two_bus", state.string()});
  ASSERT_EQ(c.code, kExitOk) << c.err;
  EXPECT_FALSE(c.doc()["in_C"].get<bool>());
  EXPECT_EQ(c.doc()["lmi_min_eig"], "-inf");
}

TEST(Check, DimensionMismatch) {
  const fs::path state = scratch("short.json");
  write(state, R"({"V":[1],"theta":[0]})");
  const Invocation c = run({"check", "three_bus", state.string()});
  EXPECT_EQ(c.code, kExitError);
  EXPECT_NE(c.err.find("entries"), std::string::npos);
}

TEST(Sweep, CsvHeaderAndTransition) {
  const Invocation r = run({"--format", "csv", "sweep", "two_bus", "--kappa-min", "1.9", "--kappa-max", "2.2", "--kappa-step", "0.1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream in(r.out);
  std::string meta, header, line;
  std::getline(in, meta);
  std::getline(in, header);
  EXPECT_EQ(meta.rfind("# {", 0), 0u);
  EXPECT_EQ(header, "kappa,delta,status,grad_norm,lmi_min_eig,boundary_active,iterations");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NE(rows[1].find("SolutionFound"), std::string::npos);
  EXPECT_NE(rows[2].find("NoSolutionInC"), std::string::npos);
  const json m = json::parse(meta.substr(2));
  EXPECT_NEAR(m["first_failure_kappa"].get<double>(), 2.1, 1e-12);
}

TEST(Region, SmallGrid) {
  const Invocation r = run({"region", "three_bus", "--grid-step", "30"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream in(r.out);
  std::string meta, header;
  std::getline(in, meta);
  std::getline(in, header);
  EXPECT_EQ(header, "theta2,theta3,solvable,in_C,reduced_min_eig");
  const json m = json::parse(meta.substr(2));
  EXPECT_EQ(m["angle_unit"], "deg");
  EXPECT_GT(m["summary"]["solvable"].get<int>(), 0);
  EXPECT_LE(m["summary"]["in_C"].get<int>(), m["summary"]["solvable"].get<int>());
}

TEST(Bounds, TwoBus) {
  const Invocation r = run({"bounds", "two_bus", "--b-rho", "1.2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = r.doc();
  EXPECT_NEAR(j["b_theta_deg"].get<double>(), 53.13, 0.1);
  EXPECT_TRUE(j["certified"].get<bool>());
  EXPECT_EQ(run({"bounds", "two_bus", "--b-rho", "0.5"}).code, kExitError);
}

TEST(Bounds, EmptyDomainReportsNull) {
  const Invocation r = run({"bounds", "two_bus", "--b-rho", "3"});
  EXPECT_EQ(r.code, kExitNoSolution);
  EXPECT_TRUE(r.doc()["b_theta_deg"].is_null());
}

TEST(Reactive, ThreeBus) {
  const Invocation r = run({"reactive", "three_bus", "--weights", "1,2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json j = r.doc();
  EXPECT_NEAR(j["V"][0].get<double>(), 0.9570948097, 1e-8);
  EXPECT_EQ(run({"reactive", "three_bus", "--weights", "1,2,3"}).code, kExitError);
  EXPECT_EQ(run({"reactive", "three_bus", "--weights", "1"}).code, kExitOk);
}

TEST(Output, OutFileReceivesResult) {
  const fs::path out = scratch("solve.json");
  fs::remove(out);
  const Invocation r = run({"--out", out.string(), "solve", "two_bus"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(out);
  EXPECT_EQ(json::parse(in)["status"], "SolutionFound");
}

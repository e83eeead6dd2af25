#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kCli = REVDYN_CLI_PATH;
const std::string kConfigs = REVDYN_CONFIG_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("revdyn_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const auto out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  const std::string cmd = "'" + kCli + "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string config(const std::string& name) { return "--config '" + kConfigs + "/" + name + "'"; }

std::string temp_config(const std::string& name, const std::string& body) {
  const auto p = scratch() / name;
  std::ofstream(p) << body;
  return "--config '" + p.string() + "'";
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, CertifyInnovativeConstruction) {
  const auto r = run("certify " + config("innovative_p02.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j.at("certified").get<bool>());
  EXPECT_EQ(j.at("certificate").at("branch"), "(1',2')");
  EXPECT_EQ(j.at("stability").at("classification"), "repelling");
  EXPECT_EQ(j.at("period3").at("period"), 3);
}

TEST(Cli, CertifyBelowThresholdExitsNoCertificate) {
  const auto r = run("certify " + config("perturbed_maximal_p04.json") + " --delta 0.5");
  EXPECT_EQ(r.code, 3);
  EXPECT_FALSE(json::parse(r.out).at("certified").get<bool>());
}

TEST(Cli, CertifyTruncated) {
  const auto r = run("certify " + config("truncated_p025.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("stability").at("classification"), "repelling");
}

TEST(Cli, CertifyCsvSummary) {
  const auto r = run("--format csv certify " + config("pl_chaotic.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("field,value\n", 0), 0u);
  EXPECT_NE(r.out.find("certified,1\n"), std::string::npos);
  EXPECT_EQ(run("certify " + config("pl_settling.json")).code, 3);
}

TEST(Cli, InvalidConfigurations) {
  EXPECT_EQ(run("certify " + temp_config("a.json", R"({"game":{"a":2,"b":1,"c":1,"d":0},"protocol":{"kind":"ppi"}})")).code, 4);
  EXPECT_EQ(run("certify " + temp_config("b.json", "{not json")).code, 4);
  EXPECT_EQ(run("simulate " + temp_config("c.json", R"({"game":{"p":0.4},"protocol":{"kind":"nope"}})")).code, 4);
  EXPECT_EQ(run("thresholds --p 0.5").code, 4);
  const auto r = run("certify " + temp_config("d.json", R"({"game":{"p":0.4}})"));
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("invalid configuration"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("simulate --format xml " + config("innovative_p02.json")).code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, RangeFailure) {
  const auto cfg = temp_config("e.json", R"({"game":{"p":0.4},"protocol":{"kind":"perturbed_ppi","eta":9,"xi":1}})");
  EXPECT_EQ(run("simulate " + cfg).code, 5);
  EXPECT_EQ(run("certify " + cfg).code, 5);
  EXPECT_EQ(run("periods " + cfg).code, 5);
  // a loose tolerance lets the same map through
  EXPECT_EQ(run("--tolerance 1 simulate " + cfg + " --steps 1").code, 0);
}

TEST(Cli, SimulateCsvAndJson) {
  const auto r = run("simulate " + config("innovative_p02.json") + " --x0 0.3 --steps 3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "iteration,x\n0,0.3\n1,0.09999999999999998\n2,0.6000000000000001\n3,0.2333333333333334\n");
  const auto j = json::parse(run("simulate --format json " + config("innovative_p02.json") + " --steps 5").out);
  EXPECT_EQ(j.at("samples").size(), 6u);
}

TEST(Cli, OutWritesFile) {
  const auto path = scratch() / "orbit.csv";
  const auto r = run("simulate " + config("innovative_p02.json") + " --steps 2 --out '" + path.string() + "'");
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(count_lines(slurp(path)), 4u);
}

TEST(Cli, BifurcateIsByteIdentical) {
  const std::string args =
      "bifurcate " + config("perturbed_maximal_p04.json") + " --steps 11 --transient 300 --keep 7";
  const auto a = run(args + " --threads 1"), b = run(args + " --threads 4");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(count_lines(a.out), 2 + 11 * 2 * 7u);
  EXPECT_NE(a.out.find("seed_order=1;0"), std::string::npos);
  const auto j = json::parse(run("--format json " + args).out);
  EXPECT_EQ(j.at("rows").size(), 11u * 2 * 7);
}

TEST(Cli, BifurcateLogsSkippedSteps) {
  const auto cfg = temp_config("f.json", R"({"game":{"p":0.4},"protocol":{"kind":"perturbed_ppi","eta":6.6,"xi":10}})");
  const auto r = run("bifurcate " + cfg + " --delta-min 0.5 --delta-max 1 --steps 6 --transient 10 --keep 2 --seed 0.3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("skipped delta="), std::string::npos);
  EXPECT_LT(count_lines(r.out), 2 + 6 * 2u);
}

TEST(Cli, CobwebExports) {
  const auto r = run("cobweb " + config("pl_chaotic.json") + " --graph-points 101");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 1 + 101 + 101u);
  const auto j = json::parse(run("--format json cobweb " + config("pl_settling.json")).out);
  EXPECT_NEAR(j.at("orbit").back().get<double>(), 0.65 / 1.5, 1e-12);
}

TEST(Cli, ThresholdsTable) {
  const auto r = run("thresholds " + config("thresholds.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 11u);
  const auto cli = run("thresholds --p 0.4 0.6 0.25");
  std::istringstream in(cli.out);
  std::string header, r4, r6, r25;
  std::getline(in, header);
  std::getline(in, r4);
  std::getline(in, r6);
  std::getline(in, r25);
  EXPECT_NE(r4.find(",0.9488"), std::string::npos);
  EXPECT_EQ(r4.substr(r4.find(',', r4.find(',') + 1)), r6.substr(r6.find(',', r6.find(',') + 1)));
  EXPECT_EQ(r6.rfind("0.6,1,", 0), 0u);
  EXPECT_NE(r25.find(",0.16666666666666666,"), std::string::npos);
}

TEST(Cli, PeriodsSearch) {
  const auto r = run("periods " + config("innovative_p02.json") + " --max-period 5");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  std::vector<int> counts(6, 0);
  for (const auto& o : j.at("orbits")) ++counts[o.at("period").get<int>()];
  EXPECT_EQ(counts, (std::vector<int>{0, 1, 1, 2, 3, 8}));
  const auto csv = run("--format csv periods " + config("imitative_p04.json") + " --max-period 1");
  std::istringstream in(csv.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "period,orbit_index,point_index,x");
  std::vector<double> xs;
  while (std::getline(in, line)) xs.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  ASSERT_EQ(xs.size(), 3u);
  EXPECT_EQ(csv.out.find("-0"), std::string::npos);
  EXPECT_NEAR(xs[0], 0.0, 1e-12);
  EXPECT_NEAR(xs[1], 0.4, 1e-12);
  EXPECT_NEAR(xs[2], 1.0, 1e-12);
}

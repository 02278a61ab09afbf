#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(NHSE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("nhse_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, PredictWritesCsv) {
  const auto d = scratch("predict");
  const auto cfg = d / "c.ini";
  std::ofstream(cfg) << "predict.n = 7\n";
  ASSERT_EQ(run("predict --config " + cfg.string() + " --out " + (d / "p.csv").string()), 0);
  const std::string text = slurp(d / "p.csv");
  EXPECT_EQ(text.rfind("# {", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
}

TEST(Cli, JsonFormat) {
  const auto d = scratch("json");
  ASSERT_EQ(run("trajectory --format json --out " + (d / "t.json").string()), 0);
  const auto j = nlohmann::json::parse(slurp(d / "t.json"));
  EXPECT_EQ(j["columns"]["psi"].size(), 2001u);
  EXPECT_TRUE(j["meta"].contains("classification"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto d = scratch("bad");
  const auto cfg = d / "c.ini";
  std::ofstream(cfg) << "sweep.n_steps = 5\n";
  EXPECT_EQ(run("sweep --config " + cfg.string()), 2);
  std::ofstream(cfg) << "model.bogus = 1\n";
  EXPECT_EQ(run("predict --config " + cfg.string()), 2);
  EXPECT_EQ(run("predict --config " + (d / "missing.ini").string()), 2);
  EXPECT_EQ(run("predict --format xml"), 2);
}

TEST(Cli, UnknownCommandOrFigureExitFour) {
  EXPECT_EQ(run("frobnicate"), 4);
  const auto d = scratch("fig");
  EXPECT_EQ(run("reproduce fig9 --out " + (d / "x").string()), 4);
  EXPECT_FALSE(fs::exists(d / "x"));
}

TEST(Cli, ReproduceWritesManifest) {
  const auto d = scratch("repro") / "fig3";
  ASSERT_EQ(run("reproduce fig3 --out " + d.string()), 0);
  const auto m = nlohmann::json::parse(slurp(d / "manifest.json"));
  EXPECT_EQ(m["figure"], "fig3");
  EXPECT_EQ(m["config_hash"].get<std::string>().size(), 16u);
  ASSERT_EQ(m["datasets"].size(), 2u);
  for (const auto& e : m["datasets"]) {
    EXPECT_TRUE(fs::exists(d / e["file"].get<std::string>()));
    EXPECT_GT(e["rows"].get<int>(), 10);
  }
}

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dmsync/cli.hpp"

using namespace dmsync;

namespace {

struct Out {
  int code;
  std::string out, err;
};

Out call(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

std::filesystem::path write_file(const char* name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

std::string last_line(const std::string& s) {
  const auto end = s.find_last_not_of('\n');
  const auto start = s.rfind('\n', end);
  return s.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

}  // namespace

TEST(Cli, BenchPrintsSummaryAndCsv) {
  const Out r = call({"bench", "--mode", "mcs", "--clients", "4", "--keys", "100", "--ops", "20"});
  EXPECT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("status            completed"), std::string::npos);
  EXPECT_NE(r.out.find("mode,local_wc,clients"), std::string::npos);
  EXPECT_EQ(last_line(r.out).rfind("mcs,0,4,1,write_intensive", 0), 0u);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(call({}).code, cli::kUsage);
  EXPECT_EQ(call({"nope"}).code, cli::kUsage);
  EXPECT_EQ(call({"bench", "--mix", "bogus"}).code, cli::kUsage);
  EXPECT_EQ(call({"bench", "--mode", "paxos"}).code, cli::kUsage);
  EXPECT_EQ(call({"bench", "--theta", "1.5"}).code, cli::kUsage);
  EXPECT_EQ(call({"bench", "--clients", "6", "--nodes", "4"}).code, cli::kUsage);
  EXPECT_EQ(call({"bench", "--aimd-factor", "1"}).code, cli::kUsage);
  EXPECT_EQ(call({"verify", "nosuchsuite"}).code, cli::kUsage);
  EXPECT_EQ(call({"bench", "--ops", "1", "--out", "/nonexistent-dir/x.csv"}).code, cli::kUsage);
}

TEST(Cli, HelpExitsZero) {
  const Out r = call({"--help"});
  EXPECT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("bench"), std::string::npos);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto cfg = write_file("dmsync_cli_test.cfg",
                              "# small run\nmode = osync\nclients=4\nkeys=50\nops=10\nlocal_wc=true\nseed=3\n");
  Out r = call({"bench", "--config", cfg.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(last_line(r.out).rfind("osync,1,4,", 0), 0u);
  r = call({"bench", "--config", cfg.string(), "--mode", "cider"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(last_line(r.out).rfind("cider,1,4,", 0), 0u);
  // Config before the subcommand works too.
  r = call({"--config", cfg.string(), "bench", "--clients", "2"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(last_line(r.out).rfind("osync,1,2,", 0), 0u);
  std::filesystem::remove(cfg);
}

TEST(Cli, ConfigErrors) {
  const auto bad = write_file("dmsync_cli_bad.cfg", "frobnicate=3\n");
  EXPECT_EQ(call({"bench", "--config", bad.string()}).code, cli::kUsage);
  const auto junk = write_file("dmsync_cli_junk.cfg", "no equals sign\n");
  EXPECT_EQ(call({"bench", "--config", junk.string()}).code, cli::kUsage);
  EXPECT_EQ(call({"bench", "--config", "/nonexistent.cfg"}).code, cli::kUsage);
  EXPECT_ANY_THROW(cli::read_config("/nonexistent.cfg"));
  const auto kv = cli::read_config(write_file("dmsync_cli_kv.cfg", "aimd_factor = 4 # trailing\n\n").string());
  ASSERT_EQ(kv.size(), 1u);
  EXPECT_EQ(kv[0].first, "aimd-factor");
  EXPECT_EQ(kv[0].second, "4");
}

TEST(Cli, OutAppendsAndHistoryIsWritten) {
  const auto csv = std::filesystem::temp_directory_path() / "dmsync_cli_out.csv";
  const auto hist = std::filesystem::temp_directory_path() / "dmsync_cli_hist.jsonl";
  std::filesystem::remove(csv);
  for (int i = 0; i < 2; ++i) {
    const Out r = call({"bench", "--clients", "2", "--keys", "10", "--ops", "5", "--out", csv.string(), "--history",
                        hist.string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
  }
  std::ifstream in(csv);
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 3);
  std::ifstream h(hist);
  int records = 0;
  for (std::string l; std::getline(h, l);) ++records;
  EXPECT_EQ(records, 10);
  std::filesystem::remove(csv);
  std::filesystem::remove(hist);
}

TEST(Cli, Microtest) {
  const Out r = call({"microtest", "-n", "4"});
  EXPECT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("osync  ptr cas failures 6 (n(n-1)/2 = 6)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("cider  ptr cas failures 0"), std::string::npos);
}

TEST(Cli, VerifySuites) {
  Out r = call({"verify", "fencing", "epoch"});
  EXPECT_EQ(r.code, cli::kOk) << r.out;
  EXPECT_NE(r.out.find("PASS fencing"), std::string::npos);
  EXPECT_NE(r.out.find("PASS epoch"), std::string::npos);
  r = call({"verify", "fencing", "--mutation", "skip_version_bump"});
  EXPECT_EQ(r.code, cli::kVerifyFailed);
  EXPECT_NE(r.out.find("FAIL fencing"), std::string::npos);
  r = call({"verify", "linearizability", "--runs", "20", "--seed", "100"});
  EXPECT_EQ(r.code, cli::kOk) << r.out;
}

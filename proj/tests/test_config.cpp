#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ccmsim/experiment.hpp"

using namespace ccmsim;

namespace {

ExperimentConfig load(const std::string& text) {
  std::istringstream in(text);
  return load_config(parse_ini(in, "test"));
}

std::string error_of(const std::string& text) {
  try {
    load(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

}  // namespace

TEST(Values, Durations) {
  EXPECT_EQ(cfg::duration("x", "70ns"), 70'000);
  EXPECT_EQ(cfg::duration("x", "50 us"), 50'000'000);
  EXPECT_EQ(cfg::duration("x", "1ms"), 1'000'000'000);
  EXPECT_EQ(cfg::duration("x", "12"), 12);
  EXPECT_EQ(cfg::duration("x", "12ps"), 12);
  EXPECT_THROW(cfg::duration("x", "-3ns"), ConfigError);
  EXPECT_THROW(cfg::duration("x", "abc"), ConfigError);
}

TEST(Values, PollingTokens) {
  EXPECT_EQ(cfg::polling("x", "p1"), 50'000);
  EXPECT_EQ(cfg::polling("x", "p10"), 500'000);
  EXPECT_EQ(cfg::polling("x", "p100"), 5'000'000);
  EXPECT_EQ(cfg::polling("x", "2us"), 2'000'000);
  EXPECT_THROW(cfg::polling("x", "0ns"), ConfigError);
}

TEST(Values, FlagsBandwidthFrequency) {
  EXPECT_TRUE(cfg::flag("x", "on"));
  EXPECT_FALSE(cfg::flag("x", "off"));
  EXPECT_THROW(cfg::flag("x", "maybe"), ConfigError);
  EXPECT_DOUBLE_EQ(cfg::bandwidth("x", "32GiB/s"), 32.0 * 1024 * 1024 * 1024);
  EXPECT_DOUBLE_EQ(cfg::frequency("x", "2GHz"), 2e9);
  EXPECT_EQ(cfg::split_list(" a, b ,c"), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Ini, CommentsSectionsAndErrors) {
  std::istringstream in("# top\n[run]\nworkload = sssp ; trailing\n\n; note\n[ccm]\nsf=4\n");
  auto ini = parse_ini(in);
  ASSERT_EQ(ini.size(), 2u);
  EXPECT_EQ(ini["run"][0].value, "sssp");
  EXPECT_EQ(ini["ccm"][0].line, 7);
  for (const char* bad : {"[run\nx=1\n", "[run]\nnoequals\n", "x=1\n", "[run]\nx=1\nx=2\n"}) {
    std::istringstream b(bad);
    EXPECT_THROW(parse_ini(b), ConfigError) << bad;
  }
}

TEST(Load, AppliesSectionsOverPreset) {
  auto c = load(
      "[run]\nworkload = knn-d512-r512\nmechanism = kai\n"
      "[workload]\nrows = 256\n"
      "[host]\npolling_interval = p100\n"
      "[ccm]\nsf = 4\nooo = off\nscheduler = rr\n"
      "[fabric]\nmem_rtt = 80ns\n"
      "[ring]\ncapacity = 64\n"
      "[metrics]\nstall_average = all\n");
  EXPECT_EQ(c.sys.mechanism, Mechanism::KAI);
  EXPECT_EQ(std::get<KnnParams>(c.params).rows, 256u);
  EXPECT_EQ(c.sys.host.polling_interval, 5'000'000);
  EXPECT_EQ(c.sys.ccm.sf, 4u);
  EXPECT_FALSE(c.sys.ccm.ooo);
  EXPECT_EQ(c.sys.ccm.scheduler, SchedulerPolicy::RR);
  EXPECT_EQ(c.sys.fabric.mem_rtt, 80'000);
  EXPECT_EQ(c.sys.ring.capacity, 64u);
  EXPECT_TRUE(c.idle.stall_over_all);
}

TEST(Load, RejectionsNameTheField) {
  EXPECT_NE(error_of("[run]\nworkload = sssp\n[ccm]\nspeed = 3\n").find("ccm.speed"), std::string::npos);
  EXPECT_NE(error_of("[run]\nworkload = sssp\n[gpu]\nx = 1\n").find("gpu"), std::string::npos);
  EXPECT_NE(error_of("[run]\nmechanism = kai\n").find("run.workload"), std::string::npos);
  EXPECT_NE(error_of("[run]\nworkload = nope\n").find("run.workload"), std::string::npos);
  EXPECT_NE(error_of("[run]\nworkload = sssp\nmechanism = dma\n").find("run.mechanism"), std::string::npos);
  EXPECT_NE(error_of("[run]\nworkload = sssp\n[ccm]\nsf = 2048\n").find("ccm.sf"), std::string::npos);
  EXPECT_NE(error_of("[run]\nworkload = sssp\n[ring]\ncapacity = 8\n[sweep]\nsf = 1,9\n").find("sweep.sf"),
            std::string::npos);
  EXPECT_NE(error_of("[run]\nworkload = knn-d512-r512\n[workload]\nn_v = 3\n").find("workload.n_v"),
            std::string::npos);
}

TEST(Load, SchedulerPrecedence) {
  EXPECT_EQ(load("[run]\nworkload = sssp\n").sys.ccm.scheduler, SchedulerPolicy::RR);  // preset default
  auto c = load("[run]\nworkload = sssp\n[ccm]\nscheduler = fifo\n");
  EXPECT_EQ(c.sys.ccm.scheduler, SchedulerPolicy::FIFO);
}

TEST(Load, SeedFromEnvironmentWins) {
  const std::string text = "[run]\nworkload = sssp\nseed = 5\n";
  ::unsetenv(kSeedEnv);
  EXPECT_EQ(load(text).graph().iterations.size(), load(text).graph().iterations.size());
  auto a = load(text).graph();
  ::setenv(kSeedEnv, "6", 1);
  auto b = load(text).graph();
  auto plain = load("[run]\nworkload = sssp\nseed = 6\n").graph();
  ::unsetenv(kSeedEnv);
  ASSERT_EQ(b.iterations.size(), plain.iterations.size());
  bool differs = a.iterations.size() != b.iterations.size();
  for (std::size_t i = 0; i < b.iterations.size(); ++i) {
    EXPECT_EQ(b.iterations[i].kernel.result_bytes_total, plain.iterations[i].kernel.result_bytes_total);
    if (i < a.iterations.size())
      differs = differs || a.iterations[i].kernel.result_bytes_total != b.iterations[i].kernel.result_bytes_total;
  }
  EXPECT_TRUE(differs);
  ::setenv(kSeedEnv, "x", 1);
  EXPECT_THROW(load(text), ConfigError);
  ::unsetenv(kSeedEnv);
}

TEST(Sweep, CrossProductAndPollingColumn) {
  auto c = load("[run]\nworkload = knn-d512-r512\n[sweep]\nmechanism = rp, bs, kai\npolling = p1, p10, p100\n");
  auto pts = expand_sweep(c);
  ASSERT_EQ(pts.size(), 9u);
  EXPECT_EQ(pts[0].run_id, "r000");
  EXPECT_EQ(pts[8].run_id, "r008");
  auto rows = run_experiment(c);
  ASSERT_EQ(rows.size(), 9u);
  for (const auto& r : rows) {
    if (r.mechanism == "kai") {
      EXPECT_NE(r.polling, "n/a");
    } else {
      EXPECT_EQ(r.polling, "n/a");
    }
  }
  EXPECT_EQ(rows[6].polling, "50000");
  EXPECT_DOUBLE_EQ(rows[0].norm_vs_baseline, 1.0);  // first rp row is the baseline
  EXPECT_LT(rows[6].norm_vs_baseline, 1.0);
}

TEST(Sweep, BaselineRunsEvenWhenNotSwept) {
  auto c = load("[run]\nworkload = pagerank-fig4\nmechanism = bs\n");
  std::size_t observed = 0;
  auto rows = run_experiment(c, [&](const RunPoint&, const RunResult&) { ++observed; });
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(observed, 1u);
  c.sys.mechanism = Mechanism::RP;
  auto rp = run_experiment(c);
  EXPECT_NEAR(rows[0].norm_vs_baseline, static_cast<double>(rows[0].d.e2e) / rp[0].d.e2e, 1e-9);
}

TEST(Report, CsvAndJsonShapes) {
  EXPECT_EQ(csv({}), std::string(kCsvHeader) + "\n");
  auto c = load("[run]\nworkload = knn-d512-r512\n[sweep]\nmechanism = bs, kai\nsf = 1, 2\n");
  auto rows = run_experiment(c);
  std::ostringstream os;
  write_json(os, rows);
  auto j = nlohmann::json::parse(os.str());
  ASSERT_EQ(j["series"].size(), 2u);
  EXPECT_EQ(j["series"]["bs"].size(), 2u);
  EXPECT_EQ(j["series"]["kai"].size(), 2u);
  EXPECT_EQ(j["series"]["kai"][1]["sf"], 2);
  EXPECT_EQ(j["series"]["kai"][1]["e2e_ps"], rows[3].d.e2e);
}

TEST(Report, RepeatedRunsAreByteIdentical) {
  const std::string text = "[run]\nworkload = knn-d512-r512\nmechanism = kai\n[ccm]\nscheduler = rr\n[sweep]\nooo = on, off\n";
  EXPECT_EQ(csv(run_experiment(load(text))), csv(run_experiment(load(text))));
  auto c = load(text);
  std::string t1, t2;
  run_experiment(c, [&](const RunPoint&, const RunResult& r) {
    std::ostringstream os;
    write_trace(os, r);
    t1 += os.str();
  });
  run_experiment(c, [&](const RunPoint&, const RunResult& r) {
    std::ostringstream os;
    write_trace(os, r);
    t2 += os.str();
  });
  EXPECT_EQ(t1, t2);
}

TEST(Configs, ShippedFilesLoad) {
  for (const auto& f : std::filesystem::directory_iterator(CCMSIM_CONFIG_DIR))
    EXPECT_NO_THROW(load_config_file(f.path().string())) << f.path();
}

#ifdef CCMSIM_CLI
namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(CCMSIM_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string write_temp(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST(Cli, ExitCodes) {
  auto out = (std::filesystem::temp_directory_path() / "ccmsim_cli_test").string();
  auto good = write_temp("ccmsim_good.cfg", "[run]\nworkload = pagerank-fig4\n");
  auto bad = write_temp("ccmsim_bad.cfg", "[run]\nworkload = pagerank-fig4\n[ccm]\nwarp = 1\n");
  EXPECT_EQ(cli("run " + good + " --mechanism bs --out " + out), 0);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(out) / "results.csv"));
  EXPECT_EQ(cli("run " + good + " --out " + out), 2);  // no mechanism anywhere
  EXPECT_EQ(cli("run " + bad + " --mechanism bs --out " + out), 2);
  EXPECT_EQ(cli("run " + good + " --mechanism kai --sf 2048 --out " + out), 2);
  EXPECT_EQ(cli("run /nonexistent.cfg --mechanism bs"), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("validate " + good), 0);
  EXPECT_EQ(cli("check-rings"), 0);
  EXPECT_EQ(cli("check-rings --capacity 8 --steps 40"), 2);  // explorer budget
}
#endif

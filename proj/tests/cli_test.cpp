#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "ptycho/cli.hpp"
#include "ptycho/solvers.hpp"

namespace ptycho {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ptycho_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_config(const fs::path& dir, const std::string& json) {
  const auto path = dir / "config.in.json";
  std::ofstream(path) << json;
  return path;
}

const char* kSmall = R"({
  "seed": 3,
  "instance": { "side": 16, "grid": 2, "stride": 6, "probe_radius": 5 },
  "solver": { "variant": "phebie_parallel", "warmup_iters": 2, "max_iters": 15 },
  "benchmark": { "trials": 1, "variants": ["phebie_whole", "thibault_dm"] },
  "output": { "timing": false, "previews": false }
})";

struct Result {
  int code;
  std::string log;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ptycho");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream log, err;
  const int code = cli::main(int(argv.size()), argv.data(), log, err);
  return {code, log.str(), err.str()};
}

bool same_bytes(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

TEST(CliSimulate, WritesStackAndSidecar) {
  const auto dir = scratch("sim");
  const auto cfg = write_config(dir, R"({"seed": 1, "instance": {"side": 32, "grid": 3, "stride": 8, "probe_radius": 8}})");
  const auto r = run_cli({"simulate", "--config", cfg.string(), "--out", (dir / "inst").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto meas = io::read_rimg(dir / "inst" / "measurements.rimg");
  EXPECT_EQ(meas.size(), 9u);
  EXPECT_EQ(meas[0].side(), 32);
  const auto sidecar = read_json(dir / "inst" / "instance.json");
  EXPECT_EQ(sidecar["seed"], 1);
  EXPECT_TRUE(fs::exists(dir / "inst" / "truth_object.cimg"));
  EXPECT_TRUE(fs::exists(dir / "inst" / "truth_object_amp.pgm"));
}

TEST(CliSimulate, SameSeedIsByteIdenticalAndNoiseDiffers) {
  const auto dir = scratch("sim_det");
  const auto clean = write_config(dir, R"({"seed": 5, "instance": {"side": 16, "grid": 2, "stride": 6, "probe_radius": 5}})");
  ASSERT_EQ(run_cli({"simulate", "--config", clean.string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "--config", clean.string(), "--out", (dir / "b").string()}).code, 0);
  for (const auto& entry : fs::directory_iterator(dir / "a"))
    EXPECT_TRUE(same_bytes(entry.path(), dir / "b" / entry.path().filename())) << entry.path().filename();

  std::ofstream(dir / "noisy.json")
      << R"({"seed": 5, "instance": {"side": 16, "grid": 2, "stride": 6, "probe_radius": 5, "noise": {"peak_count": 2}}})";
  ASSERT_EQ(run_cli({"simulate", "--config", (dir / "noisy.json").string(), "--out", (dir / "n").string()}).code, 0);
  EXPECT_FALSE(same_bytes(dir / "a" / "measurements.rimg", dir / "n" / "measurements.rimg"));
  EXPECT_TRUE(read_json(dir / "n" / "instance.json")["noise_scale"].is_number());

  ASSERT_EQ(run_cli({"simulate", "--config", clean.string(), "--seed", "6", "--out", (dir / "c").string()}).code, 0);
  EXPECT_EQ(read_json(dir / "c" / "instance.json")["seed"], 6);
}

TEST(CliReconstruct, WritesOutputsAndReducesRFactor) {
  const auto dir = scratch("rec");
  const auto cfg = write_config(dir, kSmall);
  const auto r = run_cli({"reconstruct", "--config", cfg.string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"probe.cimg", "object.cimg", "trace.csv", "certificate.txt", "summary.json", "config.json"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  const auto trace = io::read_trace_csv(dir / "out" / "trace.csv");
  ASSERT_EQ(trace.size(), 18u);
  EXPECT_LT(trace.back().r_factor, trace.front().r_factor);
  EXPECT_LT(trace.back().F, trace.front().F);
  const auto summary = read_json(dir / "out" / "summary.json");
  EXPECT_EQ(summary["variant"], "phebie_parallel");
  EXPECT_TRUE(summary["certificate"]["passed"].get<bool>());
  EXPECT_NE(slurp(dir / "out" / "certificate.txt").find("certificates             pass"), std::string::npos);
  EXPECT_EQ(io::read_cimg(dir / "out" / "object.cimg").size(), 1u);
}

TEST(CliReconstruct, TraceIsByteIdenticalAcrossRuns) {
  const auto dir = scratch("rec_det");
  const auto cfg = write_config(dir, kSmall);
  for (const char* v : {"phebie_seq", "thibault_dm", "maiden_rodenburg"}) {
    ASSERT_EQ(run_cli({"reconstruct", "--config", cfg.string(), "--variant", v, "--out", (dir / "a").string()}).code, 0);
    ASSERT_EQ(run_cli({"reconstruct", "--config", cfg.string(), "--variant", v, "--out", (dir / "b").string()}).code, 0);
    EXPECT_TRUE(same_bytes(dir / "a" / "trace.csv", dir / "b" / "trace.csv")) << v;
    EXPECT_TRUE(same_bytes(dir / "a" / "object.cimg", dir / "b" / "object.cimg")) << v;
  }
}

TEST(CliReconstruct, ThreadCountDoesNotChangeResults) {
  const auto dir = scratch("rec_threads");
  const auto cfg = write_config(dir, kSmall);
  ::setenv("PTYCHO_THREADS", "1", 1);
  ASSERT_EQ(run_cli({"reconstruct", "--config", cfg.string(), "--out", (dir / "one").string()}).code, 0);
  ::setenv("PTYCHO_THREADS", "4", 1);
  ASSERT_EQ(run_cli({"reconstruct", "--config", cfg.string(), "--out", (dir / "four").string()}).code, 0);
  ::unsetenv("PTYCHO_THREADS");
  EXPECT_TRUE(same_bytes(dir / "one" / "trace.csv", dir / "four" / "trace.csv"));
}

TEST(CliReconstruct, WarmupOnlyKeepsInitialProbe) {
  const auto dir = scratch("rec_warm");
  const auto cfg = write_config(dir, R"({
    "seed": 3,
    "instance": { "side": 16, "grid": 2, "stride": 6, "probe_radius": 5 },
    "solver": { "variant": "phebie_whole", "warmup_iters": 5, "max_iters": 0 },
    "output": { "previews": false }
  })");
  ASSERT_EQ(run_cli({"reconstruct", "--config", cfg.string(), "--out", (dir / "out").string()}).code, 0);
  const auto config = load_config(cfg);
  const auto inst = cli::resolve_instance(config);
  EXPECT_EQ(io::read_cimg(dir / "out" / "probe.cimg")[0], initial_state(inst.problem, config.seed).x);
}

TEST(CliReconstruct, LoadsSimulatedInstanceDirectory) {
  const auto dir = scratch("rec_dir");
  const auto sim_cfg = write_config(dir, kSmall);
  ASSERT_EQ(run_cli({"simulate", "--config", sim_cfg.string(), "--out", (dir / "inst").string()}).code, 0);
  std::ofstream(dir / "from_dir.json") << R"({"seed": 3, "instance": {"dir": "inst"},
    "solver": {"warmup_iters": 2, "max_iters": 15}, "output": {"timing": false, "previews": false}})";
  ASSERT_EQ(run_cli({"reconstruct", "--config", (dir / "from_dir.json").string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run_cli({"reconstruct", "--config", sim_cfg.string(), "--out", (dir / "b").string()}).code, 0);
  EXPECT_TRUE(same_bytes(dir / "a" / "trace.csv", dir / "b" / "trace.csv"));
}

TEST(CliErrors, ExitCodes) {
  const auto dir = scratch("errors");
  const auto cfg = write_config(dir, kSmall);
  EXPECT_EQ(run_cli({"reconstruct", "--config", cfg.string(), "--variant", "bogus"}).code, 1);
  EXPECT_EQ(run_cli({"reconstruct"}).code, 1);
  EXPECT_EQ(run_cli({"reconstruct", "--config", (dir / "missing.json").string()}).code, 1);
  EXPECT_EQ(run_cli({}).code, 1);
  std::ofstream(dir / "unknown.json") << R"({"seed": 1, "solver": {"variant": "phebie_parallel", "speed": 3}})";
  EXPECT_EQ(run_cli({"reconstruct", "--config", (dir / "unknown.json").string()}).code, 2);
  std::ofstream(dir / "alpha.json") << R"({"seed": 1, "solver": {"alpha": 0.5}})";
  EXPECT_EQ(run_cli({"reconstruct", "--config", (dir / "alpha.json").string()}).code, 2);
  std::ofstream(dir / "bad_variant.json") << R"({"seed": 1, "solver": {"variant": "fast"}})";
  EXPECT_EQ(run_cli({"reconstruct", "--config", (dir / "bad_variant.json").string()}).code, 2);
  std::ofstream(dir / "no_dir.json") << R"({"seed": 1, "instance": {"dir": "nowhere"}})";
  EXPECT_EQ(run_cli({"reconstruct", "--config", (dir / "no_dir.json").string(), "--out", (dir / "x").string()}).code, 4);
  EXPECT_EQ(run_cli({"metrics", "--config", cfg.string(), "--input", (dir / "empty").string(), "--out",
                     (dir / "m").string()})
                .code,
            4);
}

TEST(CliMetrics, RecomputesFromSavedImages) {
  const auto dir = scratch("metrics");
  const auto cfg = write_config(dir, kSmall);
  ASSERT_EQ(run_cli({"reconstruct", "--config", cfg.string(), "--out", (dir / "rec").string()}).code, 0);
  const auto r = run_cli({"metrics", "--config", cfg.string(), "--input", (dir / "rec").string(), "--out",
                          (dir / "m").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(dir / "m" / "metrics.json");
  const auto s = read_json(dir / "rec" / "summary.json");
  EXPECT_DOUBLE_EQ(m["r_factor"].get<double>(), s["final"]["r_factor"].get<double>());
  EXPECT_DOUBLE_EQ(m["rms_object"].get<double>(), s["final"]["rms_object"].get<double>());
  EXPECT_TRUE(m["probe_feasible"].get<bool>());
  EXPECT_TRUE(m["object_feasible"].get<bool>());
  EXPECT_TRUE(m["certificate"]["passed"].get<bool>());
  EXPECT_LE(m["F_min_z"].get<double>(), s["final"]["F"].get<double>() * (1 + 1e-12));
}

TEST(CliBenchmark, SingleTrialAggregateEqualsTheRun) {
  const auto dir = scratch("bench");
  const auto cfg = write_config(dir, kSmall);
  const auto r = run_cli({"benchmark", "--config", cfg.string(), "--out", (dir / "b").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(dir / "b" / "benchmark.csv"));
  std::string header, mean_line, worst_line;
  std::getline(csv, header);
  for (const char* v : {"phebie_whole", "thibault_dm"}) {
    std::getline(csv, mean_line);
    std::getline(csv, worst_line);
    const std::string mean_prefix = std::string(v) + ",1,mean,";
    const std::string worst_prefix = std::string(v) + ",1,worst,";
    ASSERT_EQ(mean_line.rfind(mean_prefix, 0), 0u) << mean_line;
    ASSERT_EQ(worst_line.rfind(worst_prefix, 0), 0u) << worst_line;
    EXPECT_EQ(mean_line.substr(mean_prefix.size()), worst_line.substr(worst_prefix.size()));
  }
  EXPECT_TRUE(fs::exists(dir / "b" / "benchmark.txt"));
  EXPECT_TRUE(fs::exists(dir / "b" / "benchmark_runs.csv"));
}

TEST(CliBinary, RunsAsAProcess) {
  const char* exe = PTYCHO_CLI_PATH;
  const auto dir = scratch("binary");
  const auto cfg = write_config(dir, kSmall);
  const std::string base = std::string(exe) + " reconstruct --config " + cfg.string() + " --out " + (dir / "o").string();
  EXPECT_EQ(std::system((base + " > /dev/null 2>&1").c_str()), 0);
  const int bad = std::system((base + " --variant nope > /dev/null 2>&1").c_str());
  EXPECT_TRUE(WIFEXITED(bad));
  EXPECT_EQ(WEXITSTATUS(bad), 1);
}

}  // namespace
}  // namespace ptycho

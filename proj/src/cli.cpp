#include "ptycho/cli.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

namespace ptycho::cli {

namespace {

using nlohmann::ordered_json;

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

void write_json(const fs::path& path, const ordered_json& j) { open_text(path) << j.dump(2) << '\n'; }

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

RunSummary summarize(const io::StoredInstance& inst, const RunResultd& r, double seconds) {
  RunSummary s;
  s.F = r.state.F_curr;
  s.step_sq = r.state.last_step_sq;
  s.r_factor = r.trace.back().r_factor;
  s.rms_object = inst.true_object ? rms_error_registered(r.state.y, *inst.true_object)
                                  : std::numeric_limits<double>::quiet_NaN();
  s.rms_probe = inst.true_probe ? rms_error_registered(r.state.x, *inst.true_probe)
                                : std::numeric_limits<double>::quiet_NaN();
  s.time_s = seconds;
  return s;
}

ordered_json summary_json(const RunSummary& s) {
  return {{"F", number_or_null(s.F)},
          {"step_sq", number_or_null(s.step_sq)},
          {"rms_object", number_or_null(s.rms_object)},
          {"rms_probe", number_or_null(s.rms_probe)},
          {"r_factor", number_or_null(s.r_factor)},
          {"time_s", number_or_null(s.time_s)}};
}

std::string run_csv_row(const std::string& variant, int trial, std::uint64_t seed, const RunSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%d,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", variant.c_str(), trial,
                static_cast<unsigned long long>(seed), s.F, s.step_sq, s.rms_object, s.rms_probe, s.r_factor,
                s.time_s);
  return buf;
}

}  // namespace

AppConfig apply_overrides(AppConfig c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.variant) c.solver.variant = parse_variant(*o.variant);
  make_solver_config(c.solver, c.solver.variant, c.seed).validate();
  return c;
}

io::StoredInstance resolve_instance(const AppConfig& c) {
  if (c.instance_dir) return io::load_instance(*c.instance_dir);
  auto sim = simulate_instance(c.simulation, c.seed);
  io::StoredInstance inst;
  inst.problem = std::move(sim.problem);
  inst.true_probe = std::move(sim.true_probe);
  inst.true_object = std::move(sim.true_object);
  inst.seed = c.seed;
  inst.noise_scale = sim.noise_scale;
  return inst;
}

void cmd_simulate(const AppConfig& c, const fs::path& out, std::ostream& log) {
  if (c.instance_dir) throw ParameterError("simulate needs simulation parameters, not an instance directory");
  const auto inst = resolve_instance(c);
  io::save_instance(out, inst);
  open_text(out / "config.json") << dump_config(c);
  if (c.output.previews) {
    io::write_preview(out, "truth_probe", *inst.true_probe);
    io::write_preview(out, "truth_object", *inst.true_object);
  }
  log << "simulate: " << inst.problem.geometry().count() << " frames of " << inst.problem.side() << "x"
      << inst.problem.side() << " written to " << out.string() << "\n";
}

int cmd_reconstruct(const AppConfig& c, const fs::path& out, std::ostream& log) {
  const auto inst = resolve_instance(c);
  const auto cfg = make_solver_config(c.solver, c.solver.variant, c.seed);
  fs::create_directories(out);
  open_text(out / "config.json") << dump_config(c);

  const auto t0 = std::chrono::steady_clock::now();
  RunResultd result;
  try {
    result = run(inst.problem, cfg);
  } catch (const SolverAbort& e) {
    io::write_trace_csv(out / "trace.csv", e.trace(), c.output.timing);
    log << "reconstruct: aborted: " << e.what() << "\n";
    return 3;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  io::write_cimg(out / "probe.cimg", {result.state.x});
  io::write_cimg(out / "object.cimg", {result.state.y});
  io::write_trace_csv(out / "trace.csv", result.trace, c.output.timing);
  if (c.output.previews) {
    io::write_preview(out, "probe", result.state.x);
    io::write_preview(out, "object", result.state.y);
  }

  const bool certified = is_phebie(cfg.variant);
  const auto report = certificate_report(result.trace, result.lambda_minus, cfg.certificate_tol, cfg.warmup_iters);
  {
    auto text = open_text(out / "certificate.txt");
    text << "variant                  " << to_string(cfg.variant) << "\n"
         << "lambda_minus             " << result.lambda_minus << "\n"
         << "certificates apply       " << (certified ? "yes" : "no (no decrease guarantee)") << "\n"
         << format_certificate(report);
  }
  for (const auto& w : result.warnings) log << "warning: " << w << "\n";

  const auto summary = summarize(inst, result, seconds);
  ordered_json j;
  j["variant"] = to_string(cfg.variant);
  j["seed"] = c.seed;
  j["iterations"] = {{"warmup", cfg.warmup_iters}, {"main", cfg.max_iters}};
  j["final"] = summary_json(summary);
  j["certificate"] = {{"applies", certified},
                      {"passed", report.passed()},
                      {"violations", report.monotonicity_violations},
                      {"rate_bound_holds", report.rate_bound_holds},
                      {"max_path_ratio", number_or_null(report.max_path_ratio)}};
  j["warnings"] = result.warnings;
  write_json(out / "summary.json", j);

  log << "reconstruct: " << to_string(cfg.variant) << " F=" << summary.F << " R=" << summary.r_factor;
  if (inst.true_object) log << " rms_object=" << summary.rms_object << " rms_probe=" << summary.rms_probe;
  log << " (" << seconds << " s)\n";
  return 0;
}

void cmd_benchmark(const AppConfig& c, const fs::path& out, std::ostream& log) {
  fs::create_directories(out);
  open_text(out / "config.json") << dump_config(c);
  std::vector<std::vector<RunSummary>> per_variant(c.benchmark.variants.size());
  auto runs_csv = open_text(out / "benchmark_runs.csv");
  runs_csv << "variant,trial,seed,F,step_sq,rms_object,rms_probe,r_factor,time_s\n";
  for (int t = 0; t < c.benchmark.trials; ++t) {
    AppConfig trial = c;
    trial.seed = c.seed + std::uint64_t(t);
    const auto inst = resolve_instance(trial);
    for (std::size_t v = 0; v < c.benchmark.variants.size(); ++v) {
      const auto variant = c.benchmark.variants[v];
      const auto cfg = make_solver_config(c.solver, variant, trial.seed);
      const auto t0 = std::chrono::steady_clock::now();
      RunSummary s;
      try {
        const auto result = run(inst.problem, cfg);
        s = summarize(inst, result, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      } catch (const SolverAbort& e) {
        log << "benchmark: " << to_string(variant) << " trial " << t << " aborted: " << e.what() << "\n";
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s = {nan, nan, nan, nan, nan, nan};
      }
      per_variant[v].push_back(s);
      runs_csv << run_csv_row(to_string(variant), t, trial.seed, s);
      log << "benchmark: trial " << t << " " << to_string(variant) << " R=" << s.r_factor
          << " rms_object=" << s.rms_object << "\n";
    }
  }
  std::vector<AggregateRow> rows;
  for (std::size_t v = 0; v < per_variant.size(); ++v)
    rows.push_back(aggregate(to_string(c.benchmark.variants[v]), per_variant[v]));
  auto csv = open_text(out / "benchmark.csv");
  write_aggregate_csv(csv, rows);
  auto text = open_text(out / "benchmark.txt");
  write_aggregate_text(text, rows);
  write_aggregate_text(log, rows);
}

void cmd_metrics(const AppConfig& c, const fs::path& input, const fs::path& out, std::ostream& log) {
  const auto inst = resolve_instance(c);
  auto one = [](std::vector<ComplexImaged> s, const fs::path& p) {
    if (s.size() != 1) throw FormatError(p.string() + " must hold exactly one image");
    return std::move(s.front());
  };
  const auto x = one(io::read_cimg(input / "probe.cimg"), input / "probe.cimg");
  const auto y = one(io::read_cimg(input / "object.cimg"), input / "object.cimg");
  const auto& p = inst.problem;
  const auto& geom = p.geometry();
  if (x.side() != p.side() || y.side() != p.side()) throw DimensionError("saved images do not match the instance");

  // Objective at the exit waves that minimize it for this (x, y).
  FrameStackd z(static_cast<std::size_t>(geom.count()));
  for (Index j = 0; j < geom.count(); ++j)
    z[std::size_t(j)] = project_modulus(hadamard(shift(x, j, geom), y), p.measurements.magnitudes[std::size_t(j)]);

  ordered_json j;
  j["F_min_z"] = objective(x, y, z, geom);
  j["r_factor"] = r_factor(x, y, geom, p.measurements);
  j["rms_object"] = inst.true_object ? number_or_null(rms_error_registered(y, *inst.true_object)) : ordered_json(nullptr);
  j["rms_probe"] = inst.true_probe ? number_or_null(rms_error_registered(x, *inst.true_probe)) : ordered_json(nullptr);
  j["probe_feasible"] = in_probe_set(x, p.probe, 1e-12);
  j["object_feasible"] = in_object_set(y, p.object, 1e-12);
  if (fs::exists(input / "trace.csv")) {
    const auto trace = io::read_trace_csv(input / "trace.csv");
    const auto cfg = make_solver_config(c.solver, c.solver.variant, c.seed);
    const auto rep = certificate_report(trace, lambda_minus(p, cfg), cfg.certificate_tol, cfg.warmup_iters);
    j["certificate"] = {{"passed", rep.monotonicity_violations == 0 && rep.rate_bound_holds},
                        {"violations", rep.monotonicity_violations},
                        {"rate_bound_holds", rep.rate_bound_holds},
                        {"min_step_sq", rep.min_step_sq}};
  }
  fs::create_directories(out);
  write_json(out / "metrics.json", j);
  log << j.dump(2) << "\n";
}

int main(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Blind ptychography reconstruction"};
  app.require_subcommand(1);
  fs::path config_path;
  fs::path out_dir = ".";
  fs::path input_dir;
  Overrides overrides;

  std::vector<std::string> variant_names;
  for (auto v : all_variants()) variant_names.push_back(to_string(v));

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", overrides.seed, "seed (overrides the config)");
    sub->add_option("--variant", overrides.variant, "solver variant (overrides the config)")
        ->check(CLI::IsMember(variant_names));
  };
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic instance");
  auto* reconstruct = app.add_subcommand("reconstruct", "run one solver");
  auto* benchmark = app.add_subcommand("benchmark", "run trials x variants and aggregate");
  auto* metrics = app.add_subcommand("metrics", "recompute metrics from saved images");
  for (auto* sub : {simulate, reconstruct, benchmark, metrics}) add_common(sub);
  metrics->add_option("--input", input_dir, "directory holding probe.cimg / object.cimg (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto config = apply_overrides(load_config(config_path), overrides);
    if (*simulate) cmd_simulate(config, out_dir, log);
    if (*reconstruct) return cmd_reconstruct(config, out_dir, log);
    if (*benchmark) cmd_benchmark(config, out_dir, log);
    if (*metrics) cmd_metrics(config, input_dir.empty() ? out_dir : input_dir, out_dir, log);
    return 0;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace ptycho::cli

#include "ptycho/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ptycho {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ParameterError("config: '" + where + "' must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!keys.count(key)) throw ParameterError("config: unknown key '" + where + "." + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& dst) {
  if (obj.contains(key) && !obj.at(key).is_null()) dst = obj.at(key).get<T>();
}

void parse_instance(const json& j, AppConfig& c, const std::filesystem::path& base) {
  reject_unknown(j, "instance",
                 {"dir", "side", "grid", "stride", "probe_radius", "probe_amplitude", "probe_defocus",
                  "constraint_radius", "amplitude_cap", "object_amp_lo", "object_amp_hi", "noise", "floors"});
  if (j.contains("dir")) {
    std::filesystem::path dir = j.at("dir").get<std::string>();
    c.instance_dir = dir.is_absolute() || base.empty() ? dir : base / dir;
  }
  auto& s = c.simulation;
  read(j, "side", s.side);
  read(j, "grid", s.grid);
  read(j, "stride", s.stride);
  read(j, "probe_radius", s.probe_radius);
  read(j, "probe_amplitude", s.probe_amplitude);
  read(j, "probe_defocus", s.probe_defocus);
  read(j, "constraint_radius", s.constraint_radius);
  read(j, "amplitude_cap", s.amplitude_cap);
  read(j, "object_amp_lo", s.object_amp_lo);
  read(j, "object_amp_hi", s.object_amp_hi);
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    reject_unknown(n, "instance.noise", {"scale", "peak_count"});
    read(n, "scale", s.noise_scale);
    read(n, "peak_count", s.noise_peak_count);
  }
  if (j.contains("floors")) {
    const auto& f = j.at("floors");
    reject_unknown(f, "instance.floors", {"x", "y"});
    read(f, "x", s.floor_x);
    read(f, "y", s.floor_y);
  }
  s.validate();
}

void parse_solver(const json& j, SolverSettings& s) {
  reject_unknown(j, "solver",
                 {"variant", "alpha", "beta", "gamma", "eta_x", "eta_y", "inner_rounds", "warmup_iters", "max_iters",
                  "block_rows", "block_cols", "certificate_tol", "dm_project_constraints"});
  if (j.contains("variant")) s.variant = parse_variant(j.at("variant").get<std::string>());
  read(j, "alpha", s.alpha);
  read(j, "beta", s.beta);
  read(j, "gamma", s.gamma);
  read(j, "eta_x", s.eta_x);
  read(j, "eta_y", s.eta_y);
  read(j, "inner_rounds", s.inner_rounds);
  read(j, "warmup_iters", s.warmup_iters);
  read(j, "max_iters", s.max_iters);
  read(j, "block_rows", s.block_rows);
  read(j, "block_cols", s.block_cols);
  read(j, "certificate_tol", s.certificate_tol);
  read(j, "dm_project_constraints", s.dm_project_constraints);
}

}  // namespace

AppConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  AppConfig c;
  try {
    const json root = json::parse(text);
    reject_unknown(root, "config", {"seed", "instance", "solver", "benchmark", "output"});
    read(root, "seed", c.seed);
    if (root.contains("instance")) parse_instance(root.at("instance"), c, base_dir);
    if (root.contains("solver")) parse_solver(root.at("solver"), c.solver);
    if (root.contains("benchmark")) {
      const auto& b = root.at("benchmark");
      reject_unknown(b, "benchmark", {"trials", "variants"});
      read(b, "trials", c.benchmark.trials);
      if (b.contains("variants")) {
        c.benchmark.variants.clear();
        for (const auto& v : b.at("variants")) c.benchmark.variants.push_back(parse_variant(v.get<std::string>()));
      }
      if (c.benchmark.trials < 1) throw ParameterError("config: benchmark.trials must be >= 1");
      if (c.benchmark.variants.empty()) throw ParameterError("config: benchmark.variants is empty");
    }
    if (root.contains("output")) {
      const auto& o = root.at("output");
      reject_unknown(o, "output", {"timing", "previews"});
      read(o, "timing", c.output.timing);
      read(o, "previews", c.output.previews);
    }
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  make_solver_config(c.solver, c.solver.variant, c.seed).validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

SolverConfigd make_solver_config(const SolverSettings& s, Variant variant, std::uint64_t seed) {
  auto c = SolverConfigd::defaults(variant);
  if (s.alpha) c.alpha = *s.alpha;
  if (s.beta) c.beta = *s.beta;
  c.gamma = s.gamma;
  if (s.eta_x || s.eta_y) c.floors = LipschitzFloors<double>{s.eta_x.value_or(1e-12), s.eta_y.value_or(1e-12)};
  c.inner_rounds = s.inner_rounds;
  c.warmup_iters = s.warmup_iters;
  c.max_iters = s.max_iters;
  c.block_rows = s.block_rows;
  c.block_cols = s.block_cols;
  c.certificate_tol = s.certificate_tol;
  c.dm_project_constraints = s.dm_project_constraints;
  c.seed = seed;
  return c;
}

std::string dump_config(const AppConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  auto& inst = j["instance"];
  if (c.instance_dir) {
    inst["dir"] = c.instance_dir->string();
  } else {
    const auto& s = c.simulation;
    inst = {{"side", s.side},
            {"grid", s.grid},
            {"stride", s.stride},
            {"probe_radius", s.probe_radius},
            {"probe_amplitude", s.probe_amplitude},
            {"probe_defocus", s.probe_defocus},
            {"constraint_radius", s.constraint_radius.value_or(s.probe_radius + 2)},
            {"amplitude_cap", s.amplitude_cap},
            {"object_amp_lo", s.object_amp_lo},
            {"object_amp_hi", s.object_amp_hi},
            {"floors", {{"x", s.floor_x}, {"y", s.floor_y}}}};
    if (s.noise_scale) inst["noise"] = {{"scale", *s.noise_scale}};
    else if (s.noise_peak_count) inst["noise"] = {{"peak_count", *s.noise_peak_count}};
  }
  const auto& s = c.solver;
  const auto resolved = make_solver_config(s, s.variant, c.seed);
  j["solver"] = {{"variant", to_string(s.variant)},
                 {"alpha", resolved.alpha},
                 {"beta", resolved.beta},
                 {"gamma", s.gamma},
                 {"inner_rounds", s.inner_rounds},
                 {"warmup_iters", s.warmup_iters},
                 {"max_iters", s.max_iters},
                 {"block_rows", s.block_rows},
                 {"block_cols", s.block_cols},
                 {"certificate_tol", s.certificate_tol},
                 {"dm_project_constraints", s.dm_project_constraints}};
  if (s.eta_x) j["solver"]["eta_x"] = *s.eta_x;
  if (s.eta_y) j["solver"]["eta_y"] = *s.eta_y;
  j["benchmark"]["trials"] = c.benchmark.trials;
  j["benchmark"]["variants"] = nlohmann::json::array();
  for (auto v : c.benchmark.variants) j["benchmark"]["variants"].push_back(to_string(v));
  j["output"] = {{"timing", c.output.timing}, {"previews", c.output.previews}};
  return j.dump(2) + "\n";
}

}  // namespace ptycho

#include "ptycho/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

namespace ptycho::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

void write_header(std::ostream& out, const char* magic, Index side, std::size_t count) {
  out << magic << '\n' << side << ' ' << count << '\n';
}

std::pair<Index, std::size_t> read_header(std::istream& in, const std::string& magic) {
  std::string line;
  if (!std::getline(in, line) || line != magic) throw FormatError("bad magic: expected " + magic);
  if (!std::getline(in, line)) throw FormatError("missing size header");
  std::istringstream head(line);
  long long side = 0, count = -1;
  std::string rest;
  if (!(head >> side >> count) || (head >> rest) || side <= 0 || count < 0)
    throw FormatError("malformed size header '" + line + "'");
  return {Index(side), std::size_t(count)};
}

void read_doubles(std::istream& in, double* dst, std::size_t count) {
  in.read(reinterpret_cast<char*>(dst), std::streamsize(count * sizeof(double)));
  if (std::size_t(in.gcount()) != count * sizeof(double)) throw FormatError("truncated image data");
}

void expect_end(std::istream& in) {
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after image data");
}

void check_stack(const auto& stack) {
  if (stack.empty()) return;
  for (const auto& img : stack)
    if (img.side() != stack.front().side() || img.empty()) throw DimensionError("stack images differ in side");
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_cimg(std::ostream& out, const std::vector<ComplexImaged>& stack) {
  check_stack(stack);
  const Index side = stack.empty() ? 1 : stack.front().side();
  write_header(out, "CIMG1", side, stack.size());
  for (const auto& img : stack)
    out.write(reinterpret_cast<const char*>(img.array().data()), std::streamsize(img.size() * 2 * sizeof(double)));
  if (!out) throw FormatError("write failed");
}

std::vector<ComplexImaged> read_cimg(std::istream& in) {
  const auto [side, count] = read_header(in, "CIMG1");
  std::vector<ComplexImaged> stack;
  for (std::size_t j = 0; j < count; ++j) {
    ComplexImaged img(side);
    read_doubles(in, reinterpret_cast<double*>(img.array().data()), std::size_t(img.size()) * 2);
    stack.push_back(std::move(img));
  }
  expect_end(in);
  return stack;
}

void write_cimg(const fs::path& path, const std::vector<ComplexImaged>& stack) {
  auto out = open_out(path);
  write_cimg(out, stack);
}

std::vector<ComplexImaged> read_cimg(const fs::path& path) {
  auto in = open_in(path);
  return read_cimg(in);
}

void write_rimg(std::ostream& out, const std::vector<RealImaged>& stack) {
  check_stack(stack);
  const Index side = stack.empty() ? 1 : stack.front().side();
  write_header(out, "RIMG1", side, stack.size());
  for (const auto& img : stack)
    out.write(reinterpret_cast<const char*>(img.array().data()), std::streamsize(img.size() * sizeof(double)));
  if (!out) throw FormatError("write failed");
}

std::vector<RealImaged> read_rimg(std::istream& in) {
  const auto [side, count] = read_header(in, "RIMG1");
  std::vector<RealImaged> stack;
  for (std::size_t j = 0; j < count; ++j) {
    RealImaged img(side);
    read_doubles(in, img.array().data(), std::size_t(img.size()));
    stack.push_back(std::move(img));
  }
  expect_end(in);
  return stack;
}

void write_rimg(const fs::path& path, const std::vector<RealImaged>& stack) {
  auto out = open_out(path);
  write_rimg(out, stack);
}

std::vector<RealImaged> read_rimg(const fs::path& path) {
  auto in = open_in(path);
  return read_rimg(in);
}

RealImaged mask_to_real(const SupportMask& mask) {
  RealImaged out(mask.side());
  for (Index i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
  return out;
}

SupportMask real_to_mask(const RealImaged& img) {
  SupportMask out(img.side());
  for (Index i = 0; i < img.size(); ++i) out[i] = img[i] != 0.0;
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<IterationTrace>& trace, bool timing) {
  out << "k,F,step_sq,decrease_slack,r_factor,elapsed_ms\n";
  for (const auto& t : trace)
    out << t.k << ',' << fmt17(t.F) << ',' << fmt17(t.step_sq) << ',' << fmt17(t.decrease_slack) << ','
        << fmt17(t.r_factor) << ',' << fmt17(timing ? t.elapsed_ms : 0.0) << '\n';
}

void write_trace_csv(const fs::path& path, const std::vector<IterationTrace>& trace, bool timing) {
  auto out = open_out(path);
  write_trace_csv(out, trace, timing);
  if (!out) throw FormatError("write failed: " + path.string());
}

std::vector<IterationTrace> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "k,F,step_sq,decrease_slack,r_factor,elapsed_ms")
    throw FormatError("unexpected trace header");
  std::vector<IterationTrace> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw FormatError("trace row needs 6 fields: '" + line + "'");
    IterationTrace t;
    auto parse = [&](const std::string& text, auto& value) {
      const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || end != text.data() + text.size())
        throw FormatError("bad number in trace row '" + line + "'");
    };
    parse(cells[0], t.k);
    double* dst[] = {&t.F, &t.step_sq, &t.decrease_slack, &t.r_factor, &t.elapsed_ms};
    for (std::size_t c = 0; c < 5; ++c) parse(cells[c + 1], *dst[c]);
    trace.push_back(t);
  }
  return trace;
}

std::vector<IterationTrace> read_trace_csv(const fs::path& path) {
  auto in = open_in(path);
  return read_trace_csv(in);
}

void write_pgm(const fs::path& path, const RealImaged& img, double lo, double hi) {
  auto out = open_out(path);
  out << "P5\n" << img.side() << ' ' << img.side() << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (Index i = 0; i < img.size(); ++i) {
    const double u = std::clamp((img[i] - lo) / span, 0.0, 1.0);
    out.put(char(static_cast<unsigned char>(std::lround(u * 255.0))));
  }
}

void write_preview(const fs::path& dir, const std::string& stem, const ComplexImaged& img) {
  const auto amp = abs(img);
  write_pgm(dir / (stem + "_amp.pgm"), amp, 0.0, amp.array().maxCoeff());
  RealImaged phase(img.side(), img.array().arg().eval());
  write_pgm(dir / (stem + "_phase.pgm"), phase, -std::numbers::pi, std::numbers::pi);
}

void save_instance(const fs::path& dir, const StoredInstance& inst) {
  const auto& p = inst.problem;
  p.validate();
  fs::create_directories(dir);
  nlohmann::ordered_json side;
  side["format"] = "ptycho-instance-1";
  side["side"] = p.side();
  side["frames"] = p.geometry().count();
  side["offsets"] = nlohmann::json::array();
  for (const auto& o : p.geometry().offsets()) side["offsets"].push_back({o.row, o.col});
  side["probe"] = {{"support", "probe_support.rimg"}, {"amplitude_cap", p.probe.amplitude_cap}};
  side["object"] = {{"support", "object_support.rimg"}, {"amp_lo", p.object.amp_lo}, {"amp_hi", p.object.amp_hi}};
  side["floors"] = {{"x", p.floors.x}, {"y", p.floors.y}};
  side["measurements"] = "measurements.rimg";
  side["seed"] = inst.seed;
  side["noise_scale"] = inst.noise_scale ? nlohmann::json(*inst.noise_scale) : nlohmann::json(nullptr);
  side["truth"] = {{"probe", inst.true_probe ? "truth_probe.cimg" : ""},
                   {"object", inst.true_object ? "truth_object.cimg" : ""}};

  write_rimg(dir / "measurements.rimg", p.measurements.magnitudes);
  write_rimg(dir / "probe_support.rimg", {mask_to_real(p.probe.support)});
  write_rimg(dir / "object_support.rimg", {mask_to_real(p.object.support)});
  if (inst.true_probe) write_cimg(dir / "truth_probe.cimg", {*inst.true_probe});
  if (inst.true_object) write_cimg(dir / "truth_object.cimg", {*inst.true_object});
  auto out = open_out(dir / "instance.json");
  out << side.dump(2) << '\n';
}

namespace {

template <typename T>
T single(std::vector<T> stack, const fs::path& path) {
  if (stack.size() != 1) throw FormatError(path.string() + " must hold exactly one image");
  return std::move(stack.front());
}

}  // namespace

StoredInstance load_instance(const fs::path& dir) {
  nlohmann::json side;
  try {
    auto in = open_in(dir / "instance.json");
    side = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("instance.json: " + std::string(e.what()));
  }
  StoredInstance inst;
  try {
    const Index n = side.at("side").get<Index>();
    std::vector<Offset> offsets;
    for (const auto& o : side.at("offsets")) offsets.push_back({o.at(0).get<Index>(), o.at(1).get<Index>()});
    auto& p = inst.problem;
    p.measurements.geometry = ScanGeometry(n, std::move(offsets));
    p.measurements.magnitudes = read_rimg(dir / side.at("measurements").get<std::string>());
    const auto& probe = side.at("probe");
    p.probe.support = real_to_mask(single(read_rimg(dir / probe.at("support").get<std::string>()), dir));
    p.probe.amplitude_cap = probe.at("amplitude_cap").get<double>();
    const auto& object = side.at("object");
    p.object.support = real_to_mask(single(read_rimg(dir / object.at("support").get<std::string>()), dir));
    p.object.amp_lo = object.at("amp_lo").get<double>();
    p.object.amp_hi = object.at("amp_hi").get<double>();
    p.floors.x = side.at("floors").at("x").get<double>();
    p.floors.y = side.at("floors").at("y").get<double>();
    inst.seed = side.value("seed", std::uint64_t{0});
    if (side.contains("noise_scale") && !side["noise_scale"].is_null()) inst.noise_scale = side["noise_scale"].get<double>();
    if (side.contains("truth")) {
      const auto probe_file = side["truth"].value("probe", std::string());
      const auto object_file = side["truth"].value("object", std::string());
      if (!probe_file.empty()) inst.true_probe = single(read_cimg(dir / probe_file), dir / probe_file);
      if (!object_file.empty()) inst.true_object = single(read_cimg(dir / object_file), dir / object_file);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("instance.json: " + std::string(e.what()));
  }
  inst.problem.validate();
  return inst;
}

}  // namespace ptycho::io

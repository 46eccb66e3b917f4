#include "ptycho/solvers.hpp"

#include "ptycho/simulate.hpp"

namespace ptycho {

namespace {

struct VariantName {
  Variant variant;
  const char* name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::phebie_whole, "phebie_whole"},
    {Variant::phebie_seq, "phebie_seq"},
    {Variant::phebie_parallel, "phebie_parallel"},
    {Variant::thibault_dm, "thibault_dm"},
    {Variant::maiden_rodenburg, "maiden_rodenburg"},
};

}  // namespace

std::string to_string(Variant v) {
  for (const auto& entry : kVariantNames)
    if (entry.variant == v) return entry.name;
  throw ParameterError("unknown variant");
}

Variant parse_variant(const std::string& name) {
  for (const auto& entry : kVariantNames)
    if (name == entry.name) return entry.variant;
  std::string known;
  for (const auto& entry : kVariantNames) known += std::string(known.empty() ? "" : ", ") + entry.name;
  throw ParameterError("unknown variant '" + name + "' (expected one of: " + known + ")");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants = {Variant::phebie_whole, Variant::phebie_seq, Variant::phebie_parallel,
                                                Variant::thibault_dm, Variant::maiden_rodenburg};
  return variants;
}

bool is_phebie(Variant v) {
  return v == Variant::phebie_whole || v == Variant::phebie_seq || v == Variant::phebie_parallel;
}

UpdateMode update_mode(Variant v) {
  switch (v) {
    case Variant::phebie_seq:
      return UpdateMode::sequential;
    case Variant::phebie_parallel:
      return UpdateMode::parallel;
    default:
      return UpdateMode::whole;
  }
}

std::vector<std::vector<Index>> make_blocks(Index side, Index block_rows, Index block_cols) {
  if (side <= 0) throw DimensionError("block tiling needs a positive side");
  if (block_rows < 1 || block_cols < 1) throw ParameterError("block shape must be positive");
  std::vector<std::vector<Index>> blocks;
  for (Index r0 = 0; r0 < side; r0 += block_rows)
    for (Index c0 = 0; c0 < side; c0 += block_cols) {
      std::vector<Index> block;
      for (Index r = r0; r < std::min(side, r0 + block_rows); ++r)
        for (Index c = c0; c < std::min(side, c0 + block_cols); ++c) block.push_back(r * side + c);
      blocks.push_back(std::move(block));
    }
  return blocks;
}

SolverStated initial_state(const ProblemInstanced& p, std::uint64_t seed) {
  p.validate();
  const Index n = p.side();
  const auto& geom = p.geometry();
  auto x0 = project_probe(ComplexImaged::Constant(n, 1.0), p.probe);
  auto y0 = random_object_init(n, p.object, seed);
  FrameStackd z0(static_cast<std::size_t>(geom.count()));
  parallel_for(geom.count(), [&](Index j) {
    const auto jj = static_cast<std::size_t>(j);
    z0[jj] = project_modulus(hadamard(shift(x0, j, geom), y0), p.measurements.magnitudes[jj]);
  });
  return make_state(p, std::move(x0), std::move(y0), std::move(z0));
}

RunResultd run(const ProblemInstanced& p, const SolverConfigd& c) { return run(p, c, initial_state(p, c.seed)); }

}  // namespace ptycho

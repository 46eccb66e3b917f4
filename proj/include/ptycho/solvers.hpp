#pragma once

// PHeBIE in whole-block, sequential sub-block and parallel per-pixel modes,
// the Thibault difference-map solver with its heuristic P_D, the
// Maiden-Rodenburg scheme, and the warm-up driver that records a trace.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptycho/metrics.hpp"
#include "ptycho/model.hpp"
#include "ptycho/parallel.hpp"
#include "ptycho/projections.hpp"

namespace ptycho {

enum class Variant { phebie_whole, phebie_seq, phebie_parallel, thibault_dm, maiden_rodenburg };

/// How the probe/object blocks are swept inside one PHeBIE half-step.
enum class UpdateMode { whole, sequential, parallel };

std::string to_string(Variant v);
/// Throws ParameterError on an unknown name.
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();
bool is_phebie(Variant v);
UpdateMode update_mode(Variant v);

template <typename Scalar>
struct SolverConfig {
  Variant variant = Variant::phebie_parallel;
  Scalar alpha = Scalar(1.1);
  Scalar beta = Scalar(1.1);
  /// Optional per-pixel alpha/beta; a block uses the largest value over its pixels.
  std::optional<RealImage<Scalar>> alpha_map;
  std::optional<RealImage<Scalar>> beta_map;
  Scalar gamma = Scalar(1e-30);
  /// Overrides the instance's Lipschitz floors when set.
  std::optional<LipschitzFloors<Scalar>> floors;
  int inner_rounds = 3;
  int warmup_iters = 10;
  int max_iters = 300;
  std::uint64_t seed = 0;
  /// Sub-block shape for the sequential mode.
  Index block_rows = 1;
  Index block_cols = 1;
  Scalar certificate_tol = Scalar(1e-9);
  /// Apply P_X / P_Y after each least-squares half-step of the heuristic P_D.
  bool dm_project_constraints = true;

  /// Defaults for a variant: alpha = beta = 2 for Maiden-Rodenburg, 1.1 otherwise.
  static SolverConfig defaults(Variant v) {
    SolverConfig c;
    c.variant = v;
    if (v == Variant::maiden_rodenburg) c.alpha = c.beta = Scalar(2);
    return c;
  }

  Scalar min_alpha() const { return alpha_map ? std::min(alpha, alpha_map->array().minCoeff()) : alpha; }
  Scalar min_beta() const { return beta_map ? std::min(beta, beta_map->array().minCoeff()) : beta; }

  void validate() const {
    const Scalar lower = variant == Variant::maiden_rodenburg ? Scalar(2) : Scalar(1);
    const bool strict = variant != Variant::maiden_rodenburg;
    auto ok = [&](Scalar v) { return std::isfinite(v) && (strict ? v > lower : v >= lower); };
    auto map_ok = [&](const std::optional<RealImage<Scalar>>& m) {
      if (!m) return true;
      for (Index i = 0; i < m->size(); ++i)
        if (!ok((*m)[i])) return false;
      return true;
    };
    const std::string bound = strict ? "> 1" : ">= 2";
    if (!ok(alpha) || !map_ok(alpha_map)) throw ParameterError("alpha must be " + bound + " for " + to_string(variant));
    if (!ok(beta) || !map_ok(beta_map)) throw ParameterError("beta must be " + bound + " for " + to_string(variant));
    if (!(gamma > 0)) throw ParameterError("gamma must be positive");
    if (floors && (!(floors->x > 0) || !(floors->y > 0))) throw ParameterError("Lipschitz floors must be positive");
    if (inner_rounds < 1) throw ParameterError("inner_rounds must be >= 1");
    if (warmup_iters < 0 || max_iters < 0) throw ParameterError("iteration counts must be nonnegative");
    if (block_rows < 1 || block_cols < 1) throw ParameterError("block shape must be positive");
    if (!(certificate_tol >= 0)) throw ParameterError("certificate tolerance must be nonnegative");
  }
};

using SolverConfigd = SolverConfig<double>;

template <typename Scalar>
struct SolverState {
  ComplexImage<Scalar> x;
  ComplexImage<Scalar> y;
  FrameStack<Scalar> z;
  long k = 0;
  Scalar F_curr = 0;
  Scalar last_step_sq = 0;
};

using SolverStated = SolverState<double>;

/// Cyclic frame schedule I(k) = k mod m; every frame recurs infinitely often.
struct IndexSchedule {
  Index frames = 1;
  Index at(long k) const { return static_cast<Index>(k % static_cast<long>(frames)); }
};

template <typename Scalar>
LipschitzFloors<Scalar> effective_floors(const ProblemInstance<Scalar>& p, const SolverConfig<Scalar>& c) {
  return c.floors ? *c.floors : p.floors;
}

/// lambda^- = 1/2 min{(alpha - 1) eta_x, (beta - 1) eta_y, gamma}.
template <typename Scalar>
Scalar lambda_minus(const ProblemInstance<Scalar>& p, const SolverConfig<Scalar>& c) {
  const auto f = effective_floors(p, c);
  return Scalar(0.5) * std::min({(c.min_alpha() - 1) * f.x, (c.min_beta() - 1) * f.y, c.gamma});
}

/// Row-major tiling of the N x N grid into block_rows x block_cols rectangles
/// (edge blocks may be smaller). Pixels inside a block are listed row-major.
std::vector<std::vector<Index>> make_blocks(Index side, Index block_rows, Index block_cols);

template <typename Scalar>
SolverState<Scalar> make_state(const ProblemInstance<Scalar>& p, ComplexImage<Scalar> x, ComplexImage<Scalar> y,
                               FrameStack<Scalar> z) {
  SolverState<Scalar> s{std::move(x), std::move(y), std::move(z), 0, 0, 0};
  s.F_curr = objective(s.x, s.y, s.z, p.geometry());
  return s;
}

namespace detail {

/// One projected-gradient half-step v_i <- P_i(v_i - g_i / t_i) over all
/// pixels. Returns the applied step scalars t.
template <typename Scalar, typename Grad, typename Project>
RealImage<Scalar> projected_gradient_step(ComplexImage<Scalar>& v, const RealImage<Scalar>& moduli, Scalar floor,
                                          Scalar param, const std::optional<RealImage<Scalar>>& param_map,
                                          UpdateMode mode, const std::vector<std::vector<Index>>& blocks,
                                          Grad&& grad, Project&& project) {
  const Index n = v.size();
  RealImage<Scalar> t(v.side());
  auto param_at = [&](Index i) { return param_map ? (*param_map)[i] : param; };

  if (mode == UpdateMode::sequential) {
    std::vector<std::complex<Scalar>> g;
    for (const auto& block : blocks) {
      const Scalar lb = std::max(lipschitz_block(moduli, std::span<const Index>(block)), floor);
      Scalar pb = param_at(block.front());
      for (Index i : block) pb = std::max(pb, param_at(i));
      g.resize(block.size());
      for (std::size_t q = 0; q < block.size(); ++q) g[q] = grad(v, block[q]);
      for (std::size_t q = 0; q < block.size(); ++q) {
        const Index i = block[q];
        t[i] = pb * lb;
        v[i] = project(v[i] - g[q] / t[i], i);
      }
    }
    return t;
  }

  const Scalar global = std::max(moduli.array().maxCoeff(), floor);
  ComplexImage<Scalar> g(v.side());
  parallel_for(n, [&](Index i) {
    g[i] = grad(v, i);
    t[i] = param_at(i) * (mode == UpdateMode::whole ? global : std::max(moduli[i], floor));
  });
  for (Index i = 0; i < n; ++i) v[i] = project(v[i] - g[i] / t[i], i);
  return t;
}

template <typename Scalar>
struct HalfStep {
  ComplexImage<Scalar> value;
  RealImage<Scalar> scalars;
};

template <typename Scalar>
HalfStep<Scalar> x_half_step(const SolverState<Scalar>& s, const ProblemInstance<Scalar>& p,
                             const SolverConfig<Scalar>& c, UpdateMode mode) {
  const auto& geom = p.geometry();
  detail::check_operands(s.x, s.y, s.z, geom);
  HalfStep<Scalar> out{s.x, {}};
  const auto blocks = mode == UpdateMode::sequential ? make_blocks(s.x.side(), c.block_rows, c.block_cols)
                                                     : std::vector<std::vector<Index>>{};
  out.scalars = projected_gradient_step(
      out.value, lipschitz_x_pixel(s.y, geom), effective_floors(p, c).x, c.alpha, c.alpha_map, mode, blocks,
      [&](const ComplexImage<Scalar>& xv, Index i) { return grad_x_pixel(xv, s.y, s.z, geom, i); },
      [&](const std::complex<Scalar>& w, Index i) { return project_probe_pixel(w, i, p.probe); });
  return out;
}

template <typename Scalar>
HalfStep<Scalar> y_half_step(const SolverState<Scalar>& s, const ProblemInstance<Scalar>& p,
                             const SolverConfig<Scalar>& c, UpdateMode mode) {
  const auto& geom = p.geometry();
  detail::check_operands(s.x, s.y, s.z, geom);
  HalfStep<Scalar> out{s.y, {}};
  const auto blocks = mode == UpdateMode::sequential ? make_blocks(s.x.side(), c.block_rows, c.block_cols)
                                                     : std::vector<std::vector<Index>>{};
  out.scalars = projected_gradient_step(
      out.value, lipschitz_y_pixel(s.x, geom), effective_floors(p, c).y, c.beta, c.beta_map, mode, blocks,
      [&](const ComplexImage<Scalar>& yv, Index i) { return grad_y_pixel(s.x, yv, s.z, geom, i); },
      [&](const std::complex<Scalar>& w, Index i) { return project_object_pixel(w, i, p.object); });
  return out;
}

template <typename Scalar>
void require_finite(const SolverState<Scalar>& s) {
  bool ok = s.x.allFinite() && s.y.allFinite();
  for (const auto& zj : s.z) ok = ok && zj.allFinite();
  if (!ok) throw NumericalError("non-finite value in iterate");
}

}  // namespace detail

/// x^{k+1} = P_X(x - (1/t) grad_x F) with t = alpha max(L', eta_x) per the mode.
template <typename Scalar>
ComplexImage<Scalar> phebie_x_update(const SolverState<Scalar>& s, const ProblemInstance<Scalar>& p,
                                     const SolverConfig<Scalar>& c, UpdateMode mode) {
  return detail::x_half_step(s, p, c, mode).value;
}

/// y^{k+1} = P_Y(y - (1/t) grad_y F), evaluated at the state's (already updated) x.
template <typename Scalar>
ComplexImage<Scalar> phebie_y_update(const SolverState<Scalar>& s, const ProblemInstance<Scalar>& p,
                                     const SolverConfig<Scalar>& c, UpdateMode mode) {
  return detail::y_half_step(s, p, c, mode).value;
}

/// Full iteration together with the applied step scalars (tx is zero when the x-step is skipped).
template <typename Scalar>
struct PhebieStep {
  SolverState<Scalar> state;
  RealImage<Scalar> tx;
  RealImage<Scalar> ty;
};

template <typename Scalar>
PhebieStep<Scalar> phebie_step(const SolverState<Scalar>& s, const ProblemInstance<Scalar>& p,
                               const SolverConfig<Scalar>& c, UpdateMode mode, bool update_x = true) {
  PhebieStep<Scalar> out{s, RealImage<Scalar>(s.x.side()), {}};
  if (update_x) {
    auto hx = detail::x_half_step(s, p, c, mode);
    out.state.x = std::move(hx.value);
    out.tx = std::move(hx.scalars);
  }
  auto hy = detail::y_half_step(out.state, p, c, mode);
  out.state.y = std::move(hy.value);
  out.ty = std::move(hy.scalars);
  out.state.z = z_update(out.state.x, out.state.y, s.z, p.measurements, c.gamma);
  out.state.k = s.k + 1;
  out.state.F_curr = objective(out.state.x, out.state.y, out.state.z, p.geometry());
  return out;
}

template <typename Scalar>
SolverState<Scalar> phebie_iteration(const SolverState<Scalar>& s, const ProblemInstance<Scalar>& p,
                                     const SolverConfig<Scalar>& c, bool update_x = true) {
  return phebie_step(s, p, c, update_mode(c.variant), update_x).state;
}

template <typename Scalar>
struct PdResult {
  ComplexImage<Scalar> x;
  ComplexImage<Scalar> y;
  FrameStack<Scalar> v;
};

/// Lambda rounds of exact blockwise least squares on sum_j ||S_j(x) . y - z_j||^2,
/// each round updating x then y from the fresh x. Pixels whose denominator is
/// below 1e-12 keep their value. When constraints are given each half-step is
/// projected, which keeps it the exact constrained minimizer per pixel.
template <typename Scalar>
PdResult<Scalar> heuristic_pd(const ComplexImage<Scalar>& x, const ComplexImage<Scalar>& y, const FrameStack<Scalar>& z,
                              const ScanGeometry& geom, int rounds, const ProbeConstraint<Scalar>* probe_c = nullptr,
                              const ObjectConstraint<Scalar>* object_c = nullptr, bool update_x = true) {
  if (rounds < 1) throw ParameterError("heuristic P_D needs at least one round");
  detail::check_operands(x, y, z, geom);
  const Scalar cutoff = Scalar(1e-12);
  const Index side = x.side();
  PdResult<Scalar> out{x, y, {}};
  for (int round = 0; round < rounds; ++round) {
    if (update_x) {
      const auto den = probe_illumination(out.y, geom);
      const auto ybar = conj(out.y);
      ComplexImage<Scalar> num(side);
      for (Index j = 0; j < geom.count(); ++j)
        num.array() += shift_adjoint(hadamard(ybar, z[static_cast<std::size_t>(j)]), j, geom).array();
      for (Index i = 0; i < out.x.size(); ++i) {
        if (den[i] < cutoff) continue;
        const auto w = num[i] / den[i];
        out.x[i] = probe_c ? project_probe_pixel(w, i, *probe_c) : w;
      }
    }
    const auto den = object_illumination(out.x, geom);
    const auto xbar = conj(out.x);
    ComplexImage<Scalar> num(side);
    for (Index j = 0; j < geom.count(); ++j)
      num.array() += shift(xbar, j, geom).array() * z[static_cast<std::size_t>(j)].array();
    for (Index i = 0; i < out.y.size(); ++i) {
      if (den[i] < cutoff) continue;
      const auto w = num[i] / den[i];
      out.y[i] = object_c ? project_object_pixel(w, i, *object_c) : w;
    }
  }
  out.v.resize(z.size());
  for (Index j = 0; j < geom.count(); ++j) out.v[static_cast<std::size_t>(j)] = hadamard(shift(out.x, j, geom), out.y);
  return out;
}

/// Difference-map step: v = P_D(z), z <- z + P_Z(2v - z) - v. The returned state
/// carries the shadow pair (x', y') and F(x', y', z^{k+1}).
template <typename Scalar>
SolverState<Scalar> dm_iteration(const SolverState<Scalar>& s, const ProblemInstance<Scalar>& p,
                                 const SolverConfig<Scalar>& c, bool update_x = true) {
  const auto& geom = p.geometry();
  const bool proj = c.dm_project_constraints;
  auto pd = heuristic_pd(s.x, s.y, s.z, geom, c.inner_rounds, proj ? &p.probe : nullptr,
                         proj ? &p.object : nullptr, update_x);
  SolverState<Scalar> out;
  out.x = std::move(pd.x);
  out.y = std::move(pd.y);
  out.z.resize(s.z.size());
  parallel_for(geom.count(), [&](Index j) {
    const auto jj = static_cast<std::size_t>(j);
    const auto& v = pd.v[jj];
    ComplexImage<Scalar> reflect(v.side(), (Scalar(2) * v.array() - s.z[jj].array()).eval());
    const auto zhat = project_modulus(reflect, p.measurements.magnitudes[jj]);
    out.z[jj] = ComplexImage<Scalar>(v.side(), (s.z[jj].array() + zhat.array() - v.array()).eval());
  });
  out.k = s.k + 1;
  out.F_curr = objective(out.x, out.y, out.z, geom);
  return out;
}

/// Maiden-Rodenburg step as printed: the active exit wave z_{I(k)} stands in for
/// every frame in the gradients, x and y both step from (x^k, y^k) with sup-norm
/// moduli, then only frame I(k+1) is re-projected.
template <typename Scalar>
SolverState<Scalar> mr_iteration(const SolverState<Scalar>& s, const ProblemInstance<Scalar>& p,
                                 const SolverConfig<Scalar>& c, const IndexSchedule& schedule, bool update_x = true) {
  const auto& geom = p.geometry();
  detail::check_operands(s.x, s.y, s.z, geom);
  if (schedule.frames != geom.count()) throw ParameterError("schedule frame count differs from geometry");
  const auto floors = effective_floors(p, c);
  const FrameStack<Scalar> active(s.z.size(), s.z[static_cast<std::size_t>(schedule.at(s.k))]);

  SolverState<Scalar> out = s;
  if (update_x) {
    const Scalar t = c.alpha * std::max(lipschitz_x_global(s.y, geom), floors.x);
    const auto g = grad_x(s.x, s.y, active, geom);
    out.x = project_probe(ComplexImage<Scalar>(s.x.side(), (s.x.array() - g.array() / t).eval()), p.probe);
  }
  const Scalar t = c.beta * std::max(lipschitz_y_global(s.x, geom), floors.y);
  const auto g = grad_y(s.x, s.y, active, geom);
  out.y = project_object(ComplexImage<Scalar>(s.y.side(), (s.y.array() - g.array() / t).eval()), p.object);

  const Index next = schedule.at(s.k + 1);
  out.z[static_cast<std::size_t>(next)] =
      project_modulus(hadamard(shift(out.x, next, geom), out.y), p.measurements.magnitudes[static_cast<std::size_t>(next)]);
  out.k = s.k + 1;
  out.F_curr = objective(out.x, out.y, out.z, geom);
  return out;
}

template <typename Scalar>
Scalar state_distance_sq(const SolverState<Scalar>& a, const SolverState<Scalar>& b) {
  Scalar d = squared_distance(a.x, b.x) + squared_distance(a.y, b.y);
  for (std::size_t j = 0; j < a.z.size(); ++j) d += squared_distance(a.z[j], b.z[j]);
  return d;
}

/// ||A^k|| / ||u^k - u^{k-1}|| with A^k the subgradient-path vector built from
/// the step scalars of the iteration u^{k-1} -> u^k.
template <typename Scalar>
Scalar path_ratio(const SolverState<Scalar>& prev, const PhebieStep<Scalar>& step, const ScanGeometry& geom,
                  Scalar gamma) {
  const auto& cur = step.state;
  const Scalar du = std::sqrt(state_distance_sq(prev, cur));
  if (du == Scalar(0)) return Scalar(0);
  const auto gx_new = grad_x(cur.x, cur.y, cur.z, geom);
  const auto gx_old = grad_x(prev.x, prev.y, prev.z, geom);
  const auto gy_new = grad_y(cur.x, cur.y, cur.z, geom);
  const auto gy_mid = grad_y(cur.x, prev.y, prev.z, geom);
  Scalar a2 = (step.tx.array() * (prev.x.array() - cur.x.array()) + gx_new.array() - gx_old.array()).abs2().sum();
  a2 += (step.ty.array() * (prev.y.array() - cur.y.array()) + gy_new.array() - gy_mid.array()).abs2().sum();
  for (std::size_t j = 0; j < cur.z.size(); ++j) a2 += gamma * gamma * squared_distance(prev.z[j], cur.z[j]);
  return std::sqrt(a2) / du;
}

/// Thrown when an iterate stops being finite; carries the trace up to that point.
class SolverAbort : public NumericalError {
 public:
  SolverAbort(const std::string& what, std::vector<IterationTrace> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<IterationTrace>& trace() const { return trace_; }

 private:
  std::vector<IterationTrace> trace_;
};

template <typename Scalar>
struct RunResult {
  SolverState<Scalar> state;
  std::vector<IterationTrace> trace;
  std::vector<std::string> warnings;
  Scalar lambda_minus = 0;
};

using RunResultd = RunResult<double>;

/// Warm-up (x-step skipped) for cfg.warmup_iters iterations, then cfg.max_iters
/// full iterations. Row 0 of the trace is the starting point.
template <typename Scalar>
RunResult<Scalar> run(const ProblemInstance<Scalar>& p, const SolverConfig<Scalar>& c, SolverState<Scalar> start) {
  p.validate();
  c.validate();
  const auto& geom = p.geometry();
  detail::check_operands(start.x, start.y, start.z, geom);
  detail::require_finite(start);

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };

  RunResult<Scalar> result;
  result.lambda_minus = lambda_minus(p, c);
  const bool phebie = is_phebie(c.variant);
  const UpdateMode mode = update_mode(c.variant);
  const IndexSchedule schedule{geom.count()};

  start.k = 0;
  start.F_curr = objective(start.x, start.y, start.z, geom);
  start.last_step_sq = 0;
  result.trace.push_back({0, double(start.F_curr), 0.0, 0.0, double(r_factor(start.x, start.y, geom, p.measurements)),
                          elapsed_ms(), 0.0, c.warmup_iters > 0});

  SolverState<Scalar> state = std::move(start);
  const long total = long(c.warmup_iters) + long(c.max_iters);
  for (long k = 1; k <= total; ++k) {
    const bool warm = k <= c.warmup_iters;
    Scalar ratio = std::numeric_limits<Scalar>::quiet_NaN();
    SolverState<Scalar> next;
    if (phebie) {
      auto step = phebie_step(state, p, c, mode, !warm);
      ratio = path_ratio(state, step, geom, c.gamma);
      next = std::move(step.state);
    } else if (c.variant == Variant::thibault_dm) {
      next = dm_iteration(state, p, c, !warm);
    } else {
      next = mr_iteration(state, p, c, schedule, !warm);
    }
    IterationTrace row;
    row.k = k;
    row.warmup = warm;
    row.path_ratio = double(ratio);
    try {
      detail::require_finite(next);
    } catch (const NumericalError& e) {
      row.F = std::numeric_limits<double>::quiet_NaN();
      row.elapsed_ms = elapsed_ms();
      result.trace.push_back(row);
      throw SolverAbort(std::string(e.what()) + " at iteration " + std::to_string(k), result.trace);
    }
    next.k = k;
    next.last_step_sq = state_distance_sq(state, next);
    row.F = double(next.F_curr);
    row.step_sq = double(next.last_step_sq);
    row.decrease_slack = double(state.F_curr - result.lambda_minus * next.last_step_sq - next.F_curr);
    row.r_factor = double(r_factor(next.x, next.y, geom, p.measurements));
    row.elapsed_ms = elapsed_ms();
    const Scalar allowance = c.certificate_tol * (1 + std::abs(state.F_curr));
    if (phebie && row.decrease_slack < -double(allowance))
      result.warnings.push_back("sufficient-decrease certificate violated at iteration " + std::to_string(k) +
                                " (slack " + std::to_string(row.decrease_slack) + ")");
    result.trace.push_back(row);
    state = std::move(next);
  }
  result.state = std::move(state);
  return result;
}

/// Default starting point: x0 = P_X(1), y0 = random feasible object, z0_j = P_{Z_j}(S_j x0 . y0).
SolverStated initial_state(const ProblemInstanced& p, std::uint64_t seed);

/// run() from initial_state(p, c.seed).
RunResultd run(const ProblemInstanced& p, const SolverConfigd& c);

}  // namespace ptycho

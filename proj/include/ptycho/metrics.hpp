#pragma once

// Reconstruction quality and convergence-certificate diagnostics: data
// R-factor, registered RMS error, certificate checks over a trace, and
// mean/worst aggregation over trials.

#include <cmath>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ptycho/model.hpp"
#include "ptycho/parallel.hpp"

namespace ptycho {

/// sum_j || b_j - |F(S_j(x) . y)| ||_1 / sum_j ||b_j||_1.
template <typename Scalar>
Scalar r_factor(const ComplexImage<Scalar>& x, const ComplexImage<Scalar>& y, const ScanGeometry& geom,
                const MeasurementSet<Scalar>& meas) {
  require_same_side(x, y);
  if (meas.count() != geom.count()) throw DimensionError("measurement count differs from geometry");
  if (x.side() != geom.side()) throw DimensionError("field side differs from scan geometry");
  std::vector<Scalar> num(static_cast<std::size_t>(geom.count()));
  parallel_for(geom.count(), [&](Index j) {
    const auto& b = meas.magnitudes[static_cast<std::size_t>(j)];
    const auto model = fft2(hadamard(shift(x, j, geom), y));
    num[static_cast<std::size_t>(j)] = (b.array() - model.array().abs()).abs().sum();
  });
  Scalar numerator = 0, denominator = 0;
  for (Index j = 0; j < geom.count(); ++j) {
    numerator += num[static_cast<std::size_t>(j)];
    denominator += meas.magnitudes[static_cast<std::size_t>(j)].array().sum();
  }
  if (!(denominator > 0)) throw ParameterError("R-factor undefined for all-zero measurements");
  return numerator / denominator;
}

/// Circular cross-correlation c(s) = sum_p t(p) conj(e(p - s)), for every shift s.
template <typename Scalar>
ComplexImage<Scalar> cross_correlation(const ComplexImage<Scalar>& est, const ComplexImage<Scalar>& truth) {
  require_same_side(est, truth);
  const auto ft = fft2(truth);
  const auto fe = fft2(est);
  auto cc = ifft2(ComplexImage<Scalar>(truth.side(), (ft.array() * fe.array().conjugate()).eval()));
  cc.array() *= static_cast<Scalar>(truth.side());
  return cc;
}

/// min over integer cyclic shifts s and complex scales c of ||c T_s(est) - truth|| / ||truth||.
template <typename Scalar>
Scalar rms_error_registered(const ComplexImage<Scalar>& est, const ComplexImage<Scalar>& truth) {
  require_same_side(est, truth);
  const Scalar tt = squared_norm(truth);
  if (!(tt > 0)) throw ParameterError("registered error undefined for zero truth");
  const Scalar ee = squared_norm(est);
  if (!(ee > 0)) return Scalar(1);
  const Scalar peak = cross_correlation(est, truth).array().abs().maxCoeff();
  const Scalar residual = std::max(Scalar(0), tt - peak * peak / ee);
  return std::sqrt(residual / tt);
}

/// Per-iteration record. k = 0 holds the starting point.
struct IterationTrace {
  long k = 0;
  double F = 0;
  double step_sq = 0;
  double decrease_slack = 0;
  double r_factor = 0;
  double elapsed_ms = 0;
  double path_ratio = std::numeric_limits<double>::quiet_NaN();
  bool warmup = false;
};

struct CertificateReport {
  std::size_t iterations = 0;
  std::size_t monotonicity_violations = 0;
  std::vector<long> violating_iterations;
  double min_slack = 0;
  double max_slack = 0;
  double rate_bound = 0;         // (F(u^1) - F(u^{N+1})) / (N lambda_minus)
  double min_step_sq = 0;        // min_{k <= N} ||s^{k+1}||^2
  bool rate_bound_holds = true;
  double max_path_ratio = std::numeric_limits<double>::quiet_NaN();
  bool path_ratio_finite = true;

  bool passed() const { return monotonicity_violations == 0 && rate_bound_holds && path_ratio_finite; }
};

/// Checks F_k <= F_{k-1} - lambda_minus ||step_k||^2 + tol (1 + |F_{k-1}|) on every row
/// after the first, and the asymptotic-regularity rate bound over the rows
/// past the warm-up.
CertificateReport certificate_report(const std::vector<IterationTrace>& trace, double lambda_minus,
                                     double tol = 1e-9, long warmup_iters = 0);

std::string format_certificate(const CertificateReport& report);

/// One row of the benchmark tables: final objective, last step, RMS errors,
/// R-factor and wall time.
struct RunSummary {
  double F = 0;
  double step_sq = 0;
  double rms_object = 0;
  double rms_probe = 0;
  double r_factor = 0;
  double time_s = 0;
};

struct AggregateRow {
  std::string variant;
  std::size_t trials = 0;
  RunSummary mean;
  RunSummary worst;
};

/// Mean and worst (largest) value of every column.
AggregateRow aggregate(const std::string& variant, const std::vector<RunSummary>& runs);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_aggregate_text(std::ostream& out, const std::vector<AggregateRow>& rows);

}  // namespace ptycho

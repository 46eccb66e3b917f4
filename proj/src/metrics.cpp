#include "ptycho/metrics.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace ptycho {

CertificateReport certificate_report(const std::vector<IterationTrace>& trace, double lambda_minus, double tol,
                                     long warmup_iters) {
  if (!(lambda_minus >= 0)) throw ParameterError("lambda_minus must be nonnegative");
  CertificateReport rep;
  if (trace.empty()) return rep;
  rep.iterations = trace.size() - 1;
  rep.min_slack = rep.max_slack = 0;
  bool first = true;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const double f_prev = trace[k - 1].F;
    const double slack = f_prev - lambda_minus * trace[k].step_sq - trace[k].F;
    if (!(slack >= -tol * (1 + std::abs(f_prev)))) {
      ++rep.monotonicity_violations;
      rep.violating_iterations.push_back(trace[k].k);
    }
    rep.min_slack = first ? slack : std::min(rep.min_slack, slack);
    rep.max_slack = first ? slack : std::max(rep.max_slack, slack);
    first = false;
    const double ratio = trace[k].path_ratio;
    if (!std::isnan(ratio)) {
      if (!std::isfinite(ratio)) rep.path_ratio_finite = false;
      rep.max_path_ratio = std::isnan(rep.max_path_ratio) ? ratio : std::max(rep.max_path_ratio, ratio);
    }
  }

  // Rows past the warm-up: u^1 is the last warm-up row, u^{N+1} the final row.
  const std::size_t start = std::min<std::size_t>(static_cast<std::size_t>(std::max(0L, warmup_iters)), trace.size() - 1);
  const std::size_t steps = trace.size() - 1 - start;
  if (steps > 0) {
    const double f1 = trace[start].F;
    const double fend = trace.back().F;
    rep.min_step_sq = trace[start + 1].step_sq;
    for (std::size_t k = start + 1; k < trace.size(); ++k) rep.min_step_sq = std::min(rep.min_step_sq, trace[k].step_sq);
    const double n = double(steps);
    rep.rate_bound = lambda_minus > 0 ? (f1 - fend) / (n * lambda_minus) : std::numeric_limits<double>::infinity();
    rep.rate_bound_holds = rep.min_step_sq * n * lambda_minus <= (f1 - fend) + tol * (1 + std::abs(f1));
  }
  return rep;
}

std::string format_certificate(const CertificateReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << "iterations               " << r.iterations << "\n"
      << "decrease violations      " << r.monotonicity_violations << "\n"
      << "min decrease slack       " << r.min_slack << "\n"
      << "max decrease slack       " << r.max_slack << "\n"
      << "min step^2               " << r.min_step_sq << "\n"
      << "rate bound               " << r.rate_bound << "\n"
      << "rate bound holds         " << (r.rate_bound_holds ? "yes" : "no") << "\n"
      << "max path ratio           " << r.max_path_ratio << "\n"
      << "path ratio finite        " << (r.path_ratio_finite ? "yes" : "no") << "\n"
      << "certificates             " << (r.passed() ? "pass" : "FAIL") << "\n";
  return out.str();
}

AggregateRow aggregate(const std::string& variant, const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw ParameterError("aggregate needs at least one run");
  AggregateRow row{variant, runs.size(), {}, runs.front()};
  auto fields = [](RunSummary& s) {
    return std::array<double*, 6>{&s.F, &s.step_sq, &s.rms_object, &s.rms_probe, &s.r_factor, &s.time_s};
  };
  auto mean = fields(row.mean);
  auto worst = fields(row.worst);
  for (auto run : runs) {
    auto v = fields(run);
    for (std::size_t c = 0; c < v.size(); ++c) {
      *mean[c] += *v[c];
      *worst[c] = std::max(*worst[c], *v[c]);
    }
  }
  for (double* m : mean) *m /= double(runs.size());
  return row;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "variant,trials,stat,F,step_sq,rms_object,rms_probe,r_factor,time_s\n";
  for (const auto& r : rows)
    for (const auto& [stat, s] : {std::pair{"mean", r.mean}, std::pair{"worst", r.worst}})
      out << r.variant << ',' << r.trials << ',' << stat << ',' << exact(s.F) << ',' << exact(s.step_sq) << ','
          << exact(s.rms_object) << ',' << exact(s.rms_probe) << ',' << exact(s.r_factor) << ',' << exact(s.time_s)
          << '\n';
}

void write_aggregate_text(std::ostream& out, const std::vector<AggregateRow>& rows) {
  // Average (worst) per column.
  const char* head[] = {"variant", "F(u^K)", "||u^K-u^K-1||^2", "RMS-object", "RMS-probe", "R-factor", "time [s]"};
  std::vector<std::vector<std::string>> cells = {{std::begin(head), std::end(head)}};
  for (const auto& r : rows) {
    auto cell = [](double m, double w) { return num(m) + " (" + num(w) + ")"; };
    cells.push_back({r.variant, cell(r.mean.F, r.worst.F), cell(r.mean.step_sq, r.worst.step_sq),
                     cell(r.mean.rms_object, r.worst.rms_object), cell(r.mean.rms_probe, r.worst.rms_probe),
                     cell(r.mean.r_factor, r.worst.r_factor), cell(r.mean.time_s, r.worst.time_s)});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c];
      if (c + 1 < row.size()) out << std::string(width[c] - row[c].size() + 2, ' ');
    }
    out << '\n';
  }
}

}  // namespace ptycho

#include "nonlocal_flow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nonlocal_flow/compensated_sum.hpp"
#include "nonlocal_flow/dynamics.hpp"
#include "nonlocal_flow/errors.hpp"

namespace nonlocal_flow {

MonotoneReport check_monotone(std::span<const double> values, double slack) {
  MonotoneReport r;
  if (values.size() < 2) return r;
  r.worst_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    const double rise = values[k + 1] - values[k];
    if (rise > r.worst_violation) {
      r.worst_violation = rise;
      r.worst_index = k;
    }
    if (!(values[k + 1] <= values[k] + slack)) r.ok = false;
  }
  return r;
}

LimitEstimate estimate_limits(const TrajectoryRecord& record) {
  if (record.size() < 10) {
    throw std::invalid_argument("estimate_limits needs at least 10 samples");
  }
  const double t_first = record.times.front();
  const double t_last = record.times.back();
  const double window_start = t_last - 0.1 * (t_last - t_first);

  double g_lo = std::numeric_limits<double>::infinity(), g_hi = -g_lo;
  double f_lo = g_lo, f_hi = g_hi;
  LambdaParts last;
  for (std::size_t k = 0; k < record.size(); ++k) {
    if (record.times[k] < window_start) continue;
    const auto& s = record.snapshots[k];
    last = lambda_parts(s.values(), s.weights());
    g_lo = std::min(g_lo, last.denominator);
    g_hi = std::max(g_hi, last.denominator);
    f_lo = std::min(f_lo, last.numerator);
    f_hi = std::max(f_hi, last.numerator);
  }
  return {last.denominator, last.numerator,
          (g_hi - g_lo) < 1e-8 && (f_hi - f_lo) < 1e-8};
}

std::string to_string(OmegaKind k) {
  switch (k) {
    case OmegaKind::H1Step:
      return "H1Step";
    case OmegaKind::H3Step:
      return "H3Step";
    case OmegaKind::H2Partial:
      return "H2Partial";
  }
  return "?";
}

std::optional<double> OmegaPrediction::level_for(double initial_value) const {
  switch (kind) {
    case OmegaKind::H1Step:
      return initial_value == 1.0 ? 1.0 : *lambda_infinity;
    case OmegaKind::H3Step:
      return initial_value == 0.0 ? 0.0 : *lambda_infinity;
    case OmegaKind::H2Partial:
      if (initial_value == 0.0 || initial_value == 1.0) return initial_value;
      return std::nullopt;
  }
  return std::nullopt;
}

OmegaPrediction predict_omega_limit(const Ensemble& e0,
                                    const HypothesisClass& hyp) {
  const auto v = e0.values();
  const auto w = e0.weights();
  auto measure_where = [&](auto&& pred) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (pred(v[i])) acc += w[i];
    }
    return acc.value();
  };
  const double total = mass(e0);

  OmegaPrediction p;
  switch (hyp.tag) {
    case Hypothesis::H1: {
      const double at_one = measure_where([](double x) { return x == 1.0; });
      const double above = measure_where([](double x) { return x > 1.0; });
      if (!(above > 0.0)) throw DegenerateSupport("|{u0 > 1}| = 0 under H1");
      p.kind = OmegaKind::H1Step;
      p.lambda_infinity = (total - at_one) / above;
      if (at_one > 0.0) p.pieces.push_back({1.0, at_one});
      p.pieces.push_back({*p.lambda_infinity, above});
      break;
    }
    case Hypothesis::H3: {
      const double below = measure_where([](double x) { return x < 0.0; });
      const double at_zero = measure_where([](double x) { return x == 0.0; });
      if (!(below > 0.0)) throw DegenerateSupport("|{u0 < 0}| = 0 under H3");
      p.kind = OmegaKind::H3Step;
      p.lambda_infinity = total / below;
      p.pieces.push_back({*p.lambda_infinity, below});
      if (at_zero > 0.0) p.pieces.push_back({0.0, at_zero});
      break;
    }
    case Hypothesis::H2: {
      p.kind = OmegaKind::H2Partial;
      const double at_zero = measure_where([](double x) { return x == 0.0; });
      const double at_one = measure_where([](double x) { return x == 1.0; });
      if (at_zero > 0.0) p.pieces.push_back({0.0, at_zero});
      if (at_one > 0.0) p.pieces.push_back({1.0, at_one});
      break;
    }
  }
  return p;
}

std::string to_string(Bucket b) {
  switch (b) {
    case Bucket::Zero:
      return "Zero";
    case Bucket::One:
      return "One";
    case Bucket::LambdaInf:
      return "LambdaInf";
    case Bucket::Ambiguous:
      return "Ambiguous";
  }
  return "?";
}

std::vector<Bucket> classify_terminal(const Ensemble& final_state,
                                      std::optional<double> lambda_inf,
                                      double tol) {
  std::vector<Bucket> out;
  out.reserve(final_state.size());
  for (double y : final_state.values()) {
    Bucket pick = Bucket::Ambiguous;
    int hits = 0;
    if (std::abs(y) <= tol) {
      pick = Bucket::Zero;
      ++hits;
    }
    if (std::abs(y - 1.0) <= tol) {
      pick = Bucket::One;
      ++hits;
    }
    if (lambda_inf && std::abs(y - *lambda_inf) <= tol) {
      pick = Bucket::LambdaInf;
      ++hits;
    }
    out.push_back(hits == 1 ? pick : Bucket::Ambiguous);
  }
  return out;
}

UniquenessReport check_h2_uniqueness(const Ensemble& e0,
                                     std::span<const Bucket> buckets,
                                     double lambda_inf) {
  if (!(lambda_inf > 0.0 && lambda_inf < 1.0)) {
    throw std::invalid_argument("check_h2_uniqueness needs lambda_inf in (0, 1)");
  }
  if (buckets.size() != e0.size()) {
    throw std::invalid_argument("bucket list does not match atom count");
  }
  std::vector<double> initial;
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets[i] == Bucket::LambdaInf) initial.push_back(e0.values()[i]);
  }
  std::sort(initial.begin(), initial.end());
  initial.erase(std::unique(initial.begin(), initial.end()), initial.end());
  UniquenessReport r;
  r.ok = initial.size() <= 1;
  if (!r.ok) r.offending_values = std::move(initial);
  return r;
}

SandwichReport sandwich_check(const ScalarTrajectory& y,
                              std::span<const double> lambda_series,
                              double eps) {
  if (y.times.empty() || lambda_series.size() != y.times.size()) {
    throw std::invalid_argument("sandwich_check needs aligned, non-empty series");
  }
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");

  const double lambda_end = lambda_series.back();
  // Walk backwards to the first index of the settled tail. The last sample
  // matches itself trivially, so settling needs at least one earlier sample.
  std::size_t settle = lambda_series.size() - 1;
  while (settle > 0 && std::abs(lambda_series[settle - 1] - lambda_end) <= eps) {
    --settle;
  }
  if (settle + 1 == lambda_series.size()) {
    throw NoSettlingTime("lambda does not stay within eps of its final value "
                         "over any recorded interval");
  }

  SandwichReport r;
  r.t_eps = y.times[settle];
  const std::span<const double> tail(y.times.begin() + static_cast<long>(settle),
                                     y.times.end());
  r.samples = tail.size();

  StepControl tight;
  tight.abs_tol = 1e-13;
  tight.rel_tol = 1e-12;
  tight.h_init = 1e-4;
  tight.h_min = 1e-14;

  const double y0 = y.values[settle];
  auto bound = [&](double shifted_lambda) {
    auto f = [shifted_lambda](double, double z) {
      return reaction_g(z) * (z - shifted_lambda);
    };
    return solve_scalar(f, r.t_eps, y0, tail, tight);
  };
  const ScalarTrajectory alpha = bound(lambda_end - eps);
  const ScalarTrajectory beta = bound(lambda_end + eps);

  constexpr double kSlack = 1e-9;
  // Margins start at zero at t_eps; report them over the samples after it.
  r.min_lower_margin = std::numeric_limits<double>::infinity();
  r.min_upper_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < tail.size(); ++k) {
    const double yk = y.values[settle + k];
    r.min_lower_margin = std::min(r.min_lower_margin, yk - alpha.values[k]);
    r.min_upper_margin = std::min(r.min_upper_margin, beta.values[k] - yk);
  }
  r.ok = r.min_lower_margin >= -kSlack && r.min_upper_margin >= -kSlack;
  return r;
}

}  // namespace nonlocal_flow

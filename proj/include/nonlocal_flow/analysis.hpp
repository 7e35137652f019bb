#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nonlocal_flow/integrator.hpp"
#include "nonlocal_flow/measure_state.hpp"

namespace nonlocal_flow {

struct MonotoneReport {
  bool ok = true;
  // max_k E(t_{k+1}) - E(t_k); 0 for series with fewer than two samples.
  double worst_violation = 0.0;
  std::size_t worst_index = 0;
};

/// ok iff E(t_{k+1}) <= E(t_k) + slack for every consecutive pair.
MonotoneReport check_monotone(std::span<const double> values, double slack);

struct LimitEstimate {
  double l_g = 0.0;  // terminal integral of g(u)
  double l_f = 0.0;  // terminal integral of f(u)
  // Both integrals vary by less than 1e-8 over the last 10% of recorded time.
  bool converged = false;
};

/// Requires at least 10 samples (std::invalid_argument otherwise).
LimitEstimate estimate_limits(const TrajectoryRecord& record);

// ---------------------------------------------------------------------------
// Long-time limit predicted from u0 alone.

enum class OmegaKind { H1Step, H3Step, H2Partial };

std::string to_string(OmegaKind k);

struct LevelPiece {
  double level = 0.0;
  double measure = 0.0;
};

struct OmegaPrediction {
  OmegaKind kind = OmegaKind::H2Partial;
  std::optional<double> lambda_infinity;
  std::vector<LevelPiece> pieces;

  /// Where an atom starting at `initial_value` ends up, if predicted. Under
  /// H2 only atoms starting exactly at 0 or 1 have a prediction.
  std::optional<double> level_for(double initial_value) const;
};

/// H1: u -> 1 on {u0 = 1} and -> lambda_inf on {u0 > 1}, with
///     |{u0 = 1}| + lambda_inf |{u0 > 1}| = integral u0.
/// H3: u -> lambda_inf on {u0 < 0} and stays 0 elsewhere, with
///     lambda_inf |{u0 < 0}| = integral u0.
/// H2: no closed form; only the invariant atoms at 0 and 1 are listed.
///
/// Throws DegenerateSupport if the set carrying lambda_inf has zero measure.
OmegaPrediction predict_omega_limit(const Ensemble& e0,
                                    const HypothesisClass& hyp);

enum class Bucket { Zero, One, LambdaInf, Ambiguous };

std::string to_string(Bucket b);

inline constexpr double kDefaultClassifyTol = 1e-4;

/// Assigns each atom to the unique candidate in {0, 1, lambda_inf} within
/// `tol`; Ambiguous when no candidate or more than one is that close.
std::vector<Bucket> classify_terminal(const Ensemble& final_state,
                                      std::optional<double> lambda_inf,
                                      double tol = kDefaultClassifyTol);

struct UniquenessReport {
  bool ok = true;
  std::vector<double> offending_values;  // distinct initial values, sorted
};

/// Under H2 at most one initial value in (0, 1) may converge to an interior
/// lambda_inf. Requires lambda_inf in (0, 1) (std::invalid_argument).
UniquenessReport check_h2_uniqueness(const Ensemble& e0,
                                     std::span<const Bucket> buckets,
                                     double lambda_inf);

struct SandwichReport {
  bool ok = true;
  double t_eps = 0.0;
  double min_lower_margin = 0.0;  // min over t > t_eps of Y - alpha
  double min_upper_margin = 0.0;  // min over t > t_eps of beta - Y
  std::size_t samples = 0;
};

/// Comparison-principle bracket for a characteristic. With lambda_end the
/// last recorded lambda, t_eps is the first sample after which
/// |lambda - lambda_end| <= eps holds at every later sample. From
/// Y(t_eps), alpha and beta solve the autonomous equations
///   alpha' = g(alpha) (alpha - (lambda_end - eps)),
///   beta'  = g(beta)  (beta  - (lambda_end + eps)),
/// and the check asserts alpha - 1e-9 <= Y <= beta + 1e-9 at every later
/// sample.
///
/// `lambda_series` is aligned with `y.times`. Throws NoSettlingTime when no
/// sample before the last one starts a settled tail.
SandwichReport sandwich_check(const ScalarTrajectory& y,
                              std::span<const double> lambda_series,
                              double eps);

}  // namespace nonlocal_flow

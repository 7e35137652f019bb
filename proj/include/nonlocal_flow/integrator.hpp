#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nonlocal_flow/dynamics.hpp"
#include "nonlocal_flow/lyapunov.hpp"
#include "nonlocal_flow/measure_state.hpp"

namespace nonlocal_flow {

struct StepControl {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double h_init = 1e-3;
  double h_min = 1e-12;
  double h_max = 1.0;
  double t_max = 200.0;
  double steady_tol = 1e-10;
  double denom_guard = kDefaultDenominatorGuard;
  // Observables are recorded on the grid k * record_every and at termination.
  double record_every = 0.1;

  /// Throws std::invalid_argument if any field is non-positive or
  /// h_min <= h_init <= h_max fails.
  void validate() const;
};

enum class Termination { SteadyState, TMaxReached, DenominatorVanished };

std::string to_string(Termination t);

struct NamedSeries {
  std::string name;
  std::vector<double> values;
};

/// Observables sampled on a common, strictly increasing time axis.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> lambda_series;
  std::vector<double> mass_series;
  std::vector<NamedSeries> lyapunov_series;
  std::vector<Ensemble> snapshots;  // snapshots[k].time() == times[k]
  Termination termination = Termination::TMaxReached;

  std::size_t size() const { return times.size(); }
  const Ensemble& final_state() const { return snapshots.back(); }
  const NamedSeries* lyapunov(const std::string& name) const;
  /// Value trajectory of one atom across the snapshots.
  std::vector<double> atom_series(std::size_t atom) const;
};

struct StepResult {
  Ensemble state;
  double h_used = 0.0;
  double h_next = 0.0;
  double err_est = 0.0;
};

/// One accepted adaptive Dormand-Prince 5(4) step. lambda is re-evaluated
/// from every stage state. Rejected attempts are retried with a smaller h.
/// Throws StepSizeUnderflow, DenominatorVanishes, and std::invalid_argument
/// when h lies outside [h_min, h_max].
StepResult step(const Ensemble& e, double h, const StepControl& ctrl);

/// Integrates until the vector field's sup-norm drops below steady_tol (0
/// disables this), t
/// reaches t_max, or the denominator of lambda vanishes. In the last case the
/// record ends at the last state whose lambda was well defined.
///
/// Unless `require_hypothesis` is false, throws NoHypothesis for data outside
/// (H1)-(H3).
TrajectoryRecord evolve(const Ensemble& e0, const StepControl& ctrl,
                        std::span<const LyapunovSpec> lyapunov_specs = {},
                        bool require_hypothesis = true);

// ---------------------------------------------------------------------------
// Scalar problems.

/// Piecewise-linear interpolant through (times[k], values[k]); constant
/// extrapolation outside the knot range.
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<double> times, std::vector<double> values);
  double operator()(double t) const;
  std::span<const double> times() const { return times_; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

struct ScalarTrajectory {
  std::vector<double> times;
  std::vector<double> values;
};

/// Adaptive Dormand-Prince integration of y' = rhs(t, y) from (t0, y0),
/// landing exactly on each of `output_times` (ascending, all >= t0).
ScalarTrajectory solve_scalar(const std::function<double(double, double)>& rhs,
                              double t0, double y0,
                              std::span<const double> output_times,
                              const StepControl& ctrl);

/// Y' = f(Y) - lambda(t) g(Y), Y(0) = s, with lambda read from the
/// interpolant. Output is reported at the interpolant's knots, so steps never
/// straddle a kink of lambda.
ScalarTrajectory solve_characteristic(double s, const PiecewiseLinear& lambda,
                                      const StepControl& ctrl);

/// Classical fixed-step RK4 with lambda evaluated per stage. Test oracle.
/// Records t = 0, every `record_every` (rounded to whole steps; 0 means
/// endpoints only) and t_end. The last step is shortened to hit t_end.
TrajectoryRecord reference_evolve(const Ensemble& e0, double h_fixed,
                                  double t_end, double record_every = 0.0,
                                  double guard = kDefaultDenominatorGuard);

}  // namespace nonlocal_flow

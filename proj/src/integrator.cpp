#include "nonlocal_flow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nonlocal_flow/detail/dormand_prince.hpp"
#include "nonlocal_flow/errors.hpp"

namespace nonlocal_flow {

void StepControl::validate() const {
  const double fields[] = {abs_tol, rel_tol,     h_init, h_min,
                           h_max,   denom_guard, t_max,  record_every};
  for (double f : fields) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw std::invalid_argument("step control fields must be positive and finite");
    }
  }
  // Zero switches steady-state detection off.
  if (!(steady_tol >= 0.0) || !std::isfinite(steady_tol)) {
    throw std::invalid_argument("steady_tol must be non-negative and finite");
  }
  if (!(h_min <= h_init && h_init <= h_max)) {
    throw std::invalid_argument("step control requires h_min <= h_init <= h_max");
  }
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::SteadyState:
      return "SteadyState";
    case Termination::TMaxReached:
      return "TMaxReached";
    case Termination::DenominatorVanished:
      return "DenominatorVanished";
  }
  return "?";
}

const NamedSeries* TrajectoryRecord::lyapunov(const std::string& name) const {
  for (const auto& s : lyapunov_series) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<double> TrajectoryRecord::atom_series(std::size_t atom) const {
  std::vector<double> out;
  out.reserve(snapshots.size());
  for (const auto& s : snapshots) out.push_back(s.values()[atom]);
  return out;
}

namespace {

struct Accepted {
  double h_used;
  double h_next;
  double err;
};

// Retries until the error test passes. The accepted solution is left in
// work.next. A starting h below h_min is allowed (a step shortened to land on
// an output time) but is never reduced further.
template <typename Rhs>
Accepted controlled_step(Rhs&& rhs, double t, std::span<const double> y,
                         double h, const StepControl& ctrl,
                         detail::DormandPrinceWork& work) {
  constexpr double kSafety = 0.9;
  constexpr double kMinFactor = 0.2;
  constexpr double kMaxFactor = 5.0;
  const double y_norm = detail::inf_norm(y);
  for (;;) {
    const double err = detail::dormand_prince_attempt(rhs, t, y, h, work);
    const double tol =
        ctrl.abs_tol +
        ctrl.rel_tol * std::max(y_norm, detail::inf_norm(work.next));
    double factor = kMinFactor;
    if (err == 0.0) {
      factor = kMaxFactor;
    } else if (std::isfinite(err)) {
      factor = std::clamp(kSafety * std::pow(tol / err, 0.2), kMinFactor,
                          kMaxFactor);
    }
    if (std::isfinite(err) && err <= tol) {
      const double h_next = std::clamp(h * factor, ctrl.h_min, ctrl.h_max);
      return {h, h_next, err};
    }
    if (h <= ctrl.h_min) throw StepSizeUnderflow(t, h);
    h = std::max(h * factor, ctrl.h_min);
  }
}

struct EnsembleRhs {
  std::span<const double> weights;
  double domain_measure;
  double guard;
  double last_lambda = 0.0;

  void operator()(double, std::span<const double> y, std::span<double> dy) {
    last_lambda = rhs_into(y, weights, domain_measure, guard, dy);
  }
};

class Recorder {
 public:
  Recorder(const Ensemble& e0, std::span<const LyapunovSpec> specs)
      : e0_(e0), specs_(specs) {
    for (const auto& s : specs) rec_.lyapunov_series.push_back({s.name, {}});
  }

  void record(std::span<const double> y, double t, double lambda) {
    if (!rec_.times.empty() && t <= rec_.times.back()) return;
    Ensemble snap = Ensemble::with_values(
        e0_, std::vector<double>(y.begin(), y.end()), t);
    rec_.times.push_back(t);
    rec_.lambda_series.push_back(lambda);
    rec_.mass_series.push_back(mass(snap));
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      rec_.lyapunov_series[i].values.push_back(lyapunov_value(snap, specs_[i]));
    }
    rec_.snapshots.push_back(std::move(snap));
  }

  TrajectoryRecord finish(Termination why) {
    rec_.termination = why;
    return std::move(rec_);
  }

 private:
  const Ensemble& e0_;
  std::span<const LyapunovSpec> specs_;
  TrajectoryRecord rec_;
};

}  // namespace

StepResult step(const Ensemble& e, double h, const StepControl& ctrl) {
  ctrl.validate();
  if (!(h >= ctrl.h_min && h <= ctrl.h_max)) {
    throw std::invalid_argument("step size outside [h_min, h_max]");
  }
  EnsembleRhs rhs{e.weights(), e.domain_measure(), ctrl.denom_guard};
  detail::DormandPrinceWork work(e.size());
  const Accepted a = controlled_step(rhs, e.time(), e.values(), h, ctrl, work);
  return {Ensemble::with_values(e, work.next, e.time() + a.h_used), a.h_used,
          a.h_next, a.err};
}

TrajectoryRecord evolve(const Ensemble& e0, const StepControl& ctrl,
                        std::span<const LyapunovSpec> lyapunov_specs,
                        bool require_hypothesis) {
  ctrl.validate();
  if (require_hypothesis) validate_hypothesis(e0);

  const std::size_t n = e0.size();
  EnsembleRhs rhs{e0.weights(), e0.domain_measure(), ctrl.denom_guard};
  detail::DormandPrinceWork work(n);
  Recorder recorder(e0, lyapunov_specs);

  std::vector<double> y(e0.values().begin(), e0.values().end());
  std::vector<double> dy(n);
  double t = e0.time();
  double lambda = 0.0;
  try {
    rhs(t, y, dy);
    lambda = rhs.last_lambda;
  } catch (const DenominatorVanishes&) {
    return recorder.finish(Termination::DenominatorVanished);
  }
  recorder.record(y, t, lambda);

  // Index of the next grid time k * record_every strictly after t.
  long long grid = 0;
  auto advance_grid = [&] {
    while (static_cast<double>(grid) * ctrl.record_every <= t) ++grid;
  };
  advance_grid();
  double h = ctrl.h_init;
  std::vector<double> dy_new(n);

  for (;;) {
    if (detail::inf_norm(dy) < ctrl.steady_tol) {
      recorder.record(y, t, lambda);
      return recorder.finish(Termination::SteadyState);
    }
    if (t >= ctrl.t_max) {
      recorder.record(y, t, lambda);
      return recorder.finish(Termination::TMaxReached);
    }

    const double grid_time = static_cast<double>(grid) * ctrl.record_every;
    const double target = std::min(grid_time, ctrl.t_max);
    const bool landing = t + h >= target;
    const double h_try = landing ? target - t : h;

    Accepted a{};
    try {
      a = controlled_step(rhs, t, y, h_try, ctrl, work);
    } catch (const DenominatorVanishes&) {
      recorder.record(y, t, lambda);
      return recorder.finish(Termination::DenominatorVanished);
    }
    const double t_new = (landing && a.h_used == h_try) ? target : t + a.h_used;

    double lambda_new = 0.0;
    try {
      rhs(t_new, work.next, dy_new);
      lambda_new = rhs.last_lambda;
    } catch (const DenominatorVanishes&) {
      recorder.record(y, t, lambda);
      return recorder.finish(Termination::DenominatorVanished);
    }

    y.swap(work.next);
    dy.swap(dy_new);
    t = t_new;
    lambda = lambda_new;
    h = a.h_next;

    if (t >= grid_time || t >= ctrl.t_max) {
      recorder.record(y, t, lambda);
      advance_grid();
    }
  }
}

// ---------------------------------------------------------------------------

PiecewiseLinear::PiecewiseLinear(std::vector<double> times,
                                 std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.empty() || times_.size() != values_.size()) {
    throw std::invalid_argument("interpolant needs matching, non-empty knots");
  }
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) {
      throw std::invalid_argument("interpolant knots must be strictly increasing");
    }
  }
}

double PiecewiseLinear::operator()(double t) const {
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin());
  const double t0 = times_[k - 1];
  const double t1 = times_[k];
  const double s = (t - t0) / (t1 - t0);
  return values_[k - 1] + s * (values_[k] - values_[k - 1]);
}

ScalarTrajectory solve_scalar(const std::function<double(double, double)>& f,
                              double t0, double y0,
                              std::span<const double> output_times,
                              const StepControl& ctrl) {
  ctrl.validate();
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    dy[0] = f(t, y[0]);
  };
  detail::DormandPrinceWork work(1);
  ScalarTrajectory out;
  out.times.reserve(output_times.size());
  out.values.reserve(output_times.size());

  double t = t0;
  double y[1] = {y0};
  double h = ctrl.h_init;
  for (double target : output_times) {
    if (target < t) throw std::invalid_argument("output times must be ascending and >= t0");
    while (t < target) {
      const bool landing = t + h >= target;
      const double h_try = landing ? target - t : h;
      const Accepted a = controlled_step(rhs, t, y, h_try, ctrl, work);
      t = (landing && a.h_used == h_try) ? target : t + a.h_used;
      y[0] = work.next[0];
      h = a.h_next;
    }
    out.times.push_back(target);
    out.values.push_back(y[0]);
  }
  return out;
}

ScalarTrajectory solve_characteristic(double s, const PiecewiseLinear& lambda,
                                      const StepControl& ctrl) {
  auto f = [&](double t, double y) {
    return reaction_g(y) * (y - lambda(t));
  };
  return solve_scalar(f, lambda.times().front(), s, lambda.times(), ctrl);
}

TrajectoryRecord reference_evolve(const Ensemble& e0, double h_fixed,
                                  double t_end, double record_every,
                                  double guard) {
  if (!(h_fixed > 0.0)) throw std::invalid_argument("h_fixed must be positive");
  if (!(t_end >= e0.time())) throw std::invalid_argument("t_end before start");

  const std::size_t n = e0.size();
  const double span = t_end - e0.time();
  const auto steps = static_cast<long long>(std::ceil(span / h_fixed - 1e-9));
  const long long stride =
      record_every > 0.0
          ? std::max<long long>(1, std::llround(record_every / h_fixed))
          : steps + 1;

  Recorder recorder(e0, {});
  std::vector<double> y(e0.values().begin(), e0.values().end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto eval = [&](std::span<const double> state, std::span<double> out) {
    return rhs_into(state, e0.weights(), e0.domain_measure(), guard, out);
  };

  double lambda = eval(y, k1);
  recorder.record(y, e0.time(), lambda);
  for (long long s = 0; s < steps; ++s) {
    const double t = e0.time() + static_cast<double>(s) * h_fixed;
    const double h = (s == steps - 1) ? t_end - t : h_fixed;
    if (s > 0) eval(y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    eval(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    eval(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    eval(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    const bool last = s == steps - 1;
    if (last || (s + 1) % stride == 0) {
      const double t_rec = last ? t_end : t + h;
      recorder.record(y, t_rec, lambda_of(y, e0.weights(), e0.domain_measure(), guard));
    }
  }
  return recorder.finish(Termination::TMaxReached);
}

}  // namespace nonlocal_flow

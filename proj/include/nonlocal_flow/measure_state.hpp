#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace nonlocal_flow {

/// One value of u together with the Lebesgue measure of the set carrying it.
struct Atom {
  double value = 0.0;
  double weight = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite weighted-atom representation of u(., t).
///
/// Because the equation acts pointwise in x and couples points only through
/// the scalar lambda(t), the pushforward of Lebesgue measure under u(., t)
/// is all the dynamics need: every atom follows its own characteristic and
/// the weights never change. The atom order is fixed at construction and is
/// the summation order of every reduction, which keeps results bitwise
/// reproducible.
///
/// Ensembles are immutable values; stepping produces a new ensemble.
class Ensemble {
 public:
  /// Validates weights (positive, finite) and values (finite). The domain
  /// measure is the compensated sum of the weights.
  explicit Ensemble(std::vector<Atom> atoms, double time = 0.0);

  /// Same weights as `like`, new values and time. Used by the integrator.
  static Ensemble with_values(const Ensemble& like, std::vector<double> values,
                              double time);

  std::size_t size() const { return values_.size(); }
  double time() const { return time_; }
  double domain_measure() const { return domain_measure_; }

  std::span<const double> values() const { return values_; }
  std::span<const double> weights() const { return weights_; }
  Atom atom(std::size_t i) const { return {values_[i], weights_[i]}; }
  std::vector<Atom> atoms() const;

  double min_value() const;
  double max_value() const;

 private:
  Ensemble() = default;

  std::vector<double> values_;
  std::vector<double> weights_;
  double time_ = 0.0;
  double domain_measure_ = 0.0;
};

// ---------------------------------------------------------------------------
// Initial data.

/// Atoms listed directly. Atoms with exactly equal values are merged.
struct ExplicitAtoms {
  std::vector<Atom> atoms;
};

/// Piecewise-constant u0 given as (value, measure) pieces; merged like atoms.
struct PiecewiseConstant {
  std::vector<Atom> pieces;
};

/// Closed-form u0 on a 1-D reference interval, sampled at n midpoints. Every
/// sample becomes its own atom of weight domain_measure / n; samples are not
/// merged even when values coincide.
struct AnalyticSampler {
  std::function<double(double)> u0;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 0;
  double domain_measure = 1.0;
};

using InitialDatumSpec =
    std::variant<ExplicitAtoms, PiecewiseConstant, AnalyticSampler>;

/// Builds the time-0 ensemble.
/// Throws EmptySpec, NonpositiveWeight.
Ensemble build_ensemble(const InitialDatumSpec& spec);

// ---------------------------------------------------------------------------
// Hypothesis classes.

enum class Hypothesis { H1, H2, H3 };

std::string to_string(Hypothesis h);

/// Which of the three admissible classes u0 belongs to, and its invariant
/// interval: [1, sup u0], [0, 1] or [inf u0, 0].
struct HypothesisClass {
  Hypothesis tag = Hypothesis::H2;
  double interval_lo = 0.0;
  double interval_hi = 1.0;

  /// (-1)^(i+1): the sign that makes sign * integral(Phi(u)) non-increasing.
  int lyapunov_sign() const { return tag == Hypothesis::H2 ? -1 : 1; }
  bool contains(double v, double slack) const {
    return v >= interval_lo - slack && v <= interval_hi + slack;
  }
};

/// Throws NoHypothesis when values straddle the classes or the data is a
/// pure equilibrium (u0 = 1, u0(1 - u0) = 0 or u0 = 0 almost everywhere).
HypothesisClass validate_hypothesis(const Ensemble& e);

/// Integral of u, compensated, in atom order.
double mass(const Ensemble& e);

}  // namespace nonlocal_flow

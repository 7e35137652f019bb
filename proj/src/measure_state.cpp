#include "nonlocal_flow/measure_state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nonlocal_flow/compensated_sum.hpp"
#include "nonlocal_flow/errors.hpp"

namespace nonlocal_flow {

namespace {

void check_atom(const Atom& a, std::size_t index) {
  if (!(a.weight > 0.0) || !std::isfinite(a.weight)) {
    std::ostringstream os;
    os << "atom " << index << " has non-positive or non-finite weight "
       << a.weight;
    throw NonpositiveWeight(os.str());
  }
  if (!std::isfinite(a.value)) {
    std::ostringstream os;
    os << "atom " << index << " has non-finite value";
    throw FlowError(os.str());
  }
}

// Exact-equality merge; the first occurrence fixes the position.
std::vector<Atom> merge_equal_values(const std::vector<Atom>& in) {
  std::vector<Atom> out;
  std::vector<CompensatedSum> weight_sums;
  for (std::size_t i = 0; i < in.size(); ++i) {
    check_atom(in[i], i);
    auto it = std::find_if(out.begin(), out.end(), [&](const Atom& a) {
      return a.value == in[i].value;
    });
    if (it == out.end()) {
      out.push_back(in[i]);
      weight_sums.emplace_back();
      weight_sums.back() += in[i].weight;
    } else {
      weight_sums[static_cast<std::size_t>(it - out.begin())] += in[i].weight;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].weight = weight_sums[i].value();
  }
  return out;
}

}  // namespace

Ensemble::Ensemble(std::vector<Atom> atoms, double time) : time_(time) {
  if (atoms.empty()) throw EmptySpec();
  if (!(time >= 0.0)) throw FlowError("ensemble time must be >= 0");
  values_.reserve(atoms.size());
  weights_.reserve(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    check_atom(atoms[i], i);
    values_.push_back(atoms[i].value);
    weights_.push_back(atoms[i].weight);
  }
  domain_measure_ = compensated_sum(weights_);
}

Ensemble Ensemble::with_values(const Ensemble& like, std::vector<double> values,
                               double time) {
  if (values.size() != like.size()) {
    throw FlowError("value count does not match atom count");
  }
  Ensemble e;
  e.values_ = std::move(values);
  e.weights_ = like.weights_;
  e.time_ = time;
  e.domain_measure_ = like.domain_measure_;
  return e;
}

std::vector<Atom> Ensemble::atoms() const {
  std::vector<Atom> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = atom(i);
  return out;
}

double Ensemble::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}

double Ensemble::max_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

Ensemble build_ensemble(const InitialDatumSpec& spec) {
  return std::visit(
      [](const auto& s) -> Ensemble {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExplicitAtoms>) {
          if (s.atoms.empty()) throw EmptySpec();
          return Ensemble(merge_equal_values(s.atoms));
        } else if constexpr (std::is_same_v<T, PiecewiseConstant>) {
          if (s.pieces.empty()) throw EmptySpec();
          return Ensemble(merge_equal_values(s.pieces));
        } else {
          if (s.n == 0) throw EmptySpec();
          if (!s.u0) throw FlowError("analytic sampler has no function");
          if (!(s.hi > s.lo)) {
            throw FlowError("analytic sampler interval is empty");
          }
          if (!(s.domain_measure > 0.0)) {
            throw NonpositiveWeight("sampler domain measure must be positive");
          }
          const double width = (s.hi - s.lo) / static_cast<double>(s.n);
          const double weight = s.domain_measure / static_cast<double>(s.n);
          std::vector<Atom> atoms(s.n);
          for (std::size_t k = 0; k < s.n; ++k) {
            const double x = s.lo + (static_cast<double>(k) + 0.5) * width;
            atoms[k] = {s.u0(x), weight};
          }
          return Ensemble(std::move(atoms));
        }
      },
      spec);
}

std::string to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::H1:
      return "H1";
    case Hypothesis::H2:
      return "H2";
    case Hypothesis::H3:
      return "H3";
  }
  return "?";
}

HypothesisClass validate_hypothesis(const Ensemble& e) {
  const auto v = e.values();
  const bool all_ge_one = std::all_of(v.begin(), v.end(), [](double x) { return x >= 1.0; });
  const bool all_unit = std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0 && x <= 1.0; });
  const bool all_le_zero = std::all_of(v.begin(), v.end(), [](double x) { return x <= 0.0; });

  if (all_ge_one) {
    if (e.max_value() > 1.0) return {Hypothesis::H1, 1.0, e.max_value()};
    throw NoHypothesis("u0 = 1 almost everywhere: (H1) requires u0 not identically 1");
  }
  if (all_unit) {
    const bool interior = std::any_of(v.begin(), v.end(), [](double x) { return x > 0.0 && x < 1.0; });
    if (interior) return {Hypothesis::H2, 0.0, 1.0};
    throw NoHypothesis("u0(1 - u0) = 0 almost everywhere: (H2) requires u0 to take values in (0, 1)");
  }
  if (all_le_zero) {
    if (e.min_value() < 0.0) return {Hypothesis::H3, e.min_value(), 0.0};
    throw NoHypothesis("u0 = 0 almost everywhere: (H3) requires u0 not identically 0");
  }
  std::ostringstream os;
  os.precision(17);
  os << "values straddle the invariant intervals (min " << e.min_value()
     << ", max " << e.max_value() << ")";
  throw NoHypothesis(os.str());
}

double mass(const Ensemble& e) {
  return weighted_sum(e.values(), e.weights(), [](double y) { return y; });
}

}  // namespace nonlocal_flow

#include "nonlocal_flow/dynamics.hpp"

#include <cmath>

#include "nonlocal_flow/compensated_sum.hpp"
#include "nonlocal_flow/errors.hpp"

namespace nonlocal_flow {

LambdaParts lambda_parts(std::span<const double> values,
                         std::span<const double> weights) {
  CompensatedSum num;
  CompensatedSum den;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += weights[i] * reaction_f(values[i]);
    den += weights[i] * reaction_g(values[i]);
  }
  return {num.value(), den.value()};
}

double lambda_of(std::span<const double> values,
                 std::span<const double> weights, double domain_measure,
                 double guard) {
  const LambdaParts p = lambda_parts(values, weights);
  const double threshold = guard * domain_measure;
  if (!(std::abs(p.denominator) >= threshold)) {
    throw DenominatorVanishes(p.denominator, threshold);
  }
  return p.numerator / p.denominator;
}

double lambda_of(const Ensemble& e, double guard) {
  return lambda_of(e.values(), e.weights(), e.domain_measure(), guard);
}

double rhs_into(std::span<const double> values, std::span<const double> weights,
                double domain_measure, double guard, std::span<double> out) {
  const double lam = lambda_of(values, weights, domain_measure, guard);
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = reaction_g(values[i]) * (values[i] - lam);
  }
  return lam;
}

std::vector<double> rhs(const Ensemble& e, double guard) {
  std::vector<double> out(e.size());
  rhs_into(e.values(), e.weights(), e.domain_measure(), guard, out);
  return out;
}

}  // namespace nonlocal_flow

#pragma once

#include <span>
#include <vector>

#include "nonlocal_flow/measure_state.hpp"

namespace nonlocal_flow {

inline constexpr double kDefaultDenominatorGuard = 1e-12;

// f(z) = z^2 (1 - z), the cubic reaction.
inline double reaction_f(double z) { return z * z * (1.0 - z); }

// g(z) = z (1 - z). Note f(z) = z g(z).
inline double reaction_g(double z) { return z * (1.0 - z); }

/// Numerator and denominator of lambda, each a compensated atom-order sum.
struct LambdaParts {
  double numerator = 0.0;    // integral of f(u)
  double denominator = 0.0;  // integral of g(u)
};

LambdaParts lambda_parts(std::span<const double> values,
                         std::span<const double> weights);

/// lambda = integral f(u) / integral g(u).
/// Throws DenominatorVanishes when |integral g(u)| < guard * domain_measure.
double lambda_of(std::span<const double> values,
                 std::span<const double> weights, double domain_measure,
                 double guard = kDefaultDenominatorGuard);
double lambda_of(const Ensemble& e, double guard = kDefaultDenominatorGuard);

/// Per-atom time derivative g(y)(y - lambda), written into `out`. The factored
/// form returns exact zeros for atoms sitting at 0 or 1. Returns lambda.
double rhs_into(std::span<const double> values, std::span<const double> weights,
                double domain_measure, double guard, std::span<double> out);

/// Time derivatives aligned with the ensemble's atom order.
std::vector<double> rhs(const Ensemble& e,
                        double guard = kDefaultDenominatorGuard);

/// Residual of the characteristic equation,
///   L(Z) = Z' - f(Z) + lambda g(Z);
/// zero exactly when (z, zdot) is consistent with the flow at that lambda.
inline double operator_L(double z, double zdot, double lam) {
  return zdot - reaction_f(z) + lam * reaction_g(z);
}

}  // namespace nonlocal_flow

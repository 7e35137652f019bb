#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nonlocal_flow/measure_state.hpp"

namespace nonlocal_flow {

/// A candidate Lyapunov functional E(u) = sign * integral of Phi(u).
///
/// Along any solution under hypothesis class i, E is non-increasing whenever
/// Phi is C^1 with Phi' non-decreasing on the invariant interval I_i and
/// sign = (-1)^(i+1).
struct LyapunovSpec {
  std::string name;
  std::function<double(double)> phi;
  std::function<double(double)> phi_prime;
  int sign = 1;
};

/// Samples Phi' at 1000 equispaced points of I_i and reports whether it is
/// non-decreasing to within 1e-12 (relative to the sampled magnitude).
bool phi_prime_nondecreasing(const LyapunovSpec& spec,
                             const HypothesisClass& hyp);

/// Catalog entry with its sign set for the hypothesis class.
LyapunovSpec signed_for(LyapunovSpec spec, const HypothesisClass& hyp);

double lyapunov_value(const Ensemble& e, const LyapunovSpec& spec);

// Shipped catalog: "mass" (Phi = z), "square", "cube", "quartic", "exp".
// The returned specs carry sign +1; use signed_for() before evaluating.
std::vector<std::string> lyapunov_catalog_names();
std::optional<LyapunovSpec> lyapunov_catalog_entry(const std::string& name);

/// Catalog entries admissible for the class, in catalog order, already
/// signed. "cube" drops out under H3, where 3z^2 is decreasing.
std::vector<LyapunovSpec> admissible_catalog(const HypothesisClass& hyp);

}  // namespace nonlocal_flow

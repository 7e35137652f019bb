#include <algorithm>
#include <cmath>

#include "nonlocal_flow/compensated_sum.hpp"
#include "nonlocal_flow/lyapunov.hpp"

namespace nonlocal_flow {

bool phi_prime_nondecreasing(const LyapunovSpec& spec,
                             const HypothesisClass& hyp) {
  constexpr int kSamples = 1000;
  const double lo = hyp.interval_lo;
  const double hi = hyp.interval_hi;
  double prev = spec.phi_prime(lo);
  for (int k = 1; k < kSamples; ++k) {
    const double z = lo + (hi - lo) * static_cast<double>(k) / (kSamples - 1);
    const double cur = spec.phi_prime(z);
    const double scale = std::max({1.0, std::abs(prev), std::abs(cur)});
    if (cur < prev - 1e-12 * scale) return false;
    prev = cur;
  }
  return true;
}

LyapunovSpec signed_for(LyapunovSpec spec, const HypothesisClass& hyp) {
  spec.sign = hyp.lyapunov_sign();
  return spec;
}

double lyapunov_value(const Ensemble& e, const LyapunovSpec& spec) {
  return spec.sign * weighted_sum(e.values(), e.weights(), spec.phi);
}

namespace {

struct CatalogEntry {
  const char* name;
  double (*phi)(double);
  double (*phi_prime)(double);
};

constexpr CatalogEntry kCatalog[] = {
    {"mass", [](double z) { return z; }, [](double) { return 1.0; }},
    {"square", [](double z) { return z * z; }, [](double z) { return 2.0 * z; }},
    {"cube", [](double z) { return z * z * z; },
     [](double z) { return 3.0 * z * z; }},
    {"quartic", [](double z) { return (z * z) * (z * z); },
     [](double z) { return 4.0 * z * z * z; }},
    {"exp", [](double z) { return std::exp(z); },
     [](double z) { return std::exp(z); }},
};

}  // namespace

std::vector<std::string> lyapunov_catalog_names() {
  std::vector<std::string> names;
  for (const auto& c : kCatalog) names.emplace_back(c.name);
  return names;
}

std::optional<LyapunovSpec> lyapunov_catalog_entry(const std::string& name) {
  for (const auto& c : kCatalog) {
    if (name == c.name) return LyapunovSpec{c.name, c.phi, c.phi_prime, 1};
  }
  return std::nullopt;
}

std::vector<LyapunovSpec> admissible_catalog(const HypothesisClass& hyp) {
  std::vector<LyapunovSpec> out;
  for (const auto& name : lyapunov_catalog_names()) {
    auto spec = signed_for(*lyapunov_catalog_entry(name), hyp);
    if (phi_prime_nondecreasing(spec, hyp)) out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace nonlocal_flow

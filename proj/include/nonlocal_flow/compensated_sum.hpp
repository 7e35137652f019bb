#pragma once

#include <cmath>
#include <span>

namespace nonlocal_flow {

// Neumaier's variant of Kahan summation. Terms are consumed in the order they
// are added, so a fixed input order gives a bitwise reproducible result.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double term) {
    const double t = sum_ + term;
    if (std::abs(sum_) >= std::abs(term)) {
      compensation_ += (sum_ - t) + term;
    } else {
      compensation_ += (term - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> terms) {
  CompensatedSum acc;
  for (double t : terms) acc += t;
  return acc.value();
}

// Sum of weights[i] * fn(values[i]) in index order.
template <typename Fn>
double weighted_sum(std::span<const double> values,
                    std::span<const double> weights, Fn&& fn) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += weights[i] * fn(values[i]);
  }
  return acc.value();
}

}  // namespace nonlocal_flow

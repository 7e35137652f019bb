#include "nonlocal_flow/errors.hpp"

#include <sstream>

namespace nonlocal_flow {

namespace {

std::string describe_denominator(double denominator, double threshold) {
  std::ostringstream os;
  os.precision(17);
  os << "integral of g(u) vanished: |" << denominator << "| < " << threshold;
  return os.str();
}

std::string describe_underflow(double time, double h) {
  std::ostringstream os;
  os.precision(17);
  os << "step size underflow at t=" << time << " (h=" << h << ")";
  return os.str();
}

}  // namespace

DenominatorVanishes::DenominatorVanishes(double denominator, double threshold)
    : FlowError(describe_denominator(denominator, threshold)),
      denominator_(denominator) {}

StepSizeUnderflow::StepSizeUnderflow(double time, double h)
    : FlowError(describe_underflow(time, h)) {}

}  // namespace nonlocal_flow

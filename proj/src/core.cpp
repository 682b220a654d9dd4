#include "stclab/core.hpp"

namespace stclab {

namespace {
bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }
}  // namespace

void GainSet::validate() const {
  if (!positive_finite(alpha)) {
    throw ParameterError("alpha must be positive and finite, got " + std::to_string(alpha));
  }
  if (!positive_finite(beta)) {
    throw ParameterError("beta must be positive and finite, got " + std::to_string(beta));
  }
  if (!positive_finite(h)) {
    throw ParameterError("h must be positive and finite, got " + std::to_string(h));
  }
  if (gamma && !positive_finite(*gamma)) {
    throw ParameterError("gamma must be positive and finite, got " + std::to_string(*gamma));
  }
  if (!std::isfinite(lipschitz_L) || lipschitz_L < 0.0) {
    throw ParameterError("lipschitz_L must be nonnegative, got " + std::to_string(lipschitz_L));
  }
}

}  // namespace stclab

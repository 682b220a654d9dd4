#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <utility>

#include "stclab/core.hpp"

namespace stclab {

/// Discrete-time super-twisting realizations. Explicit is the forward-Euler
/// baseline; the others are the implicit, matching, semi-implicit and
/// low-chattering schemes plus the modified implicit scheme.
enum class ControllerVariant { Explicit, Brogliato, Koch, Xiong, Hanan, Proposed };

inline constexpr std::array<ControllerVariant, 6> kAllVariants = {
    ControllerVariant::Explicit, ControllerVariant::Brogliato, ControllerVariant::Koch,
    ControllerVariant::Xiong,    ControllerVariant::Hanan,     ControllerVariant::Proposed};

std::string_view to_string(ControllerVariant v);

/// Case-insensitive lookup. Throws ConfigurationError naming the token.
ControllerVariant parse_variant(std::string_view name);

struct ControllerState {
  double nu = 0.0;
};

struct PsiPair {
  double psi1 = 0.0;
  double psi2 = 0.0;
};

struct ControlOutput {
  double u = 0.0;
  ControllerState next;
};

/// Evaluates the variant's (Psi1, Psi2) at (x1, nu). Only Brogliato reads nu.
/// Throws ParameterError on invalid gains, ConfigurationError for Hanan
/// without gamma.
PsiPair psi_pair(ControllerVariant variant, double x1, double nu, const GainSet& gains);

/// One controller update of the general form
///   nu+ = nu - h beta Psi2,   u = -alpha Psi1 + nu+.
ControlOutput controller_step(ControllerVariant variant, ControllerState state, double x1,
                              const GainSet& gains);

/// Roots of s^2 + alpha s + beta, i.e. -alpha/2 +- sqrt(alpha^2/4 - beta).
std::pair<std::complex<double>, std::complex<double>> koch_poles(const GainSet& gains);

/// Default tuning factor of the low-chattering gamma rule, 1.5^2 / 1.1^2.
inline constexpr double kDefaultHananG = (1.5 * 1.5) / (1.1 * 1.1);

/// gamma = G * (beta^2/alpha^2 if alpha < 2 sqrt(beta) else alpha^2/4).
/// Throws ParameterError for G <= 1 or non-positive gains.
double hanan_gamma(const GainSet& gains, double G = kDefaultHananG);

}  // namespace stclab

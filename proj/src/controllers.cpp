#include "stclab/controllers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace stclab {

std::string_view to_string(ControllerVariant v) {
  switch (v) {
    case ControllerVariant::Explicit: return "explicit";
    case ControllerVariant::Brogliato: return "brogliato";
    case ControllerVariant::Koch: return "koch";
    case ControllerVariant::Xiong: return "xiong";
    case ControllerVariant::Hanan: return "hanan";
    case ControllerVariant::Proposed: return "proposed";
  }
  return "unknown";
}

ControllerVariant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (ControllerVariant v : kAllVariants) {
    if (to_string(v) == lower) return v;
  }
  throw ConfigurationError("unknown controller variant '" + std::string(name) + "'");
}

namespace {

// -c + sqrt(c^2 + e) for c > 0, e >= 0, rationalized to avoid cancellation.
double root_excess(double c, double e) { return e / (c + std::sqrt(c * c + e)); }

// sign(s) * (-h alpha/2 + sqrt(h^2 alpha^2/4 + max(0, |s| - h^2 beta)))
double implicit_root_term(double s, const GainSet& g) {
  const double excess = std::max(0.0, std::abs(s) - g.h * g.h * g.beta);
  return sign(s) * root_excess(0.5 * g.h * g.alpha, excess);
}

PsiPair psi_explicit(double x1) { return {sgnpow(x1, 0.5), sgnpow(x1, 0.0)}; }

PsiPair psi_brogliato(double x1, double nu, const GainSet& g) {
  const double s = x1 + g.h * nu;
  const double band = g.h * g.h * g.beta;
  // The outer sign is taken from x1, the magnitude from the sliding variable.
  const double half = 0.5 * g.h * g.alpha;
  const double excess = std::max(0.0, std::abs(s) - band);
  return {sign(x1) * root_excess(half, excess), sat(s / band)};
}

PsiPair psi_koch(double x1, const GainSet& g) {
  if (x1 == 0.0) return {0.0, 0.0};
  const auto [p1, p2] = koch_poles(g);
  const double scale = g.h / std::sqrt(std::abs(x1));
  const std::complex<double> e1 = std::exp(p1 * scale);
  const std::complex<double> e2 = std::exp(p2 * scale);
  const std::complex<double> sum = e1 + e2 - 2.0;
  const std::complex<double> prod = (e1 - 1.0) * (e2 - 1.0);
  if (std::abs(sum.imag()) > 1e-10 || std::abs(prod.imag()) > 1e-10) {
    throw std::logic_error("koch: conjugate pole pair left an imaginary residue");
  }
  const double psi2 = prod.real() * x1 / (g.h * g.h * g.beta);
  const double psi1 = -sum.real() * x1 / (g.alpha * g.h) - g.h * g.beta / g.alpha * psi2;
  return {psi1, psi2};
}

PsiPair psi_xiong(double x1, const GainSet& g) {
  const double band = g.h * g.h * g.beta;
  const double wide = g.h * g.alpha * std::sqrt(std::abs(x1)) + band;
  const double d = std::abs(x1) > wide ? wide : band;
  const double s = sat(x1 / d);
  return {d * s / (g.h * g.alpha), s};
}

PsiPair psi_hanan(double x1, const GainSet& g) {
  const double scale = *g.gamma * g.h * g.h;
  const double s = sat(x1 / scale);
  const double root = std::sqrt(sat(std::abs(x1) / scale)) * sgnpow(x1, 0.5);
  return {root - g.h * g.beta / g.alpha * s, s};
}

PsiPair psi_proposed(double x1, const GainSet& g) {
  const double band = g.h * g.h * g.beta;
  const double linear = g.h * g.beta / g.alpha * sat(std::abs(x1) / band);
  return {sign(x1) * linear + implicit_root_term(x1, g), sat(x1 / band)};
}

}  // namespace

PsiPair psi_pair(ControllerVariant variant, double x1, double nu, const GainSet& gains) {
  gains.validate();
  switch (variant) {
    case ControllerVariant::Explicit: return psi_explicit(x1);
    case ControllerVariant::Brogliato: return psi_brogliato(x1, nu, gains);
    case ControllerVariant::Koch: return psi_koch(x1, gains);
    case ControllerVariant::Xiong: return psi_xiong(x1, gains);
    case ControllerVariant::Hanan:
      if (!gains.gamma) {
        throw ConfigurationError("hanan controller requires gamma");
      }
      return psi_hanan(x1, gains);
    case ControllerVariant::Proposed: return psi_proposed(x1, gains);
  }
  throw ConfigurationError("unhandled controller variant");
}

ControlOutput controller_step(ControllerVariant variant, ControllerState state, double x1,
                              const GainSet& gains) {
  const PsiPair psi = psi_pair(variant, x1, state.nu, gains);
  ControlOutput out;
  out.next.nu = state.nu - gains.h * gains.beta * psi.psi2;
  out.u = -gains.alpha * psi.psi1 + out.next.nu;
  return out;
}

std::pair<std::complex<double>, std::complex<double>> koch_poles(const GainSet& gains) {
  if (!(gains.alpha > 0.0) || !(gains.beta > 0.0)) {
    throw ParameterError("koch_poles: alpha and beta must be positive");
  }
  const std::complex<double> disc =
      std::sqrt(std::complex<double>(gains.alpha * gains.alpha / 4.0 - gains.beta, 0.0));
  const std::complex<double> centre(-gains.alpha / 2.0, 0.0);
  return {centre + disc, centre - disc};
}

double hanan_gamma(const GainSet& gains, double G) {
  if (!(gains.alpha > 0.0) || !(gains.beta > 0.0)) {
    throw ParameterError("hanan_gamma: alpha and beta must be positive");
  }
  if (!(G > 1.0)) {
    throw ParameterError("hanan_gamma: G must exceed 1, got " + std::to_string(G));
  }
  const double a2 = gains.alpha * gains.alpha;
  if (gains.alpha < 2.0 * std::sqrt(gains.beta)) {
    return G * gains.beta * gains.beta / a2;
  }
  return G * a2 / 4.0;
}

}  // namespace stclab

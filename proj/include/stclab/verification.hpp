#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "stclab/core.hpp"

namespace stclab {

/// The parallelogram M = {|x1| <= h^2 beta, |h x2 - x1| <= h^2 beta}.
struct InvariantSetSpec {
  double h = 0.0;
  double beta = 0.0;
};

bool in_invariant_set(VirtualState x, InvariantSetSpec spec);

/// V = 2 beta |x1 - h x2| + x2^2.
double lyapunov(VirtualState x, const GainSet& gains);

/// Exterior partition of the plane used by the decrease argument:
/// Case1* have |x1| <= h^2 beta, Case2* have |x1| > h^2 beta.
enum class LyapunovCase { Case1a, Case1b, Case2a, Case2b };
inline constexpr std::size_t kLyapunovCaseCount = 4;

std::string_view to_string(LyapunovCase c);

/// Throws DomainError when x lies in M.
LyapunovCase classify_case(VirtualState x, const GainSet& gains);

/// One step of the proposed closed loop in (x1, x2) coordinates:
///   x1+ = x1 - h alpha Psi1 - h^2 beta Psi2 + h x2,  x2+ = x2 - h beta Psi2 + h delta.
VirtualState proposed_closed_loop_step(VirtualState x, const GainSet& gains, double delta);

/// A = h alpha (-h alpha / 2 + sqrt(h^2 alpha^2 / 4 + |z1|)).
double implicit_shift(double z1, const GainSet& gains);

/// Upper bound on V_{k+1} - V_k off the band, written in the shifted
/// coordinates z1 = x1 - sign(x1) h^2 beta, z2 = x2 - sign(x1) h beta.
double case2_delta_v_bound(double z1, double z2, const GainSet& gains, double L);

struct BetaBoundTerms {
  double four_L = 0.0;
  double budget_term = 0.0;       // (5/7) sqrt(V) / h
  double disturbance_term = 0.0;  // sqrt(L^2 + 2 L sqrt(V) / h^2)
  double max() const;
};

BetaBoundTerms lyapunov_beta_terms(double L, double V, double h);

/// max(4L, (5/7) sqrt(V)/h, sqrt(L^2 + 2L sqrt(V)/h^2)).
double lyapunov_beta_bound(double L, double V, double h);

struct DecreaseWitness {
  VirtualState x;
  double delta0 = 0.0;
  double delta1 = 0.0;
  LyapunovCase which = LyapunovCase::Case1a;
  double change = 0.0;  // V_{k+1} - V_k, or V_{k+2} - V_k in Case1b
};

struct LyapunovReport {
  std::uint64_t samples = 0;
  std::uint64_t violation_count = 0;
  std::vector<DecreaseWitness> violations;  // first kMaxWitnesses only
  // Largest observed V change. No violations iff this is negative.
  double worst_change = -std::numeric_limits<double>::infinity();
  std::array<std::uint64_t, kLyapunovCaseCount> case_histogram{};

  bool passed() const { return violation_count == 0; }
  static constexpr std::size_t kMaxWitnesses = 64;
};

/// Sampled audit of the decrease argument on {x not in M, V(x) <= V_budget}
/// with |Delta| <= L. Cases 1a, 2a, 2b must have V_{k+1} < V_k, Case 1b must
/// have V_{k+2} < V_k. With L > 0 beta must exceed lyapunov_beta_bound; with
/// L = 0 any positive gains are admissible. Throws ParameterError otherwise.
LyapunovReport check_decrease(const GainSet& gains, double L, double V_budget,
                              std::uint64_t n_samples, std::uint64_t seed);

struct DeadbeatReport {
  double trace = 0.0;
  double determinant = 0.0;
  std::array<double, 4> m_squared{};  // row-major
  double max_eigen_modulus = 0.0;
  std::uint64_t trials = 0;
  double max_abs_x1_after_two = 0.0;

  bool passed(double tol = 1e-12) const;
};

/// Checks nilpotency of the in-band closed-loop matrix [[-1, h], [-1/h, 1]]
/// and replays two undisturbed steps from random states of M.
DeadbeatReport deadbeat_check(const GainSet& gains, std::uint64_t trials = 1000,
                              std::uint64_t seed = 1);

struct InvarianceReport {
  std::uint64_t trajectories = 0;
  std::uint64_t steps = 0;
  double max_residual = 0.0;  // max |x1[k+2] - h^2 Delta[k]|
  bool stayed_in_set = true;

  bool passed(double tol = 1e-12) const { return stayed_in_set && max_residual <= tol; }
};

/// Runs n_steps of the proposed closed loop from random states of M under
/// random |Delta| <= L (including the extremes) and records the deviation
/// from x1[k+2] = h^2 Delta[k]. Requires L <= beta.
InvarianceReport forward_invariance_check(const GainSet& gains, double L,
                                          std::uint64_t n_states, std::uint64_t n_steps,
                                          std::uint64_t seed);

}  // namespace stclab

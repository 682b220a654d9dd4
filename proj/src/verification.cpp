#include "stclab/verification.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "stclab/controllers.hpp"
#include "stclab/simulator.hpp"

namespace stclab {

namespace {

// Per-chunk generator so results do not depend on the thread count.
class ChunkRng {
 public:
  ChunkRng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

constexpr std::uint64_t kChunk = 4096;

double band(const GainSet& g) { return g.h * g.h * g.beta; }

// Draws a state outside M with V <= budget. Strata rotate between the whole
// slab, the band |x1| <= h^2 beta, and a neighbourhood of M. A stratum with no
// admissible states (the band is out of reach once beta exceeds the disturbed
// bound) falls back to the slab.
VirtualState sample_exterior(ChunkRng& rng, const GainSet& g, double budget, std::uint64_t i) {
  const InvariantSetSpec spec{g.h, g.beta};
  const double b = band(g);
  const double x2_max = std::sqrt(budget);
  auto draw = [&](std::uint64_t stratum) {
    VirtualState x;
    switch (stratum) {
      case 0: {
        x.x2 = rng.uniform(-x2_max, x2_max);
        const double w_max = (budget - x.x2 * x.x2) / (2.0 * g.beta);
        x.x1 = rng.uniform(-w_max, w_max) + g.h * x.x2;
        break;
      }
      case 1: {
        // Hit the band edges and the origin exactly now and then.
        const std::uint64_t pick = rng.below(8);
        x.x1 = pick == 0 ? 0.0 : pick == 1 ? b : pick == 2 ? -b : rng.uniform(-b, b);
        x.x2 = rng.uniform(-x2_max, x2_max);
        break;
      }
      case 2: {
        x.x1 = rng.uniform(-b, b);
        const double reach = std::min(x2_max, 4.0 * g.h * g.beta);
        x.x2 = rng.uniform(-reach, reach);
        break;
      }
      default: {
        x.x1 = rng.uniform(-4.0 * b, 4.0 * b);
        const double reach = std::min(x2_max, 4.0 * g.h * g.beta);
        x.x2 = rng.uniform(-reach, reach);
        break;
      }
    }
    return x;
  };
  auto admissible = [&](VirtualState x) { return !in_invariant_set(x, spec) && lyapunov(x, g) <= budget; };
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const VirtualState x = draw(i % 4);
    if (admissible(x)) return x;
  }
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const VirtualState x = draw(0);
    if (admissible(x)) return x;
  }
  throw DomainError("no state outside the invariant set has V <= V_budget; raise V_budget");
}

// Adversarial and random disturbance pairs; the bound is tight at |Delta| = L.
std::pair<double, double> sample_deltas(ChunkRng& rng, double L, std::uint64_t i) {
  switch ((i / 4) % 6) {
    case 0: return {L, L};
    case 1: return {-L, -L};
    case 2: return {L, -L};
    case 3: return {-L, L};
    case 4: return {0.0, 0.0};
    default: return {rng.uniform(-L, L), rng.uniform(-L, L)};
  }
}

void merge_into(LyapunovReport& into, const LyapunovReport& part) {
  into.samples += part.samples;
  into.violation_count += part.violation_count;
  for (const auto& w : part.violations) {
    if (into.violations.size() < LyapunovReport::kMaxWitnesses) into.violations.push_back(w);
  }
  into.worst_change = std::max(into.worst_change, part.worst_change);
  for (std::size_t c = 0; c < kLyapunovCaseCount; ++c) {
    into.case_histogram[c] += part.case_histogram[c];
  }
}

}  // namespace

bool in_invariant_set(VirtualState x, InvariantSetSpec spec) {
  const double b = spec.h * spec.h * spec.beta;
  return std::abs(x.x1) <= b && std::abs(spec.h * x.x2 - x.x1) <= b;
}

double lyapunov(VirtualState x, const GainSet& gains) {
  return 2.0 * gains.beta * std::abs(x.x1 - gains.h * x.x2) + x.x2 * x.x2;
}

std::string_view to_string(LyapunovCase c) {
  switch (c) {
    case LyapunovCase::Case1a: return "1a";
    case LyapunovCase::Case1b: return "1b";
    case LyapunovCase::Case2a: return "2a";
    case LyapunovCase::Case2b: return "2b";
  }
  return "?";
}

LyapunovCase classify_case(VirtualState x, const GainSet& gains) {
  if (in_invariant_set(x, {gains.h, gains.beta})) {
    throw DomainError("classify_case: state lies in the invariant set");
  }
  const double b = band(gains);
  if (std::abs(x.x1) <= b) {
    if (x.x1 == 0.0 || sign(x.x1) == sign(x.x2)) return LyapunovCase::Case1a;
    return LyapunovCase::Case1b;
  }
  const double s = sign(x.x1);
  const double z1 = x.x1 - s * b;
  const double z2 = x.x2 - s * gains.h * gains.beta;
  // Mirrored for z1 < 0 so that the split is odd-symmetric.
  return s * (z1 - gains.h * z2) >= 0.0 ? LyapunovCase::Case2a : LyapunovCase::Case2b;
}

VirtualState proposed_closed_loop_step(VirtualState x, const GainSet& gains, double delta) {
  const PsiPair psi = psi_pair(ControllerVariant::Proposed, x.x1, 0.0, gains);
  const double h = gains.h;
  return {x.x1 - h * gains.alpha * psi.psi1 - h * h * gains.beta * psi.psi2 + h * x.x2,
          x.x2 - h * gains.beta * psi.psi2 + h * delta};
}

double implicit_shift(double z1, const GainSet& gains) {
  // h alpha (-c + sqrt(c^2 + |z1|)), rationalized so that A <= |z1| survives rounding.
  const double half = 0.5 * gains.h * gains.alpha;
  const double z = std::abs(z1);
  return gains.h * gains.alpha * z / (half + std::sqrt(half * half + z));
}

double case2_delta_v_bound(double z1, double z2, const GainSet& g, double L) {
  const double s = sign(z1);
  const double a = implicit_shift(z1, g);
  return 2.0 * g.beta * (std::abs(z1 - s * a) - std::abs(z1 - g.h * z2)) + 2.0 * L * std::abs(z2) -
         2.0 * g.h * g.beta * s * z2 - g.h * g.h * g.beta * g.beta + g.h * g.h * L * L;
}

double BetaBoundTerms::max() const { return std::max({four_L, budget_term, disturbance_term}); }

BetaBoundTerms lyapunov_beta_terms(double L, double V, double h) {
  if (!(L >= 0.0) || !(V > 0.0) || !(h > 0.0)) {
    throw ParameterError("beta bound needs L >= 0, V > 0, h > 0");
  }
  BetaBoundTerms t;
  t.four_L = 4.0 * L;
  t.budget_term = 5.0 / 7.0 * std::sqrt(V) / h;
  t.disturbance_term = std::sqrt(L * L + 2.0 * L * std::sqrt(V) / (h * h));
  return t;
}

double lyapunov_beta_bound(double L, double V, double h) {
  return lyapunov_beta_terms(L, V, h).max();
}

LyapunovReport check_decrease(const GainSet& gains, double L, double V_budget,
                              std::uint64_t n_samples, std::uint64_t seed) {
  gains.validate();
  if (!(L >= 0.0)) throw ParameterError("disturbance bound L must be nonnegative");
  if (!(V_budget > 0.0)) throw ParameterError("V_budget must be positive");
  if (L > 0.0) {
    const BetaBoundTerms terms = lyapunov_beta_terms(L, V_budget, gains.h);
    if (!(gains.beta > terms.max())) {
      std::string which;
      if (!(gains.beta > terms.four_L)) which += " 4L=" + std::to_string(terms.four_L);
      if (!(gains.beta > terms.budget_term)) {
        which += " (5/7)sqrt(V)/h=" + std::to_string(terms.budget_term);
      }
      if (!(gains.beta > terms.disturbance_term)) {
        which += " sqrt(L^2+2L sqrt(V)/h^2)=" + std::to_string(terms.disturbance_term);
      }
      throw ParameterError("beta = " + std::to_string(gains.beta) + " does not exceed the bound " +
                           std::to_string(terms.max()) + "; violated:" + which);
    }
  }

  const std::uint64_t chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<LyapunovReport> parts(chunks);

  auto run_chunk = [&](std::uint64_t c) {
    ChunkRng rng(seed, c);
    LyapunovReport& part = parts[c];
    const std::uint64_t begin = c * kChunk;
    const std::uint64_t end = std::min(n_samples, begin + kChunk);
    for (std::uint64_t i = begin; i < end; ++i) {
      const VirtualState x = sample_exterior(rng, gains, V_budget, i);
      const auto [d0, d1] = sample_deltas(rng, L, i);
      const LyapunovCase which = classify_case(x, gains);
      const double v0 = lyapunov(x, gains);
      VirtualState next = proposed_closed_loop_step(x, gains, d0);
      if (which == LyapunovCase::Case1b) next = proposed_closed_loop_step(next, gains, d1);
      const double change = lyapunov(next, gains) - v0;

      ++part.samples;
      ++part.case_histogram[static_cast<std::size_t>(which)];
      part.worst_change = std::max(part.worst_change, change);
      if (!(change < 0.0)) {
        ++part.violation_count;
        if (part.violations.size() < LyapunovReport::kMaxWitnesses) {
          part.violations.push_back({x, d0, which == LyapunovCase::Case1b ? d1 : 0.0, which, change});
        }
      }
    }
  };

  const unsigned threads =
      static_cast<unsigned>(std::min<std::uint64_t>(default_thread_count(), chunks));
  if (threads <= 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::uint64_t c = next++; c < chunks; c = next++) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }

  LyapunovReport report;
  for (const auto& part : parts) merge_into(report, part);
  return report;
}

bool DeadbeatReport::passed(double tol) const {
  bool ok = std::abs(trace) <= 1e-14 && std::abs(determinant) <= 1e-14;
  for (double m : m_squared) ok = ok && std::abs(m) <= 1e-14;
  return ok && max_abs_x1_after_two <= tol;
}

DeadbeatReport deadbeat_check(const GainSet& gains, std::uint64_t trials, std::uint64_t seed) {
  gains.validate();
  const double h = gains.h;
  const std::array<double, 4> m = {-1.0, h, -1.0 / h, 1.0};

  DeadbeatReport r;
  r.trace = m[0] + m[3];
  r.determinant = m[0] * m[3] - m[1] * m[2];
  r.m_squared = {m[0] * m[0] + m[1] * m[2], m[0] * m[1] + m[1] * m[3],
                 m[2] * m[0] + m[3] * m[2], m[2] * m[1] + m[3] * m[3]};
  // Roots of lambda^2 - tr lambda + det.
  const double disc = r.trace * r.trace / 4.0 - r.determinant;
  r.max_eigen_modulus = disc >= 0.0 ? std::abs(r.trace / 2.0) + std::sqrt(disc)
                                    : std::sqrt(std::abs(r.determinant));

  ChunkRng rng(seed, 0);
  const double b = band(gains);
  for (std::uint64_t i = 0; i < trials; ++i) {
    // Uniform over M: x1 in the band and h x2 - x1 in the band.
    const double x1 = rng.uniform(-b, b);
    const double w = rng.uniform(-b, b);
    VirtualState x{x1, (w + x1) / h};
    x = proposed_closed_loop_step(x, gains, 0.0);
    x = proposed_closed_loop_step(x, gains, 0.0);
    r.max_abs_x1_after_two = std::max(r.max_abs_x1_after_two, std::abs(x.x1));
    ++r.trials;
  }
  return r;
}

InvarianceReport forward_invariance_check(const GainSet& gains, double L,
                                          std::uint64_t n_states, std::uint64_t n_steps,
                                          std::uint64_t seed) {
  gains.validate();
  if (!(L >= 0.0) || L > gains.beta) {
    throw ParameterError("forward invariance needs 0 <= L <= beta");
  }
  const InvariantSetSpec spec{gains.h, gains.beta};
  const double b = band(gains);
  const double h2 = gains.h * gains.h;

  InvarianceReport r;
  ChunkRng rng(seed, 0);
  std::vector<double> deltas(n_steps);
  std::vector<double> x1s(n_steps + 1);
  for (std::uint64_t s = 0; s < n_states; ++s) {
    const double x1 = rng.uniform(-b, b);
    const double w = rng.uniform(-b, b);
    VirtualState x{x1, (w + x1) / gains.h};
    const std::uint64_t mode = s % 4;
    for (std::uint64_t k = 0; k < n_steps; ++k) {
      switch (mode) {
        case 0: deltas[k] = L; break;
        case 1: deltas[k] = (k % 2 == 0) ? L : -L; break;
        default: deltas[k] = rng.uniform(-L, L); break;
      }
    }
    x1s[0] = x.x1;
    for (std::uint64_t k = 0; k < n_steps; ++k) {
      x = proposed_closed_loop_step(x, gains, deltas[k]);
      x1s[k + 1] = x.x1;
      if (!in_invariant_set(x, spec)) r.stayed_in_set = false;
    }
    for (std::uint64_t k = 0; k + 2 <= n_steps; ++k) {
      r.max_residual = std::max(r.max_residual, std::abs(x1s[k + 2] - h2 * deltas[k]));
    }
    ++r.trajectories;
    r.steps += n_steps;
  }
  return r;
}

}  // namespace stclab

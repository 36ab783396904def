#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "orbitglue/gluing.hpp"
#include "orbitglue/rng.hpp"
#include "orbitglue/suspension.hpp"

namespace orbitglue {

/*
 * Large-deviations toolkit for suspension semiflows: scaled cumulant
 * generating function c(q) and Lambda(q), rate function I(s) by Legendre
 * transform, an independent variational oracle over Markov chains, and
 * seeded Monte Carlo estimators of level-1/level-2 deviation decay.
 */

struct FreeEnergyCurve {
  std::vector<double> q;
  std::vector<double> c;             // root of pressure(phi_bar + q psi_bar - c rho) = 0
  std::vector<double> lambda;        // c(q) - c(0)
  std::vector<double> lambda_prime;  // mean of psi along the flow under the q-equilibrium
};

struct RateValue {
  double rate;
  double q_star;
};

struct RateFunctionProfile {
  std::vector<double> s;
  std::vector<double> rate;    // +infinity where s falls outside the feasible range
  std::vector<double> q_star;  // NaN at infeasible grid points
  double s_min = 0.0;
  double s_max = 0.0;
};

struct EmpiricalDecay {
  std::vector<double> t;
  std::vector<std::uint64_t> counts;
  std::uint64_t samples_per_t = 0;
  std::vector<double> frequency;
  std::vector<double> log_frequency;  // NaN at zero counts (excluded from the fit)
  double slope = 0.0;
  double slope_stderr = 0.0;
  std::size_t fit_points = 0;  // grid points with count >= 30 used in the fit
  std::uint64_t seed = 0;
};

// Observables g_1..g_m with sup norm <= 1; g_i enters the truncated
// weak-* metric with weight 2^{-i}.
struct TestBasis {
  std::vector<FlowObservable> observables;
};

struct TemperedPoint {
  double t;
  double gamma_over_t;
};

// Unique c with pressure(phi_bar + q psi_bar - c rho) = 0: bracketed
// bisection to width 1e-6, then Newton steps (dP/dc = -mean roof under the
// current equilibrium) until |pressure| <= 1e-11. c(0) is the flow
// topological pressure of phi.
double flow_free_energy(const SuspensionSystem& sys, const FlowObservable& phi,
                        const FlowObservable& psi, double q);

FreeEnergyCurve free_energy_curve(const SuspensionSystem& sys, const FlowObservable& phi,
                                  const FlowObservable& psi,
                                  const std::vector<double>& q_grid);

// Range of mean(psi_bar)/mean(rho) over invariant measures: extreme cycle
// ratios on the block graph, located by bisection on Karp cycle means.
std::pair<double, double> feasible_mean_range(const SuspensionSystem& sys,
                                              const FlowObservable& psi);

// I(s) as the Legendre transform of Lambda: solves Lambda'(q) = s
// monotonically on an expanding bracket capped at |q| = 50. Raises
// OutsideFeasibleRange when s is within 1e-9 of (or beyond) the feasible
// endpoints.
RateValue rate_function(const SuspensionSystem& sys, const FlowObservable& phi,
                        const FlowObservable& psi, double s);

RateFunctionProfile rate_function_profile(const SuspensionSystem& sys,
                                          const FlowObservable& phi,
                                          const FlowObservable& psi,
                                          const std::vector<double>& s_grid);

// Direct variational value: minimizes c(0) - (entropy + mean phi_bar)/mean rho
// over stationary chains on the block graph constrained to mean s, by
// penalty continuation + projected gradient from several deterministic
// starts. Independent of the Legendre path; agrees within `resolution` on
// convex instances.
double rate_function_oracle(const SuspensionSystem& sys, const FlowObservable& phi,
                            const FlowObservable& psi, double s, double resolution);

// One draw from the suspension of the chain: a length-`horizon` base word
// closed into a periodic point, accepted with probability roof/sup roof
// (rho-biased base marginal), with height uniform on [0, roof). Consumes
// the stream deterministically.
SuspensionPoint sample_suspension(const SuspensionSystem& sys, const MarkovMeasure& mu,
                                  int horizon, SplitStream& stream);

// For each t: frequency over n_samples fresh draws (stream keyed by
// seed and t_index * n_samples + i) of the event
// (1/t) * birkhoff integral of psi in [lo, hi]; least-squares slope of
// log-frequency over the sub-grid with counts >= 30.
EmpiricalDecay estimate_deviation_level1(const SuspensionSystem& sys,
                                         const MarkovMeasure& mu,
                                         const FlowObservable& psi, double lo, double hi,
                                         const std::vector<double>& t_grid,
                                         std::uint64_t n_samples, std::uint64_t seed,
                                         int workers = 1);

// Level-2 event: sum_i 2^{-i} |(1/t) integral of g_i - center_i| < radius.
EmpiricalDecay estimate_deviation_level2(const SuspensionSystem& sys,
                                         const MarkovMeasure& mu, const TestBasis& basis,
                                         const std::vector<double>& center, double radius,
                                         const std::vector<double>& t_grid,
                                         std::uint64_t n_samples, std::uint64_t seed,
                                         int workers = 1);

// For each t, the largest |integral difference over [0, t]| between a
// sampled orbit and any height-perturbed companion in its (t, delta) flow
// Bowen ball, divided by t. Fiberwise-constant observables over locally
// constant roofs are blind to symbol perturbations past the forced
// agreement depth, so the fiber direction carries the whole variation and
// its supremum is computed exactly (piecewise-linear in the perturbation).
std::vector<TemperedPoint> tempered_variation_profile(const SuspensionSystem& sys,
                                                      const FlowObservable& psi,
                                                      double delta,
                                                      const std::vector<double>& t_grid,
                                                      int n_pairs, std::uint64_t seed);

}  // namespace orbitglue

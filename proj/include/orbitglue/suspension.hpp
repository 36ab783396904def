#pragma once

#include "orbitglue/function.hpp"
#include "orbitglue/thermo.hpp"

namespace orbitglue {

/*
 * Suspension semiflow over the SFT under a locally constant roof bounded
 * away from zero. Points are fiber representatives (x, s) with
 * 0 <= s < roof(x); the identification (x, roof(x)) ~ (shift x, 0) is
 * always resolved to the base of the next fiber.
 */
class SuspensionSystem {
 public:
  SuspensionSystem(TransitionSystem base, LocallyConstantFunction roof);

  const TransitionSystem& base() const { return base_; }
  const LocallyConstantFunction& roof() const { return roof_; }
  double roof_min() const { return roof_min_; }
  double roof_max() const { return roof_max_; }

 private:
  TransitionSystem base_;
  LocallyConstantFunction roof_;
  double roof_min_, roof_max_;
};

struct SuspensionPoint {
  SymbolicPoint base_point;
  double height;
};

// Validates 0 <= height < roof(x).
SuspensionPoint make_suspension_point(const SuspensionSystem& sys, SymbolicPoint x,
                                      double height);

// Observable on the suspension space that is constant along fibers:
// value at (x, s) is fiber_profile(x).
struct FlowObservable {
  LocallyConstantFunction fiber_profile;
};

struct LapNumber {
  long n;          // unique n >= 0 with S_n roof(x) <= s + t < S_{n+1} roof(x)
  double partial;  // s + t - S_n roof(x)
};

// Streams roof values along the orbit with compensated summation, so the
// sandwich stays exact to ~1e-12 over 10^4 laps.
LapNumber lap_number(const SuspensionSystem& sys, const SymbolicPoint& x, double s,
                     double t);

SuspensionPoint flow(const SuspensionSystem& sys, const SuspensionPoint& p, double t);

// Three-branch pseudo-distance on the suspension space, with p1 = (x, t),
// p2 = (y, s):
//   min( d(x,y) + |s-t|,
//        d(shift x, y) + roof(x) - t + s,
//        d(x, shift y) + roof(y) - s + t ).
double d_pi(const SuspensionSystem& sys, const SuspensionPoint& p1,
            const SuspensionPoint& p2);

// Same, on shifted views: point 1 is (shift^a x, ha), point 2 is
// (shift^b y, hb). Avoids materializing shifted points in sampling loops.
double d_pi_shifted(const SuspensionSystem& sys, const SymbolicPoint& x, std::size_t a,
                    double ha, const SymbolicPoint& y, std::size_t b, double hb);

// Fiber integral of the observable: x -> fiber_profile(x) * roof(x).
LocallyConstantFunction reduced_observable(const SuspensionSystem& sys,
                                           const FlowObservable& psi);

// Exact integral of psi along the flow orbit of p over [0, t], by lap
// decomposition (fiberwise-constant integrand).
double birkhoff_flow_integral(const SuspensionSystem& sys, const SuspensionPoint& p,
                              double t, const FlowObservable& psi);

struct AbramovData {
  double flow_entropy;   // h(chain) / mean_roof
  double flow_integral;  // integral of phi_bar / mean_roof
  double mean_roof;      // integral of roof
};

// Transfers base-chain entropy and integrals to the suspension semiflow.
AbramovData abramov(const SuspensionSystem& sys, const MarkovMeasure& eta,
                    const LocallyConstantFunction& phi_bar);

}  // namespace orbitglue

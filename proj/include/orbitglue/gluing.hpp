#pragma once

#include <string>
#include <vector>

#include "orbitglue/suspension.hpp"

namespace orbitglue {

/*
 * Constructive orbit gluing on the shift and on the suspension semiflow.
 *
 * Discrete layer: given segments (x_i, n_i) and a scale eps, produce one
 * eventually periodic point x whose orbit eps-shadows each segment in turn,
 * with transition gaps bounded by N(eps) - 1 where N(eps) = Ntilde + N_eps
 * (Ntilde = worst-case connect time, N_eps = depth_for(eps)).
 *
 * Flow layer: same statement for the suspension semiflow, with real gap
 * times bounded by T(eps) = (N(xi) + 2) * sup roof at the refined scale xi.
 */

struct GluedOrbit {
  SymbolicPoint point;
  std::vector<int> gaps;      // p_i = N_eps + connect(a_i, b_i) - 1
  int bound = 0;              // N(eps)
  double epsilon = 0.0;
  // Construction bookkeeping used by the flow layer and by verification:
  // segment i is shadowed at shift offsets[i], and offsets advance by
  // (lengths[i] - 1) + gaps[i], the number of symbols segment i and its
  // connecting word actually occupy in x.
  std::vector<std::size_t> offsets;
  std::vector<int> lengths;
};

struct FlowGluedOrbit {
  SuspensionPoint start;
  std::vector<double> gaps;             // real transition times p_i
  double bound = 0.0;                   // T(eps)
  double xi = 0.0;                      // internal discrete scale
  std::vector<std::string> case_trace;  // per junction: "i.a", "ii.b", ...
  // Bookkeeping: the discrete gluing behind the construction (at scale xi,
  // lengths laps[i] + 1), the per-segment lap counts, and the flow offsets
  // sum_{l<i} (t_l + p_l) at which segment i's shadow starts.
  GluedOrbit discrete;
  std::vector<long> laps;
  std::vector<double> flow_offsets;
};

struct ShadowSample {
  int segment;
  double t;
  double distance;
};

struct ShadowReport {
  std::vector<double> per_segment_max;
  double step = 0.0;
  double threshold = 0.0;
  double epsilon = 0.0;
  bool pass = false;
  std::vector<ShadowSample> samples;

  double max_distance() const;
};

struct DiscreteSegment {
  SymbolicPoint point;
  int length;  // n_i >= 1
};

struct FlowSegment {
  SuspensionPoint point;
  double duration;  // t_i >= 0
};

// Roof-sum oscillation bound over Bowen balls at scale xi. Locally constant
// roofs of depth k have zero oscillation once xi <= 2^{-(k-1)}; coarser
// scales are rejected rather than estimated.
double distortion_constant(const SuspensionSystem& sys, double xi);

// N(eps) = max connect time + depth_for(eps).
int discrete_gluing_bound(const TransitionSystem& sys, double eps);

// Builds x = w_1 c_1 w_2 c_2 ... w_k (periodic tail), where w_i is the
// (n_i - 1 + N_eps)-prefix of x_i and c_i the interior of the
// lexicographically smallest shortest path between junction symbols.
// Guarantees d(shift^{offsets[i]+j} x, shift^j x_i) < eps for
// 0 <= j <= n_i - 1, and gaps[i] <= N(eps) - 1.
GluedOrbit glue_discrete(const TransitionSystem& sys,
                         const std::vector<DiscreteSegment>& segments, double eps);

// Exhaustively checks the shadowing guarantee above; returns the largest
// shifted distance encountered.
struct DiscreteShadowCheck {
  bool pass = false;
  double max_distance = 0.0;
};
DiscreteShadowCheck verify_discrete_shadowing(const TransitionSystem& sys,
                                              const GluedOrbit& glued,
                                              const std::vector<DiscreteSegment>& segments,
                                              double eps);

// Smallest p in [0, max_gap] such that some length-p word c makes u c v
// admissible, or -1 if none exists. Brute-force oracle for tests.
int oracle_min_gap(const TransitionSystem& sys, const Word& u, const Word& v,
                   int max_gap);

// Scale transfer for the flow construction: xi = min(eps/4, 2^{-(k-1)})
// with k the roof depth (so the roof is exactly constant on xi-close
// pairs), T = (discrete_gluing_bound(xi) + 2) * sup roof.
struct FlowGluingScale {
  double xi;
  double horizon;  // T(eps)
};
FlowGluingScale flow_gluing_scale(const SuspensionSystem& sys, double eps);

// Glues flow segments ((x_i, s_i), t_i): lap counts n_i from the roof,
// discrete gluing at scale xi with lengths n_i + 1, then per junction the
// unique gap time p_i that lands the glued orbit exactly on (.., s_{i+1})
// at the next segment's shift offset. Records the lap-alignment case tag
// per junction. Guarantees 0 < p_i <= T(eps).
FlowGluedOrbit glue_flow(const SuspensionSystem& sys,
                         const std::vector<FlowSegment>& segments, double eps);

// Samples d_pi between the glued orbit and each segment orbit on a grid of
// the given step, plus every fiber-boundary time of either orbit, over
// [0, t_i]. pass iff every per-segment max <= threshold * eps.
ShadowReport verify_flow_shadowing(const SuspensionSystem& sys,
                                   const FlowGluedOrbit& glued,
                                   const std::vector<FlowSegment>& segments, double eps,
                                   double step, double threshold = 3.0);

}  // namespace orbitglue

#include "orbitglue/suspension.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "orbitglue/error.hpp"
#include "orbitglue/numeric.hpp"

namespace orbitglue {

SuspensionSystem::SuspensionSystem(TransitionSystem base, LocallyConstantFunction roof)
    : base_(std::move(base)), roof_(std::move(roof)) {
  roof_min_ = roof_.min_value();
  roof_max_ = roof_.max_value();
  if (!(roof_min_ > 0.0))
    raise(errc::invalid_argument, "roof function must be strictly positive");
}

SuspensionPoint make_suspension_point(const SuspensionSystem& sys, SymbolicPoint x,
                                      double height) {
  const double r = sys.roof().value_shifted(x, 0);
  if (!(height >= 0.0) || !(height < r))
    raise(errc::invalid_argument, "fiber height must lie in [0, roof(x))");
  return SuspensionPoint{std::move(x), height};
}

LapNumber lap_number(const SuspensionSystem& sys, const SymbolicPoint& x, double s,
                     double t) {
  if (t < 0.0) raise(errc::negative_time, "lap_number needs t >= 0");
  const double target = s + t;
  KahanSum birkhoff;
  long n = 0;
  for (;;) {
    const double r = sys.roof().value_shifted(x, static_cast<std::size_t>(n));
    if (birkhoff.with(r) > target) break;
    birkhoff.add(r);
    ++n;
  }
  double partial = target - birkhoff.sum;
  if (partial < 0.0) partial = 0.0;
  // Compensation can leave partial a few ulps at or above the current roof;
  // roll those into the next lap so the representative stays in [0, roof).
  for (;;) {
    const double r = sys.roof().value_shifted(x, static_cast<std::size_t>(n));
    if (partial < r) break;
    partial -= r;
    if (partial < 0.0) partial = 0.0;
    ++n;
  }
  return LapNumber{n, partial};
}

SuspensionPoint flow(const SuspensionSystem& sys, const SuspensionPoint& p, double t) {
  if (t < 0.0) raise(errc::negative_time, "semiflow is defined for t >= 0");
  const LapNumber lap = lap_number(sys, p.base_point, p.height, t);
  SymbolicPoint y = p.base_point;
  for (long j = 0; j < lap.n; ++j) y = y.shifted();
  return SuspensionPoint{std::move(y), lap.partial};
}

double d_pi_shifted(const SuspensionSystem& sys, const SymbolicPoint& x, std::size_t a,
                    double ha, const SymbolicPoint& y, std::size_t b, double hb) {
  const double roof_x = sys.roof().value_shifted(x, a);
  const double roof_y = sys.roof().value_shifted(y, b);
  const double stay = symbol_distance_shifted(x, a, y, b) + std::abs(ha - hb);
  const double push_x = symbol_distance_shifted(x, a + 1, y, b) + (roof_x - ha) + hb;
  const double push_y = symbol_distance_shifted(x, a, y, b + 1) + (roof_y - hb) + ha;
  return std::min({stay, push_x, push_y});
}

double d_pi(const SuspensionSystem& sys, const SuspensionPoint& p1,
            const SuspensionPoint& p2) {
  return d_pi_shifted(sys, p1.base_point, 0, p1.height, p2.base_point, 0, p2.height);
}

LocallyConstantFunction reduced_observable(const SuspensionSystem& sys,
                                           const FlowObservable& psi) {
  const int depth =
      std::max(psi.fiber_profile.depth(), sys.roof().depth());
  const auto words = enumerate_admissible_words(sys.base(), depth);
  std::map<Word, double> values;
  for (const Word& w : words)
    values[w] = psi.fiber_profile.value_word(w) * sys.roof().value_word(w);
  return LocallyConstantFunction(sys.base(), depth, values);
}

double birkhoff_flow_integral(const SuspensionSystem& sys, const SuspensionPoint& p,
                              double t, const FlowObservable& psi) {
  if (t < 0.0) raise(errc::negative_time, "flow integral needs t >= 0");
  const LapNumber lap = lap_number(sys, p.base_point, p.height, t);
  KahanSum acc;
  for (long j = 0; j < lap.n; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    acc.add(psi.fiber_profile.value_shifted(p.base_point, sj) *
            sys.roof().value_shifted(p.base_point, sj));
  }
  acc.add(psi.fiber_profile.value_shifted(p.base_point, static_cast<std::size_t>(lap.n)) *
          lap.partial);
  acc.add(-psi.fiber_profile.value_shifted(p.base_point, 0) * p.height);
  return acc.sum;
}

AbramovData abramov(const SuspensionSystem& sys, const MarkovMeasure& eta,
                    const LocallyConstantFunction& phi_bar) {
  const auto [entropy, phi_mean] = measure_stats(eta, phi_bar);
  const auto [entropy_again, mean_roof] = measure_stats(eta, sys.roof());
  (void)entropy_again;
  if (!(mean_roof > 0.0))
    raise(errc::invalid_argument, "mean roof must be positive");
  return AbramovData{entropy / mean_roof, phi_mean / mean_roof, mean_roof};
}

}  // namespace orbitglue

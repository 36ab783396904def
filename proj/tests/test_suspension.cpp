#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "orbitglue/suspension.hpp"

using namespace orbitglue;

namespace {

Word W(const char* s) {
  Word w;
  for (; *s; ++s) w.push_back(*s - 'a');
  return w;
}

SymbolicPoint pt(const char* pre, const char* cyc) { return SymbolicPoint(W(pre), W(cyc)); }

TransitionSystem full2() { return TransitionSystem({{1, 1}, {1, 1}}); }
TransitionSystem golden() { return TransitionSystem({{1, 1}, {1, 0}}); }

const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;

SuspensionSystem unit_full2() {
  TransitionSystem f = full2();
  return SuspensionSystem(f, LocallyConstantFunction::constant(f, 1.0));
}

SuspensionSystem golden_roof(double ra, double rb) {
  TransitionSystem g = golden();
  return SuspensionSystem(g, LocallyConstantFunction(g, 1, {{W("a"), ra}, {W("b"), rb}}));
}

template <typename F>
errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error to be thrown");
  return errc::invalid_argument;
}

}  // namespace

TEST_CASE("suspension construction requires a positive roof") {
  TransitionSystem f = full2();
  CHECK(code_of([&] { SuspensionSystem(f, LocallyConstantFunction::constant(f, 0.0)); }) ==
        errc::invalid_argument);
  SuspensionSystem sys = golden_roof(1.0, 1.5);
  CHECK(sys.roof_min() == 1.0);
  CHECK(sys.roof_max() == 1.5);
}

TEST_CASE("fiber representative validation") {
  SuspensionSystem sys = unit_full2();
  SymbolicPoint x = pt("", "ab");
  SuspensionPoint p = make_suspension_point(sys, x, 0.5);
  CHECK(p.height == 0.5);
  CHECK(code_of([&] { make_suspension_point(sys, x, 1.0); }) == errc::invalid_argument);
  CHECK(code_of([&] { make_suspension_point(sys, x, -0.1); }) == errc::invalid_argument);
}

TEST_CASE("lap numbers") {
  SuspensionSystem unit = unit_full2();
  SymbolicPoint x = pt("", "ab");
  LapNumber l1 = lap_number(unit, x, 0.5, 3.2);
  CHECK(l1.n == 3);
  CHECK(std::abs(l1.partial - 0.7) < 1e-12);

  SuspensionSystem g = golden_roof(1.0, 2.0);
  LapNumber l2 = lap_number(g, pt("", "ab"), 0.0, 4.5);
  CHECK(l2.n == 3);
  CHECK(std::abs(l2.partial - 0.5) < 1e-12);

  LapNumber l3 = lap_number(unit, x, 0.25, 0.0);
  CHECK(l3.n == 0);
  CHECK(l3.partial == 0.25);

  CHECK(code_of([&] { lap_number(unit, x, 0.0, -1.0); }) == errc::negative_time);

  // The sandwich S_n <= s + t < S_{n+1} holds over many laps.
  SuspensionSystem gr = golden_roof(1.0, 1.5);
  SymbolicPoint y = pt("", "aab");
  for (double t : {10.0, 100.0, 5000.0}) {
    LapNumber l = lap_number(gr, y, 0.3, t);
    double sn = 0.0;
    for (long j = 0; j < l.n; ++j) sn += gr.roof().value_shifted(y, static_cast<std::size_t>(j));
    double next = sn + gr.roof().value_shifted(y, static_cast<std::size_t>(l.n));
    CHECK(sn <= 0.3 + t + 1e-9);
    CHECK(0.3 + t < next + 1e-9);
    CHECK(std::abs(l.partial - (0.3 + t - sn)) < 1e-9);
  }
}

TEST_CASE("flow map examples") {
  SuspensionSystem unit = unit_full2();
  SymbolicPoint x = pt("", "ab");
  SuspensionPoint p = make_suspension_point(unit, x, 0.4);

  SuspensionPoint q0 = flow(unit, p, 0.0);
  CHECK(q0.base_point == x);
  CHECK(q0.height == 0.4);

  SuspensionPoint q = flow(unit, make_suspension_point(unit, x, 0.0), 2.25);
  CHECK(q.base_point == x);  // shift twice returns the period-2 point
  CHECK(std::abs(q.height - 0.25) < 1e-12);

  SuspensionSystem g = golden_roof(1.0, 2.0);
  SuspensionPoint r = flow(g, make_suspension_point(g, pt("", "ab"), 0.0), 3.0);
  CHECK(r.base_point == pt("", "ab"));
  CHECK(std::abs(r.height) < 1e-12);

  CHECK(code_of([&] { flow(unit, p, -0.5); }) == errc::negative_time);
}

TEST_CASE("flow preserves the fiber representative invariant") {
  SuspensionSystem sys = golden_roof(1.0, 1.5);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> tt(0.0, 40.0);
  std::vector<SymbolicPoint> pool = {pt("", "a"), pt("", "ab"), pt("aab", "ab"), pt("", "aabab")};
  for (const auto& x : pool)
    for (int k = 0; k < 50; ++k) {
      SuspensionPoint p = make_suspension_point(sys, x, 0.0);
      SuspensionPoint q = flow(sys, p, tt(rng));
      double roof_q = sys.roof().value_shifted(q.base_point, 0);
      CHECK(q.height >= 0.0);
      CHECK(q.height < roof_q);
    }
}

TEST_CASE("semigroup law up to rounding") {
  SuspensionSystem sys = golden_roof(1.0, 1.5);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> tt(0.0, 25.0);
  std::uniform_real_distribution<double> hh(0.0, 1.0);
  std::vector<SymbolicPoint> pool = {pt("", "a"), pt("", "ab"), pt("b", "aab"), pt("", "aabab")};
  for (int k = 0; k < 200; ++k) {
    const SymbolicPoint& x = pool[k % pool.size()];
    double roof = sys.roof().value_shifted(x, 0);
    SuspensionPoint p = make_suspension_point(sys, x, hh(rng) * roof);
    double t1 = tt(rng), t2 = tt(rng);
    SuspensionPoint two = flow(sys, flow(sys, p, t1), t2);
    SuspensionPoint one = flow(sys, p, t1 + t2);
    CHECK(d_pi(sys, two, one) <= 1e-9 * (1.0 + t1 + t2));
  }
}

TEST_CASE("pseudo-distance examples") {
  SuspensionSystem unit = unit_full2();
  SymbolicPoint x = pt("", "ab");
  SuspensionPoint p = make_suspension_point(unit, x, 0.2);
  CHECK(d_pi(unit, p, p) == 0.0);

  SuspensionPoint q = make_suspension_point(unit, x, 0.5);
  CHECK(std::abs(d_pi(unit, p, q) - 0.3) < 1e-12);

  // Branch 2: flowing almost a full fiber toward the shifted point.
  SymbolicPoint sx = pt("", "ba");
  SuspensionPoint hi = make_suspension_point(unit, x, 0.9);
  SuspensionPoint lo = make_suspension_point(unit, sx, 0.05);
  CHECK(std::abs(d_pi(unit, hi, lo) - 0.15) < 1e-12);
}

TEST_CASE("pseudo-distance properties") {
  SuspensionSystem sys = golden_roof(1.0, 1.5);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> hh(0.0, 1.0);
  std::vector<SymbolicPoint> pool = {pt("", "a"), pt("", "ab"), pt("aab", "ab"), pt("", "aabab")};
  std::vector<SuspensionPoint> pts;
  for (const auto& x : pool)
    for (int k = 0; k < 5; ++k)
      pts.push_back(make_suspension_point(sys, x, hh(rng) * sys.roof().value_shifted(x, 0)));
  for (const auto& a : pts) {
    CHECK(d_pi(sys, a, a) == 0.0);
    for (const auto& b : pts) {
      double dab = d_pi(sys, a, b);
      CHECK(dab >= 0.0);
      CHECK(dab == d_pi(sys, b, a));
    }
  }
}

TEST_CASE("d_pi_shifted matches materialized shifts") {
  SuspensionSystem sys = golden_roof(1.0, 1.5);
  SymbolicPoint x = pt("", "aabab"), y = pt("ab", "aab");
  TransitionSystem base = golden();
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      SymbolicPoint xs = x, ys = y;
      for (std::size_t i = 0; i < a; ++i) xs = shift(base, xs);
      for (std::size_t i = 0; i < b; ++i) ys = shift(base, ys);
      double ha = 0.5 * sys.roof().value_shifted(xs, 0);
      double hb = 0.25 * sys.roof().value_shifted(ys, 0);
      double lazy = d_pi_shifted(sys, x, a, ha, y, b, hb);
      double direct = d_pi(sys, make_suspension_point(sys, xs, ha),
                           make_suspension_point(sys, ys, hb));
      CHECK(std::abs(lazy - direct) < 1e-15);
    }
}

TEST_CASE("reduced observables are fiber integrals") {
  SuspensionSystem unit = unit_full2();
  TransitionSystem f = full2();
  FlowObservable one{LocallyConstantFunction::constant(f, 1.0)};
  LocallyConstantFunction r1 = reduced_observable(unit, one);
  CHECK(r1.value_word(W("a")) == 1.0);
  CHECK(r1.value_word(W("b")) == 1.0);

  FlowObservable ind{LocallyConstantFunction::cylinder_indicator(f, 0)};
  LocallyConstantFunction r2 = reduced_observable(unit, ind);
  CHECK(r2.value_word(W("a")) == 1.0);
  CHECK(r2.value_word(W("b")) == 0.0);

  SuspensionSystem g = golden_roof(1.0, 2.0);
  TransitionSystem gb = golden();
  FlowObservable indg{LocallyConstantFunction::cylinder_indicator(gb, 0)};
  LocallyConstantFunction r3 = reduced_observable(g, indg);
  CHECK(r3.value_word(W("ab")) == 1.0);
  CHECK(r3.value_word(W("ba")) == 0.0);
}

TEST_CASE("Birkhoff flow integrals") {
  SuspensionSystem unit = unit_full2();
  TransitionSystem f = full2();
  SymbolicPoint x = pt("", "ab");
  FlowObservable one{LocallyConstantFunction::constant(f, 1.0)};
  FlowObservable ind{LocallyConstantFunction::cylinder_indicator(f, 0)};
  SuspensionPoint p = make_suspension_point(unit, x, 0.0);

  for (double t : {0.0, 1.0, 3.7, 10.0})
    CHECK(std::abs(birkhoff_flow_integral(unit, p, t, one) - t) < 1e-12);
  CHECK(std::abs(birkhoff_flow_integral(unit, p, 4.0, ind) - 2.0) < 1e-12);
  CHECK(birkhoff_flow_integral(unit, p, 0.0, ind) == 0.0);
  CHECK(code_of([&] { birkhoff_flow_integral(unit, p, -1.0, ind); }) == errc::negative_time);

  // Additivity over consecutive windows.
  SuspensionSystem g = golden_roof(1.0, 1.5);
  TransitionSystem gb = golden();
  FlowObservable indg{LocallyConstantFunction::cylinder_indicator(gb, 0)};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tt(0.0, 30.0);
  for (int k = 0; k < 100; ++k) {
    SymbolicPoint y = pt("", "aabab");
    SuspensionPoint q = make_suspension_point(g, y, 0.7);
    double t1 = tt(rng), t2 = tt(rng);
    double whole = birkhoff_flow_integral(g, q, t1 + t2, indg);
    double first = birkhoff_flow_integral(g, q, t1, indg);
    double rest = birkhoff_flow_integral(g, flow(g, q, t1), t2, indg);
    CHECK(std::abs(whole - (first + rest)) < 1e-9);
  }
}

TEST_CASE("Abramov identities") {
  TransitionSystem f = full2(), gb = golden();

  // Unit roof: flow quantities coincide with chain quantities.
  SuspensionSystem unit = unit_full2();
  LocallyConstantFunction phi(f, 1, {{W("a"), 0.3}, {W("b"), -0.8}});
  MarkovMeasure uni = equilibrium_markov(f, LocallyConstantFunction::constant(f, 0.0));
  AbramovData a1 = abramov(unit, uni, phi);
  auto [h, integral] = measure_stats(uni, phi);
  CHECK(std::abs(a1.flow_entropy - h) < 1e-12);
  CHECK(std::abs(a1.flow_integral - integral) < 1e-12);
  CHECK(std::abs(a1.mean_roof - 1.0) < 1e-12);

  // Constant roof 2 halves the Parry entropy.
  SuspensionSystem half(gb, LocallyConstantFunction::constant(gb, 2.0));
  MarkovMeasure parry = equilibrium_markov(gb, LocallyConstantFunction::constant(gb, 0.0));
  AbramovData a2 = abramov(half, parry, LocallyConstantFunction::constant(gb, 0.0));
  CHECK(std::abs(a2.flow_entropy - std::log(kPhi) / 2.0) < 1e-12);
  CHECK(a2.flow_integral == 0.0);
  CHECK(std::abs(a2.mean_roof - 2.0) < 1e-12);

  // Bernoulli(1/2) with roof 1 on [a], 3 on [b]: mean roof 2.
  SuspensionSystem skew(f, LocallyConstantFunction(f, 1, {{W("a"), 1.0}, {W("b"), 3.0}}));
  AbramovData a3 = abramov(skew, uni, LocallyConstantFunction::constant(f, 0.0));
  CHECK(std::abs(a3.mean_roof - 2.0) < 1e-12);
  CHECK(std::abs(a3.flow_entropy - std::log(2.0) / 2.0) < 1e-12);

  // flow_entropy * mean_roof recovers the chain entropy exactly.
  for (const AbramovData& a : {a1, a2, a3}) CHECK(a.mean_roof > 0.0);
  CHECK(std::abs(a2.flow_entropy * a2.mean_roof - std::log(kPhi)) < 1e-12);
  CHECK(std::abs(a3.flow_entropy * a3.mean_roof - std::log(2.0)) < 1e-12);
}

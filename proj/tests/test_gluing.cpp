#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "orbitglue/gluing.hpp"

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

// Smallest interior length p in [0, max_gap] such that u c v is admissible
// for some word c of length p, by literal enumeration over all d^p words.
int brute_min_gap(const TransitionSystem& sys, const Word& u, const Word& v, int max_gap) {
  int d = sys.alphabet_size();
  for (int p = 0; p <= max_gap; ++p) {
    std::vector<int> c(static_cast<std::size_t>(p), 0);
    while (true) {
      Word joined = u;
      joined.insert(joined.end(), c.begin(), c.end());
      joined.insert(joined.end(), v.begin(), v.end());
      if (sys.word_admissible(joined)) return p;
      int i = p - 1;
      for (; i >= 0; --i) {
        if (++c[static_cast<std::size_t>(i)] < d) break;
        c[static_cast<std::size_t>(i)] = 0;
      }
      if (i < 0) break;
    }
  }
  return -1;
}

SymbolicPoint random_point(const TransitionSystem& sys, std::mt19937_64& rng) {
  Word w;
  w.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(sys.alphabet_size())));
  for (int j = 1; j < 10; ++j) {
    const auto& next = sys.successors(w.back());
    w.push_back(next[rng() % next.size()]);
  }
  return extend_prefix_periodically(sys, w);
}

}  // namespace

TEST_CASE("distortion constant vanishes once the roof is resolved") {
  SuspensionSystem flat = golden_roof(1.0, 1.5);  // depth-1 roof
  CHECK(distortion_constant(flat, 0.5) == 0.0);

  TransitionSystem g = golden();
  SuspensionSystem deep(g, LocallyConstantFunction::constant(g, 1.0).recoded(g, 3));
  CHECK(distortion_constant(deep, 0.2) == 0.0);
  CHECK(code_of([&] { distortion_constant(deep, 0.3); }) == errc::scale_too_coarse);
}

TEST_CASE("discrete gluing bound") {
  CHECK(discrete_gluing_bound(full2(), 0.2) == 4);
  CHECK(discrete_gluing_bound(golden(), 0.5) == 4);
  CHECK(discrete_gluing_bound(golden(), 2.0) == 2);
  CHECK(code_of([] { discrete_gluing_bound(golden(), 0.0); }) == errc::non_positive_epsilon);
}

TEST_CASE("two-segment gluing on the golden mean, worked instance") {
  TransitionSystem g = golden();
  std::vector<DiscreteSegment> segs = {{pt("", "a"), 3}, {pt("", "ab"), 3}};
  GluedOrbit orbit = glue_discrete(g, segs, 0.5);

  CHECK(orbit.bound == 4);
  REQUIRE(orbit.gaps.size() == 1);
  CHECK(orbit.gaps[0] == 2);
  CHECK(orbit.epsilon == 0.5);
  CHECK(orbit.point.prefix(8) == W("aaaaabab"));
  REQUIRE(orbit.offsets.size() == 2);
  CHECK(orbit.offsets[0] == 0);
  CHECK(orbit.offsets[1] == 4);
  CHECK(orbit.lengths == std::vector<int>{3, 3});

  // All eight shadowing inequalities, spelled out.
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (int j = 0; j < segs[i].length; ++j) {
      double d = symbol_distance_shifted(orbit.point, orbit.offsets[i] + static_cast<std::size_t>(j),
                                         segs[i].point, static_cast<std::size_t>(j));
      CHECK(d < 0.5);
    }
  DiscreteShadowCheck check = verify_discrete_shadowing(g, orbit, segs, 0.5);
  CHECK(check.pass);
  CHECK(check.max_distance < 0.5);

  // Determinism.
  GluedOrbit again = glue_discrete(g, segs, 0.5);
  CHECK(again.point == orbit.point);
  CHECK(again.gaps == orbit.gaps);
}

TEST_CASE("single segment gluing is the Bowen prefix extension") {
  TransitionSystem g = golden();
  std::vector<DiscreteSegment> segs = {{pt("", "ab"), 4}};
  GluedOrbit orbit = glue_discrete(g, segs, 0.25);
  CHECK(orbit.gaps.empty());
  CHECK(orbit.point.prefix(6) == pt("", "ab").prefix(6));  // 4 - 1 + 3
  CHECK(verify_discrete_shadowing(g, orbit, segs, 0.25).pass);
}

TEST_CASE("exhaustive gluing of short cylinder pairs with oracle cross-check") {
  for (const auto& sys : {full2(), golden()}) {
    for (double eps : {0.5, 0.25}) {
      int n_eps = depth_for(eps);
      int bound = discrete_gluing_bound(sys, eps);
      for (int n1 = 1; n1 <= 4; ++n1)
        for (int n2 = 1; n2 <= 4; ++n2)
          for (const Word& w1 : enumerate_admissible_words(sys, n1))
            for (const Word& w2 : enumerate_admissible_words(sys, n2)) {
              std::vector<DiscreteSegment> segs = {
                  {extend_prefix_periodically(sys, w1), n1},
                  {extend_prefix_periodically(sys, w2), n2}};
              GluedOrbit orbit = glue_discrete(sys, segs, eps);
              REQUIRE(orbit.gaps.size() == 1);
              CHECK(orbit.gaps[0] <= bound - 1);
              CHECK(orbit.gaps[0] >= 0);
              CHECK(verify_discrete_shadowing(sys, orbit, segs, eps).pass);

              Word u = bowen_cylinder(sys, segs[0].point, n1, eps).symbols;
              Word v = bowen_cylinder(sys, segs[1].point, n2, eps).symbols;
              int lib = oracle_min_gap(sys, u, v, bound);
              int brute = brute_min_gap(sys, u, v, bound);
              CHECK(lib == brute);
              REQUIRE(lib >= 0);
              CHECK(lib <= bound - 1 - n_eps);
              CHECK(orbit.gaps[0] == n_eps + lib);
            }
    }
  }
}

TEST_CASE("three segments accumulate offsets") {
  TransitionSystem g = golden();
  std::vector<DiscreteSegment> segs = {{pt("", "ab"), 2}, {pt("", "a"), 3}, {pt("b", "a"), 2}};
  double eps = 0.25;
  GluedOrbit orbit = glue_discrete(g, segs, eps);
  REQUIRE(orbit.gaps.size() == 2);
  for (int p : orbit.gaps) {
    CHECK(p >= 0);
    CHECK(p <= orbit.bound - 1);
  }
  for (std::size_t i = 0; i + 1 < segs.size(); ++i)
    CHECK(orbit.offsets[i + 1] ==
          orbit.offsets[i] + static_cast<std::size_t>(orbit.lengths[i] - 1 + orbit.gaps[i]));
  CHECK(verify_discrete_shadowing(g, orbit, segs, eps).pass);
}

TEST_CASE("bounds are monotone in epsilon") {
  TransitionSystem g = golden();
  SuspensionSystem sys = golden_roof(1.0, 1.5);
  std::vector<double> grid = {2.0, 1.0, 0.5, 0.25, 0.125, 0.0625};
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    CHECK(discrete_gluing_bound(g, grid[i + 1]) >= discrete_gluing_bound(g, grid[i]));
    CHECK(flow_gluing_scale(sys, grid[i + 1]).horizon >= flow_gluing_scale(sys, grid[i]).horizon);
  }
}

TEST_CASE("flow gluing scale") {
  SuspensionSystem g = golden_roof(1.0, 1.5);
  FlowGluingScale s1 = flow_gluing_scale(g, 0.2);
  CHECK(s1.xi == 0.05);
  CHECK(s1.horizon == doctest::Approx((2 + 5 + 2) * 1.5).epsilon(1e-12));

  TransitionSystem f = full2();
  SuspensionSystem unit(f, LocallyConstantFunction::constant(f, 1.0));
  FlowGluingScale s2 = flow_gluing_scale(unit, 0.2);
  CHECK(s2.xi == 0.05);
  CHECK(s2.horizon == doctest::Approx(8.0).epsilon(1e-12));

  // Coarse scale: xi is capped by the roof resolution 2^{-(k-1)} = 1, and
  // the horizon follows the defining formula (Ntilde + depth_for(xi) + 2) * sup roof.
  FlowGluingScale s3 = flow_gluing_scale(unit, 4.0);
  CHECK(s3.xi == 1.0);
  CHECK(s3.horizon == doctest::Approx((1 + depth_for(1.0) + 2) * 1.0).epsilon(1e-12));

  // Depth-2 roof lowers the cap to 1/2.
  TransitionSystem gb = golden();
  SuspensionSystem deep(gb, LocallyConstantFunction::constant(gb, 1.0).recoded(gb, 2));
  CHECK(flow_gluing_scale(deep, 4.0).xi == 0.5);
}

TEST_CASE("unit roof flow gluing lands exactly (case i)") {
  TransitionSystem f = full2();
  SuspensionSystem unit(f, LocallyConstantFunction::constant(f, 1.0));
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> tt(0.0, 30.0);
  std::uniform_real_distribution<double> hh(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<FlowSegment> segs;
    for (int i = 0; i < 2; ++i) {
      SymbolicPoint x = random_point(f, rng);
      segs.push_back({SuspensionPoint{x, hh(rng) * 0.999}, tt(rng)});
    }
    FlowGluedOrbit orbit = glue_flow(unit, segs, 0.2);
    REQUIRE(orbit.case_trace.size() == 1);
    CHECK(orbit.case_trace[0].substr(0, 2) == "i.");
    REQUIRE(orbit.gaps.size() == 1);
    CHECK(orbit.gaps[0] > 0.0);
    CHECK(orbit.gaps[0] <= orbit.bound);
    CHECK(orbit.start.height == segs[0].point.height);
    CHECK(orbit.flow_offsets[0] == 0.0);
    CHECK(std::abs(orbit.flow_offsets[1] - (segs[0].duration + orbit.gaps[0])) < 1e-12);
  }
}

TEST_CASE("gap bounds hold across 1000 seeded random flow instances") {
  SuspensionSystem sys = golden_roof(1.0, 1.5);
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> tt(0.0, 50.0);
  std::uniform_real_distribution<double> hh(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    double eps = (k % 2 == 0) ? 0.2 : 0.1;
    int n_segs = 2 + (k % 3 == 0 ? 1 : 0);
    std::vector<FlowSegment> segs;
    for (int i = 0; i < n_segs; ++i) {
      SymbolicPoint x = random_point(sys.base(), rng);
      double roof = sys.roof().value_shifted(x, 0);
      segs.push_back({SuspensionPoint{x, hh(rng) * roof}, tt(rng)});
    }
    FlowGluedOrbit orbit = glue_flow(sys, segs, eps);
    double horizon = flow_gluing_scale(sys, eps).horizon;
    CHECK(orbit.bound == horizon);
    REQUIRE(orbit.gaps.size() == segs.size() - 1);
    for (double p : orbit.gaps) {
      CHECK(p > 0.0);
      CHECK(p <= horizon);
    }
    REQUIRE(orbit.case_trace.size() == segs.size() - 1);
    for (std::size_t i = 0; i + 1 < segs.size(); ++i)
      CHECK(std::abs(orbit.flow_offsets[i + 1] -
                     (orbit.flow_offsets[i] + segs[i].duration + orbit.gaps[i])) < 1e-9);
  }
}

TEST_CASE("flow shadowing verification on random instances") {
  SuspensionSystem sys = golden_roof(1.0, 1.5);
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> tt(0.5, 20.0);
  std::uniform_real_distribution<double> hh(0.0, 1.0);
  double eps = 0.2;
  for (int k = 0; k < 20; ++k) {
    std::vector<FlowSegment> segs;
    for (int i = 0; i < 2; ++i) {
      SymbolicPoint x = random_point(sys.base(), rng);
      double roof = sys.roof().value_shifted(x, 0);
      segs.push_back({SuspensionPoint{x, hh(rng) * roof}, tt(rng)});
    }
    FlowGluedOrbit orbit = glue_flow(sys, segs, eps);
    ShadowReport report = verify_flow_shadowing(sys, orbit, segs, eps, 0.01);
    CHECK(report.pass);
    CHECK(report.max_distance() <= 3.0 * eps);
    REQUIRE(report.per_segment_max.size() == 2);

    // A corrupted start offset for segment 2 must be caught.
    FlowGluedOrbit bad = orbit;
    bad.flow_offsets[1] += sys.roof_max();
    bad.gaps[0] += sys.roof_max();
    ShadowReport caught = verify_flow_shadowing(sys, bad, segs, eps, 0.01);
    CHECK(!caught.pass);
  }
}

TEST_CASE("flow gluing is deterministic") {
  SuspensionSystem sys = golden_roof(1.0, 1.5);
  std::vector<FlowSegment> segs = {{SuspensionPoint{pt("", "ab"), 0.3}, 7.25},
                                   {SuspensionPoint{pt("", "ba"), 1.1}, 4.0}};
  FlowGluedOrbit a = glue_flow(sys, segs, 0.1);
  FlowGluedOrbit b = glue_flow(sys, segs, 0.1);
  CHECK(a.start.base_point == b.start.base_point);
  CHECK(a.start.height == b.start.height);
  CHECK(a.gaps == b.gaps);
  CHECK(a.case_trace == b.case_trace);
  CHECK(a.discrete.point == b.discrete.point);
}

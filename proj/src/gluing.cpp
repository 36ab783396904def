#include "orbitglue/gluing.hpp"

#include <algorithm>
#include <cmath>

#include "orbitglue/error.hpp"
#include "orbitglue/numeric.hpp"

namespace orbitglue {

double ShadowReport::max_distance() const {
  double m = 0.0;
  for (double v : per_segment_max) m = std::max(m, v);
  return m;
}

double distortion_constant(const SuspensionSystem& sys, double xi) {
  if (!(xi > 0.0)) raise(errc::non_positive_epsilon, "scale must be positive");
  const int k = sys.roof().depth();
  const double threshold = std::ldexp(1.0, -(k - 1));
  if (xi > threshold)
    raise(errc::scale_too_coarse,
          "roof of depth " + std::to_string(k) + " needs scale <= 2^-(k-1)");
  // Points xi-close along a whole orbit segment agree on every symbol the
  // roof reads, so their partial roof sums coincide exactly.
  return 0.0;
}

int discrete_gluing_bound(const TransitionSystem& sys, double eps) {
  return sys.max_connect_time() + depth_for(eps);
}

GluedOrbit glue_discrete(const TransitionSystem& sys,
                         const std::vector<DiscreteSegment>& segments, double eps) {
  if (segments.empty()) raise(errc::invalid_argument, "need at least one segment");
  const int n_eps = depth_for(eps);
  for (const DiscreteSegment& seg : segments) {
    if (seg.length < 1) raise(errc::invalid_argument, "segment length must be >= 1");
    if (!point_admissible(sys, seg.point))
      raise(errc::invalid_argument, "segment point is not admissible");
    if (seg.length - 1 + n_eps < 1)
      raise(errc::scale_too_coarse,
            "scale leaves an empty prefix for a length-1 segment");
  }

  Word word;
  std::vector<int> gaps;
  std::vector<std::size_t> offsets;
  std::vector<int> lengths;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto prefix_len = static_cast<std::size_t>(segments[i].length - 1 + n_eps);
    offsets.push_back(word.size());
    lengths.push_back(segments[i].length);
    const Word w_i = segments[i].point.prefix(prefix_len);
    word.insert(word.end(), w_i.begin(), w_i.end());
    if (i + 1 < segments.size()) {
      const int from = word.back();
      const int to = segments[i + 1].point.at(0);
      const std::vector<int> path = sys.shortest_path(from, to);
      word.insert(word.end(), path.begin() + 1, path.end() - 1);
      const int connect = static_cast<int>(path.size()) - 1;
      gaps.push_back(n_eps + connect - 1);
    }
  }
  return GluedOrbit{extend_prefix_periodically(sys, word), std::move(gaps),
                    discrete_gluing_bound(sys, eps), eps, std::move(offsets),
                    std::move(lengths)};
}

DiscreteShadowCheck verify_discrete_shadowing(const TransitionSystem& sys,
                                              const GluedOrbit& glued,
                                              const std::vector<DiscreteSegment>& segments,
                                              double eps) {
  (void)sys;
  DiscreteShadowCheck check;
  check.pass = true;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (int j = 0; j < segments[i].length; ++j) {
      const double d = symbol_distance_shifted(
          glued.point, glued.offsets[i] + static_cast<std::size_t>(j),
          segments[i].point, static_cast<std::size_t>(j));
      check.max_distance = std::max(check.max_distance, d);
      if (!(d < eps)) check.pass = false;
    }
  }
  return check;
}

int oracle_min_gap(const TransitionSystem& sys, const Word& u, const Word& v,
                   int max_gap) {
  if (u.empty() || v.empty()) raise(errc::invalid_argument, "oracle needs nonempty words");
  if (!sys.word_admissible(u) || !sys.word_admissible(v))
    raise(errc::invalid_argument, "oracle needs admissible words");
  const int d = sys.alphabet_size();
  const int a = u.back();
  const int b = v.front();
  // reach[i][j] after p iterations: a path of exactly p+1 edges exists, so a
  // length-p interior word glues u to v.
  std::vector<std::uint8_t> reach(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      reach[static_cast<std::size_t>(i) * d + j] = sys.allowed(i, j) ? 1 : 0;
  for (int p = 0; p <= max_gap; ++p) {
    if (reach[static_cast<std::size_t>(a) * d + b]) return p;
    std::vector<std::uint8_t> next(static_cast<std::size_t>(d) * d, 0);
    for (int i = 0; i < d; ++i)
      for (int m = 0; m < d; ++m)
        if (reach[static_cast<std::size_t>(i) * d + m])
          for (int j : sys.successors(m)) next[static_cast<std::size_t>(i) * d + j] = 1;
    reach.swap(next);
  }
  return -1;
}

FlowGluingScale flow_gluing_scale(const SuspensionSystem& sys, double eps) {
  if (!(eps > 0.0)) raise(errc::non_positive_epsilon, "scale must be positive");
  const int k = sys.roof().depth();
  const double xi = std::min(eps / 4.0, std::ldexp(1.0, -(k - 1)));
  (void)distortion_constant(sys, xi);  // zero by choice of xi
  const double horizon =
      (discrete_gluing_bound(sys.base(), xi) + 2) * sys.roof_max();
  return FlowGluingScale{xi, horizon};
}

namespace {

// Prefix sums S[m] = roof(x) + ... + roof(shift^{m-1} x), grown on demand.
class RoofSums {
 public:
  RoofSums(const SuspensionSystem& sys, const SymbolicPoint& x) : sys_(sys), x_(x) {
    sums_.push_back(0.0);
  }

  double upto(std::size_t m) {
    while (sums_.size() <= m) {
      acc_.add(sys_.roof().value_shifted(x_, sums_.size() - 1));
      sums_.push_back(acc_.sum);
    }
    return sums_[m];
  }

  // Lap m and fiber height of the orbit of (x, 0) at elapsed time target.
  std::pair<std::size_t, double> locate(double target) {
    std::size_t m = 0;
    while (upto(m + 1) <= target) ++m;
    double h = target - upto(m);
    return {m, h < 0.0 ? 0.0 : h};
  }

 private:
  const SuspensionSystem& sys_;
  const SymbolicPoint& x_;
  std::vector<double> sums_;
  KahanSum acc_;
};

}  // namespace

FlowGluedOrbit glue_flow(const SuspensionSystem& sys,
                         const std::vector<FlowSegment>& segments, double eps) {
  if (segments.empty()) raise(errc::invalid_argument, "need at least one segment");
  const FlowGluingScale scale = flow_gluing_scale(sys, eps);

  std::vector<DiscreteSegment> discrete_segments;
  std::vector<long> laps;
  for (const FlowSegment& seg : segments) {
    if (seg.duration < 0.0) raise(errc::negative_time, "segment durations must be >= 0");
    const double roof = sys.roof().value_shifted(seg.point.base_point, 0);
    if (!(seg.point.height >= 0.0) || !(seg.point.height < roof))
      raise(errc::invalid_argument, "segment height must lie in [0, roof(x))");
    const LapNumber lap =
        lap_number(sys, seg.point.base_point, seg.point.height, seg.duration);
    laps.push_back(lap.n);
    discrete_segments.push_back(
        DiscreteSegment{seg.point.base_point, static_cast<int>(lap.n) + 1});
  }

  GluedOrbit discrete = glue_discrete(sys.base(), discrete_segments, scale.xi);
  FlowGluedOrbit out{SuspensionPoint{discrete.point, segments[0].point.height},
                     {},
                     scale.horizon,
                     scale.xi,
                     {},
                     std::move(discrete),
                     std::move(laps),
                     {0.0}};

  RoofSums sums(sys, out.discrete.point);
  // Elapsed flow time from (x, s_1), tracked as target = s_1 + elapsed.
  double target = segments[0].point.height;
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    target += segments[i].duration;

    // Lap alignment at the end of segment i, relative to the lap the
    // discrete construction reserved for it.
    const auto [lap_end, fiber_end] = sums.locate(target);
    (void)fiber_end;
    const long expected =
        static_cast<long>(out.discrete.offsets[i]) + out.laps[i];
    const long lap_shift = static_cast<long>(lap_end) - expected;
    const char* tag = lap_shift == 0 ? "i" : (lap_shift == 1 ? "ii" : "iii");

    const std::size_t next_offset = out.discrete.offsets[i + 1];
    const double s_next = segments[i + 1].point.height;
    const double gap = sums.upto(next_offset) + s_next - target;
    const double landing_roof =
        sys.roof().value_shifted(out.discrete.point, next_offset);
    out.case_trace.push_back(std::string(tag) +
                             (s_next <= landing_roof ? ".a" : ".b"));
    out.gaps.push_back(gap);
    target += gap;
    out.flow_offsets.push_back(target - segments[0].point.height);
  }
  return out;
}

ShadowReport verify_flow_shadowing(const SuspensionSystem& sys,
                                   const FlowGluedOrbit& glued,
                                   const std::vector<FlowSegment>& segments, double eps,
                                   double step, double threshold) {
  if (!(step > 0.0)) raise(errc::invalid_argument, "sample step must be positive");
  ShadowReport report;
  report.step = step;
  report.threshold = threshold;
  report.epsilon = eps;
  report.pass = true;

  RoofSums glued_sums(sys, glued.start.base_point);
  const double s1 = glued.start.height;

  for (std::size_t i = 0; i < segments.size(); ++i) {
    const SymbolicPoint& y = segments[i].point.base_point;
    const double sy = segments[i].point.height;
    const double t_i = segments[i].duration;
    const double offset = glued.flow_offsets[i];

    std::vector<double> ts;
    for (double t = 0.0; t < t_i; t += step) ts.push_back(t);
    ts.push_back(t_i);
    RoofSums seg_sums(sys, y);
    for (std::size_t n = 1;; ++n) {
      const double t = seg_sums.upto(n) - sy;
      if (t > t_i) break;
      if (t >= 0.0) ts.push_back(t);
    }
    for (std::size_t m = 1;; ++m) {
      const double t = glued_sums.upto(m) - s1 - offset;
      if (t > t_i) break;
      if (t >= 0.0) ts.push_back(t);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    double worst = 0.0;
    for (double t : ts) {
      const auto [mg, hg] = glued_sums.locate(s1 + offset + t);
      const auto [ms, hs] = seg_sums.locate(sy + t);
      const double d =
          d_pi_shifted(sys, glued.start.base_point, mg, hg, y, ms, hs);
      worst = std::max(worst, d);
      report.samples.push_back(ShadowSample{static_cast<int>(i), t, d});
    }
    report.per_segment_max.push_back(worst);
    if (!(worst <= threshold * eps)) report.pass = false;
  }
  return report;
}

}  // namespace orbitglue

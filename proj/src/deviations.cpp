#include "orbitglue/deviations.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <thread>

#include "orbitglue/error.hpp"
#include "orbitglue/numeric.hpp"

namespace orbitglue {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pressure_at(const SuspensionSystem& sys, const LocallyConstantFunction& drive,
                   double c) {
  const LocallyConstantFunction g =
      combine(sys.base(), {{1.0, &drive}, {-c, &sys.roof()}});
  return pressure(sys.base(), g);
}

// Root of the strictly decreasing map c -> pressure(drive - c * roof).
double free_energy_root(const SuspensionSystem& sys,
                        const LocallyConstantFunction& drive) {
  const double h_top =
      pressure(sys.base(), LocallyConstantFunction::constant(sys.base(), 0.0));
  double lo = drive.min_value() / sys.roof_max() - 1.0;
  double hi = drive.max_value() / sys.roof_min() + h_top + 1.0;
  double p_lo = pressure_at(sys, drive, lo);
  double p_hi = pressure_at(sys, drive, hi);
  double span = 1.0;
  for (int guard = 0; p_lo <= 0.0 || p_hi >= 0.0; ++guard) {
    if (guard > 60) raise(errc::bracket_not_found, "free-energy root bracket");
    if (p_lo <= 0.0) {
      lo -= span;
      p_lo = pressure_at(sys, drive, lo);
    }
    if (p_hi >= 0.0) {
      hi += span;
      p_hi = pressure_at(sys, drive, hi);
    }
    span *= 2.0;
  }
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (pressure_at(sys, drive, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double c = 0.5 * (lo + hi);
  for (int step = 0; step < 20; ++step) {
    const double p = pressure_at(sys, drive, c);
    if (std::abs(p) <= 1e-11) return c;
    const LocallyConstantFunction g =
        combine(sys.base(), {{1.0, &drive}, {-c, &sys.roof()}});
    const MarkovMeasure eta = equilibrium_markov(sys.base(), g);
    const double mean_roof = measure_stats(eta, sys.roof()).second;
    c += p / mean_roof;
  }
  if (std::abs(pressure_at(sys, drive, c)) > 1e-11)
    raise(errc::budget_exceeded, "free-energy Newton polish did not converge");
  return c;
}

LocallyConstantFunction drive_at(const SuspensionSystem& sys,
                                 const LocallyConstantFunction& phi_bar,
                                 const LocallyConstantFunction& psi_bar, double q) {
  return combine(sys.base(), {{1.0, &phi_bar}, {q, &psi_bar}});
}

double free_energy_q(const SuspensionSystem& sys, const LocallyConstantFunction& phi_bar,
                     const LocallyConstantFunction& psi_bar, double q) {
  return free_energy_root(sys, drive_at(sys, phi_bar, psi_bar, q));
}

// Mean of psi along the flow under the q-equilibrium: Lambda'(q).
double flow_mean_at(const SuspensionSystem& sys, const LocallyConstantFunction& phi_bar,
                    const LocallyConstantFunction& psi_bar, double q) {
  const double c = free_energy_q(sys, phi_bar, psi_bar, q);
  const LocallyConstantFunction d = drive_at(sys, phi_bar, psi_bar, q);
  const LocallyConstantFunction g =
      combine(sys.base(), {{1.0, &d}, {-c, &sys.roof()}});
  const MarkovMeasure eta = equilibrium_markov(sys.base(), g);
  return measure_stats(eta, psi_bar).second / measure_stats(eta, sys.roof()).second;
}

int block_depth_over(std::initializer_list<const LocallyConstantFunction*> fs) {
  int m = 1;
  for (const auto* f : fs) m = std::max(m, std::max(1, f->depth() - 1));
  return m;
}

struct EdgeData {
  BlockGraph graph;
  // weights aligned with graph.succ
  std::vector<std::vector<double>> psi, rho, phi;
};

EdgeData edge_data(const SuspensionSystem& sys, const LocallyConstantFunction& psi_bar,
                   const LocallyConstantFunction* phi_bar) {
  EdgeData out;
  const int m = phi_bar
                    ? block_depth_over({&psi_bar, &sys.roof(), phi_bar})
                    : block_depth_over({&psi_bar, &sys.roof()});
  out.graph = BlockGraph::build(sys.base(), m);
  const int n = out.graph.state_count();
  out.psi.resize(n);
  out.rho.resize(n);
  out.phi.resize(n);
  for (int v = 0; v < n; ++v) {
    for (std::size_t e = 0; e < out.graph.succ[v].size(); ++e) {
      const Word& w = out.graph.edge_words[v][e];
      out.psi[v].push_back(psi_bar.value_word(w));
      out.rho[v].push_back(sys.roof().value_word(w));
      out.phi[v].push_back(phi_bar ? phi_bar->value_word(w) : 0.0);
    }
  }
  return out;
}

// Karp's maximum cycle mean for edge weights w[v][e] on a strongly
// connected graph.
double max_cycle_mean(const BlockGraph& graph,
                      const std::vector<std::vector<double>>& w) {
  const int n = graph.state_count();
  std::vector<std::vector<double>> f(static_cast<std::size_t>(n) + 1,
                                     std::vector<double>(n, -kInf));
  for (int v = 0; v < n; ++v) f[0][v] = 0.0;
  for (int k = 1; k <= n; ++k) {
    for (int v = 0; v < n; ++v) {
      if (f[k - 1][v] == -kInf) continue;
      for (std::size_t e = 0; e < graph.succ[v].size(); ++e) {
        const int u = graph.succ[v][e];
        f[k][u] = std::max(f[k][u], f[k - 1][v] + w[v][e]);
      }
    }
  }
  double best = -kInf;
  for (int v = 0; v < n; ++v) {
    if (f[n][v] == -kInf) continue;
    double worst = kInf;
    for (int k = 0; k < n; ++k) {
      if (f[k][v] == -kInf) continue;
      worst = std::min(worst, (f[n][v] - f[k][v]) / (n - k));
    }
    best = std::max(best, worst);
  }
  return best;
}

double min_cycle_mean(const BlockGraph& graph,
                      const std::vector<std::vector<double>>& w) {
  std::vector<std::vector<double>> neg(w);
  for (auto& row : neg)
    for (double& v : row) v = -v;
  return -max_cycle_mean(graph, neg);
}

std::pair<double, double> feasible_range_data(const EdgeData& data) {
  double ratio_lo = kInf, ratio_hi = -kInf;
  for (std::size_t v = 0; v < data.psi.size(); ++v) {
    for (std::size_t e = 0; e < data.psi[v].size(); ++e) {
      const double r = data.psi[v][e] / data.rho[v][e];
      ratio_lo = std::min(ratio_lo, r);
      ratio_hi = std::max(ratio_hi, r);
    }
  }
  // s_max: root of the decreasing map s -> max cycle mean of psi - s rho;
  // s_min likewise with the min cycle mean.
  auto solve = [&](bool use_max) {
    double lo = ratio_lo - 1e-12, hi = ratio_hi + 1e-12;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      std::vector<std::vector<double>> w(data.psi);
      for (std::size_t v = 0; v < w.size(); ++v)
        for (std::size_t e = 0; e < w[v].size(); ++e)
          w[v][e] -= mid * data.rho[v][e];
      const double mean =
          use_max ? max_cycle_mean(data.graph, w) : min_cycle_mean(data.graph, w);
      if (mean > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  return {solve(false), solve(true)};
}

}  // namespace

double flow_free_energy(const SuspensionSystem& sys, const FlowObservable& phi,
                        const FlowObservable& psi, double q) {
  const LocallyConstantFunction phi_bar = reduced_observable(sys, phi);
  const LocallyConstantFunction psi_bar = reduced_observable(sys, psi);
  return free_energy_q(sys, phi_bar, psi_bar, q);
}

FreeEnergyCurve free_energy_curve(const SuspensionSystem& sys, const FlowObservable& phi,
                                  const FlowObservable& psi,
                                  const std::vector<double>& q_grid) {
  const LocallyConstantFunction phi_bar = reduced_observable(sys, phi);
  const LocallyConstantFunction psi_bar = reduced_observable(sys, psi);
  const double c0 = free_energy_q(sys, phi_bar, psi_bar, 0.0);
  FreeEnergyCurve curve;
  for (double q : q_grid) {
    curve.q.push_back(q);
    curve.c.push_back(free_energy_q(sys, phi_bar, psi_bar, q));
    curve.lambda.push_back(curve.c.back() - c0);
    curve.lambda_prime.push_back(flow_mean_at(sys, phi_bar, psi_bar, q));
  }
  return curve;
}

std::pair<double, double> feasible_mean_range(const SuspensionSystem& sys,
                                              const FlowObservable& psi) {
  const LocallyConstantFunction psi_bar = reduced_observable(sys, psi);
  return feasible_range_data(edge_data(sys, psi_bar, nullptr));
}

RateValue rate_function(const SuspensionSystem& sys, const FlowObservable& phi,
                        const FlowObservable& psi, double s) {
  const LocallyConstantFunction phi_bar = reduced_observable(sys, phi);
  const LocallyConstantFunction psi_bar = reduced_observable(sys, psi);
  const auto [s_min, s_max] = feasible_range_data(edge_data(sys, psi_bar, nullptr));
  if (!(s > s_min + 1e-9 && s < s_max - 1e-9))
    raise(errc::outside_feasible_range,
          "s = " + std::to_string(s) + " outside (" + std::to_string(s_min) + ", " +
              std::to_string(s_max) + ")");

  auto mean_at = [&](double q) { return flow_mean_at(sys, phi_bar, psi_bar, q); };
  double q_lo = -1.0, q_hi = 1.0;
  double v_lo = mean_at(q_lo), v_hi = mean_at(q_hi);
  while (v_hi < s && q_hi < 50.0) {
    q_hi = std::min(2.0 * q_hi, 50.0);
    v_hi = mean_at(q_hi);
  }
  while (v_lo > s && q_lo > -50.0) {
    q_lo = std::max(2.0 * q_lo, -50.0);
    v_lo = mean_at(q_lo);
  }
  if (v_hi < s || v_lo > s)
    raise(errc::outside_feasible_range,
          "s not attained by the free-energy derivative within |q| <= 50");
  for (int it = 0; it < 60 && q_hi - q_lo > 1e-11 * (1.0 + std::abs(q_hi)); ++it) {
    const double mid = 0.5 * (q_lo + q_hi);
    if (mean_at(mid) < s)
      q_lo = mid;
    else
      q_hi = mid;
  }
  const double q_star = 0.5 * (q_lo + q_hi);
  const double c0 = free_energy_q(sys, phi_bar, psi_bar, 0.0);
  const double lambda = free_energy_q(sys, phi_bar, psi_bar, q_star) - c0;
  return RateValue{std::max(0.0, q_star * s - lambda), q_star};
}

RateFunctionProfile rate_function_profile(const SuspensionSystem& sys,
                                          const FlowObservable& phi,
                                          const FlowObservable& psi,
                                          const std::vector<double>& s_grid) {
  RateFunctionProfile profile;
  const LocallyConstantFunction psi_bar = reduced_observable(sys, psi);
  const auto [s_min, s_max] = feasible_range_data(edge_data(sys, psi_bar, nullptr));
  profile.s_min = s_min;
  profile.s_max = s_max;
  for (double s : s_grid) {
    profile.s.push_back(s);
    try {
      const RateValue rv = rate_function(sys, phi, psi, s);
      profile.rate.push_back(rv.rate);
      profile.q_star.push_back(rv.q_star);
    } catch (const Error& e) {
      if (e.code() != errc::outside_feasible_range) throw;
      profile.rate.push_back(kInf);
      profile.q_star.push_back(kNaN);
    }
  }
  return profile;
}

namespace {

// Stationary distribution of a row-stochastic matrix by direct solve of
// pi (Q - I) = 0 with the normalization sum(pi) = 1.
std::vector<double> stationary_of(const BlockGraph& graph,
                                  const std::vector<std::vector<double>>& q_rows) {
  const int n = graph.state_count();
  std::vector<std::vector<double>> a(static_cast<std::size_t>(n),
                                     std::vector<double>(n + 1, 0.0));
  // Equations: sum_v pi_v (Q_{vu} - delta_{vu}) = 0 for u < n-1, plus
  // sum_v pi_v = 1 as the last equation.
  for (int v = 0; v < n; ++v) {
    for (std::size_t e = 0; e < graph.succ[v].size(); ++e) {
      const int u = graph.succ[v][e];
      if (u < n - 1) a[u][v] += q_rows[v][e];
    }
  }
  for (int u = 0; u < n - 1; ++u) a[u][u] -= 1.0;
  for (int v = 0; v < n; ++v) a[n - 1][v] = 1.0;
  a[n - 1][n] = 1.0;
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    if (std::abs(a[col][col]) < 1e-300)
      raise(errc::eigen_not_converged, "singular stationary system");
    for (int r = col + 1; r < n; ++r) {
      const double factor = a[r][col] / a[col][col];
      if (factor == 0.0) continue;
      for (int c2 = col; c2 <= n; ++c2) a[r][c2] -= factor * a[col][c2];
    }
  }
  std::vector<double> pi(static_cast<std::size_t>(n));
  for (int r = n - 1; r >= 0; --r) {
    double rhs = a[r][n];
    for (int c2 = r + 1; c2 < n; ++c2) rhs -= a[r][c2] * pi[c2];
    pi[r] = rhs / a[r][r];
  }
  for (double& p : pi) p = std::max(p, 0.0);
  double total = 0.0;
  for (double p : pi) total += p;
  for (double& p : pi) p /= total;
  return pi;
}

struct OracleProblem {
  const EdgeData& data;
  double c0;
  double s_target;
  double penalty;
  double lambda;  // augmented-Lagrangian multiplier estimate

  // z: flattened per-edge logits; rows soft-maxed into a stochastic matrix.
  std::vector<std::vector<double>> rows(const std::vector<double>& z) const {
    std::vector<std::vector<double>> q(data.psi.size());
    std::size_t at = 0;
    for (std::size_t v = 0; v < data.psi.size(); ++v) {
      const std::size_t deg = data.psi[v].size();
      double zmax = -kInf;
      for (std::size_t e = 0; e < deg; ++e) zmax = std::max(zmax, z[at + e]);
      double total = 0.0;
      q[v].resize(deg);
      for (std::size_t e = 0; e < deg; ++e) {
        q[v][e] = std::exp(z[at + e] - zmax);
        total += q[v][e];
      }
      for (std::size_t e = 0; e < deg; ++e) q[v][e] /= total;
      at += deg;
    }
    return q;
  }

  // Returns (objective with penalty, bare value, constraint mean).
  void eval(const std::vector<double>& z, double& penalized, double& bare,
            double& mean) const {
    const auto q = rows(z);
    const auto pi = stationary_of(data.graph, q);
    double h = 0.0, m_phi = 0.0, m_psi = 0.0, m_rho = 0.0;
    for (std::size_t v = 0; v < q.size(); ++v) {
      for (std::size_t e = 0; e < q[v].size(); ++e) {
        const double flow = pi[v] * q[v][e];
        if (q[v][e] > 0.0) h -= flow * std::log(q[v][e]);
        m_phi += flow * data.phi[v][e];
        m_psi += flow * data.psi[v][e];
        m_rho += flow * data.rho[v][e];
      }
    }
    bare = c0 - (h + m_phi) / m_rho;
    mean = m_psi / m_rho;
    const double gap = mean - s_target;
    penalized = bare + lambda * gap + penalty * gap * gap;
  }

  double penalized_value(const std::vector<double>& z) const {
    double p, b, m;
    eval(z, p, b, m);
    return p;
  }
};

}  // namespace

double rate_function_oracle(const SuspensionSystem& sys, const FlowObservable& phi,
                            const FlowObservable& psi, double s, double resolution) {
  const LocallyConstantFunction phi_bar = reduced_observable(sys, phi);
  const LocallyConstantFunction psi_bar = reduced_observable(sys, psi);
  const EdgeData data = edge_data(sys, psi_bar, &phi_bar);
  std::size_t dim = 0;
  for (const auto& row : data.psi) dim += row.size();
  if (data.graph.state_count() > 40 || dim > 200)
    raise(errc::budget_exceeded, "oracle limited to small block graphs");
  const double c0 = free_energy_q(sys, phi_bar, psi_bar, 0.0);

  const auto descend = [&](const OracleProblem& prob, std::vector<double>& z) {
    const double fd = 1e-6;
    std::vector<double> grad(dim), trial(dim);
    for (int iter = 0; iter < 400; ++iter) {
      double gmax = 0.0, gnorm2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double keep = z[i];
        z[i] = keep + fd;
        const double up = prob.penalized_value(z);
        z[i] = keep - fd;
        const double down = prob.penalized_value(z);
        z[i] = keep;
        grad[i] = (up - down) / (2.0 * fd);
        gmax = std::max(gmax, std::abs(grad[i]));
        gnorm2 += grad[i] * grad[i];
      }
      if (gmax < 1e-12) break;
      // Cap the step at one logit unit: overshooting into softmax
      // saturation flattens every finite-difference gradient and strands
      // the iterate at a boundary chain.
      const double scale = std::min(1.0, 1.0 / gmax);
      const double here = prob.penalized_value(z);
      const double dd = gnorm2 * scale;
      double alpha = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        for (std::size_t i = 0; i < dim; ++i) trial[i] = z[i] - alpha * scale * grad[i];
        if (prob.penalized_value(trial) <= here - 1e-4 * alpha * dd) {
          z.swap(trial);
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
      if (alpha * scale * gmax < std::min(1e-10, resolution * 1e-6)) break;
    }
  };

  // Penalty conditioning defeats plain gradient steps near the optimum;
  // cyclic per-coordinate ternary refinement is immune to it.
  const auto refine = [&](const OracleProblem& prob, std::vector<double>& z) {
    for (int pass = 0; pass < 5; ++pass) {
      const double radius = 0.5 / std::pow(4.0, pass);
      for (std::size_t i = 0; i < dim; ++i) {
        double lo = z[i] - radius, hi = z[i] + radius;
        for (int it = 0; it < 50; ++it) {
          const double m1 = lo + (hi - lo) / 3.0;
          const double m2 = hi - (hi - lo) / 3.0;
          z[i] = m1;
          const double f1 = prob.penalized_value(z);
          z[i] = m2;
          const double f2 = prob.penalized_value(z);
          if (f1 < f2)
            hi = m2;
          else
            lo = m1;
        }
        z[i] = 0.5 * (lo + hi);
      }
    }
  };

  // Deterministic tilted starts: bias row logits toward edges with high or
  // low psi-per-unit-time, bracketing the constrained optimum's basin.
  std::vector<double> tilt(dim, 0.0);
  {
    std::size_t at = 0;
    double scale = 0.0;
    for (std::size_t v = 0; v < data.psi.size(); ++v)
      for (std::size_t e = 0; e < data.psi[v].size(); ++e, ++at) {
        tilt[at] = data.psi[v][e] / data.rho[v][e];
        scale = std::max(scale, std::abs(tilt[at]));
      }
    if (scale > 0.0)
      for (double& t : tilt) t /= scale;
  }

  double best = kInf;
  for (int start = 0; start < 7; ++start) {
    std::vector<double> z(dim, 0.0);
    if (start >= 1 && start <= 4) {
      const double kappa[] = {2.5, -2.5, 5.0, -5.0};
      for (std::size_t i = 0; i < dim; ++i) z[i] = kappa[start - 1] * tilt[i];
    } else if (start >= 5) {
      SplitStream st =
          SplitStream::make(0x6f7261636c65ULL, static_cast<std::uint64_t>(start));
      for (double& zi : z) zi = 2.0 * st.next_unit() - 1.0;
    }
    // Multiplier iteration at a moderate quadratic penalty: the inner
    // problems stay well conditioned, and once the multiplier settles the
    // unconstrained minimizer is the constrained optimum itself.
    const double penalty = 2e3;
    double lambda = 0.0, bare = kInf, mean = 0.0;
    for (int outer = 0; outer < 12; ++outer) {
      OracleProblem prob{data, c0, s, penalty, lambda};
      descend(prob, z);
      refine(prob, z);
      double p_unused;
      prob.eval(z, p_unused, bare, mean);
      lambda += 2.0 * penalty * (mean - s);
      if (std::abs(mean - s) < 1e-10) break;
    }
    if (std::abs(mean - s) < 1e-3) best = std::min(best, bare);
  }
  if (best == kInf)
    raise(errc::budget_exceeded, "oracle failed to satisfy the mean constraint");
  return best;
}

namespace {

// Dense lookup of a depth-limited function over packed windows of length L
// (little-endian base-d codes). Inadmissible windows keep NaN and are never
// produced by admissible words.
struct PackedTable {
  std::vector<double> value;
  int window = 0;

  static PackedTable build(const TransitionSystem& sys,
                           const LocallyConstantFunction& f, int window) {
    PackedTable tab;
    tab.window = window;
    std::size_t size = 1;
    for (int i = 0; i < window; ++i) size *= static_cast<std::size_t>(sys.alphabet_size());
    if (size > (std::size_t{1} << 27))
      raise(errc::budget_exceeded, "packed window table too large");
    tab.value.assign(size, kNaN);
    for (const Word& w : enumerate_admissible_words(sys, window)) {
      std::size_t code = 0, base = 1;
      for (int sym : w) {
        code += static_cast<std::size_t>(sym) * base;
        base *= static_cast<std::size_t>(sys.alphabet_size());
      }
      tab.value[code] = f.value_word(w);
    }
    return tab;
  }
};

// Rolling window code over a symbol buffer.
struct WindowCursor {
  std::size_t code = 0;
  std::size_t d = 0;
  std::size_t high = 1;  // d^{L-1}
  int window = 0;

  void init(const Word& word, int alphabet, int win) {
    d = static_cast<std::size_t>(alphabet);
    window = win;
    high = 1;
    for (int i = 0; i + 1 < win; ++i) high *= d;
    code = 0;
    std::size_t base = 1;
    for (int i = 0; i < win; ++i) {
      code += static_cast<std::size_t>(word[static_cast<std::size_t>(i)]) * base;
      base *= d;
    }
  }
  void advance(int next_symbol) {
    code = code / d + static_cast<std::size_t>(next_symbol) * high;
  }
};

// Shared base-word sampler: stationary start, chain transitions, rejection
// against roof/sup roof, uniform height. One stream drives everything, so
// any consumer that replays the same stream sees the same draw.
class SuspensionSampler {
 public:
  SuspensionSampler(const SuspensionSystem& sys, const MarkovMeasure& mu)
      : sys_(sys), mu_(mu), m_(mu.graph().block_depth) {
    const auto& pi = mu.stationary();
    double acc = 0.0;
    for (double p : pi) {
      acc += p;
      pi_cum_.push_back(acc);
    }
    for (const auto& row : mu.transition_probs()) {
      std::vector<double> cum;
      double a = 0.0;
      for (double p : row) {
        a += p;
        cum.push_back(a);
      }
      row_cum_.push_back(std::move(cum));
    }
    k_roof_ = sys.roof().depth();
    roof_tab_ = PackedTable::build(sys.base(), sys.roof(), k_roof_);
  }

  int min_horizon() const { return std::max(m_, k_roof_); }

  // Fills `word` with `horizon` symbols and returns the fiber height.
  double draw(int horizon, SplitStream& stream, Word& word) const {
    if (horizon < min_horizon())
      raise(errc::horizon_too_short, "horizon below block/roof depth");
    const auto& graph = mu_.graph();
    for (;;) {
      word.clear();
      int v = stream.pick(pi_cum_);
      for (int sym : graph.states[static_cast<std::size_t>(v)]) word.push_back(sym);
      while (static_cast<int>(word.size()) < horizon) {
        const int e = stream.pick(row_cum_[static_cast<std::size_t>(v)]);
        v = graph.succ[static_cast<std::size_t>(v)][static_cast<std::size_t>(e)];
        word.push_back(graph.states[static_cast<std::size_t>(v)].back());
      }
      WindowCursor cur;
      cur.init(word, sys_.base().alphabet_size(), k_roof_);
      const double roof = roof_tab_.value[cur.code];
      if (stream.next_unit() < roof / sys_.roof_max())
        return stream.next_unit() * roof;
    }
  }

 private:
  const SuspensionSystem& sys_;
  const MarkovMeasure& mu_;
  int m_;
  int k_roof_;
  std::vector<double> pi_cum_;
  std::vector<std::vector<double>> row_cum_;
  PackedTable roof_tab_;
};

int horizon_for(const SuspensionSystem& sys, double t, int window) {
  const double laps = (sys.roof_max() + t) / sys.roof_min() + 2.0;
  return static_cast<int>(std::ceil(laps)) + window + 4;
}

// Runs body(first, stride) across striped workers; body returns a count.
// The per-sample streams make the total independent of the worker count.
std::uint64_t parallel_count(int workers,
                             const std::function<std::uint64_t(std::uint64_t, int)>& body) {
  const int w = std::max(1, workers);
  if (w == 1) return body(0, 1);
  std::vector<std::uint64_t> partial(static_cast<std::size_t>(w), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  std::vector<std::thread> threads;
  for (int i = 0; i < w; ++i) {
    threads.emplace_back([&, i] {
      try {
        partial[static_cast<std::size_t>(i)] = body(static_cast<std::uint64_t>(i), w);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  std::uint64_t total = 0;
  for (std::uint64_t c : partial) total += c;
  return total;
}

void finish_decay(EmpiricalDecay& decay) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < decay.t.size(); ++i) {
    const double freq =
        static_cast<double>(decay.counts[i]) / static_cast<double>(decay.samples_per_t);
    decay.frequency.push_back(freq);
    decay.log_frequency.push_back(decay.counts[i] > 0 ? std::log(freq) : kNaN);
    if (decay.counts[i] >= 30) {
      xs.push_back(decay.t[i]);
      ys.push_back(decay.log_frequency[i]);
    }
  }
  decay.fit_points = xs.size();
  if (xs.size() >= 2) {
    const LineFit fit = fit_line(xs, ys);
    decay.slope = fit.slope;
    decay.slope_stderr = fit.slope_stderr;
  } else {
    decay.slope = kNaN;
    decay.slope_stderr = kNaN;
  }
}

void validate_grid(const std::vector<double>& t_grid, std::uint64_t n_samples) {
  if (t_grid.empty()) raise(errc::invalid_argument, "t grid must be nonempty");
  for (double t : t_grid)
    if (!(t > 0.0)) raise(errc::invalid_argument, "t grid values must be positive");
  if (n_samples < 1) raise(errc::invalid_argument, "need at least one sample");
}

}  // namespace

SuspensionPoint sample_suspension(const SuspensionSystem& sys, const MarkovMeasure& mu,
                                  int horizon, SplitStream& stream) {
  if (horizon < 1) raise(errc::invalid_argument, "horizon must be >= 1");
  const SuspensionSampler sampler(sys, mu);
  Word word;
  const double height = sampler.draw(std::max(horizon, sampler.min_horizon()),
                                     stream, word);
  // Close the word into a periodic point along a shortest return path.
  const std::vector<int> back = sys.base().shortest_path(word.back(), word.front());
  Word cycle = word;
  cycle.insert(cycle.end(), back.begin() + 1, back.end() - 1);
  return SuspensionPoint{SymbolicPoint(Word{}, std::move(cycle)), height};
}

EmpiricalDecay estimate_deviation_level1(const SuspensionSystem& sys,
                                         const MarkovMeasure& mu,
                                         const FlowObservable& psi, double lo, double hi,
                                         const std::vector<double>& t_grid,
                                         std::uint64_t n_samples, std::uint64_t seed,
                                         int workers) {
  if (!(lo <= hi)) raise(errc::invalid_argument, "interval must satisfy lo <= hi");
  validate_grid(t_grid, n_samples);
  const int window = std::max(sys.roof().depth(), psi.fiber_profile.depth());
  const PackedTable rho_tab = PackedTable::build(sys.base(), sys.roof(), window);
  const PackedTable g_tab = PackedTable::build(sys.base(), psi.fiber_profile, window);
  const SuspensionSampler sampler(sys, mu);
  const int d = sys.base().alphabet_size();

  EmpiricalDecay decay;
  decay.t = t_grid;
  decay.samples_per_t = n_samples;
  decay.seed = seed;

  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const double t = t_grid[ti];
    const int horizon = std::max(horizon_for(sys, t, window), sampler.min_horizon());
    const std::uint64_t base_index = static_cast<std::uint64_t>(ti) * n_samples;
    const auto body = [&](std::uint64_t first, int stride) -> std::uint64_t {
      Word word;
      std::uint64_t local = 0;
      for (std::uint64_t i = first; i < n_samples;
           i += static_cast<std::uint64_t>(stride)) {
        SplitStream stream = SplitStream::make(seed, base_index + i);
        const double height = sampler.draw(horizon, stream, word);
        WindowCursor cur;
        cur.init(word, d, window);
        const double g0 = g_tab.value[cur.code];
        const double target = height + t;
        KahanSum roof_sum;
        double integral = 0.0;
        std::size_t j = 0;
        for (;;) {
          const double rho = rho_tab.value[cur.code];
          if (roof_sum.with(rho) > target) break;
          roof_sum.add(rho);
          integral += g_tab.value[cur.code] * rho;
          ++j;
          if (j + static_cast<std::size_t>(window) >
              static_cast<std::size_t>(horizon))
            raise(errc::horizon_too_short, "orbit outran the sampled word");
          cur.advance(word[j + static_cast<std::size_t>(window) - 1]);
        }
        const double partial = target - roof_sum.sum;
        const double avg =
            (integral + g_tab.value[cur.code] * partial - g0 * height) / t;
        if (avg >= lo && avg <= hi) ++local;
      }
      return local;
    };
    decay.counts.push_back(parallel_count(workers, body));
  }
  finish_decay(decay);
  return decay;
}

EmpiricalDecay estimate_deviation_level2(const SuspensionSystem& sys,
                                         const MarkovMeasure& mu, const TestBasis& basis,
                                         const std::vector<double>& center, double radius,
                                         const std::vector<double>& t_grid,
                                         std::uint64_t n_samples, std::uint64_t seed,
                                         int workers) {
  if (basis.observables.empty()) raise(errc::invalid_argument, "empty test basis");
  if (center.size() != basis.observables.size())
    raise(errc::invalid_argument, "center dimension must match basis size");
  if (!(radius > 0.0)) raise(errc::invalid_argument, "radius must be positive");
  validate_grid(t_grid, n_samples);
  int window = sys.roof().depth();
  for (const FlowObservable& g : basis.observables) {
    const double sup =
        std::max(std::abs(g.fiber_profile.min_value()), std::abs(g.fiber_profile.max_value()));
    if (sup > 1.0 + 1e-12)
      raise(errc::invalid_argument, "test observables must have sup norm <= 1");
    window = std::max(window, g.fiber_profile.depth());
  }
  const PackedTable rho_tab = PackedTable::build(sys.base(), sys.roof(), window);
  std::vector<PackedTable> g_tabs;
  std::vector<double> weights;
  for (std::size_t i = 0; i < basis.observables.size(); ++i) {
    g_tabs.push_back(
        PackedTable::build(sys.base(), basis.observables[i].fiber_profile, window));
    weights.push_back(std::ldexp(1.0, -static_cast<int>(i) - 1));
  }
  const SuspensionSampler sampler(sys, mu);
  const int d = sys.base().alphabet_size();
  const std::size_t m = g_tabs.size();

  EmpiricalDecay decay;
  decay.t = t_grid;
  decay.samples_per_t = n_samples;
  decay.seed = seed;

  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const double t = t_grid[ti];
    const int horizon = std::max(horizon_for(sys, t, window), sampler.min_horizon());
    const std::uint64_t base_index = static_cast<std::uint64_t>(ti) * n_samples;
    const auto body = [&](std::uint64_t first, int stride) -> std::uint64_t {
      Word word;
      std::vector<double> integral(m), g0(m);
      std::uint64_t local = 0;
      for (std::uint64_t i = first; i < n_samples;
           i += static_cast<std::uint64_t>(stride)) {
        SplitStream stream = SplitStream::make(seed, base_index + i);
        const double height = sampler.draw(horizon, stream, word);
        WindowCursor cur;
        cur.init(word, d, window);
        for (std::size_t b = 0; b < m; ++b) {
          g0[b] = g_tabs[b].value[cur.code];
          integral[b] = 0.0;
        }
        const double target = height + t;
        KahanSum roof_sum;
        std::size_t j = 0;
        for (;;) {
          const double rho = rho_tab.value[cur.code];
          if (roof_sum.with(rho) > target) break;
          roof_sum.add(rho);
          for (std::size_t b = 0; b < m; ++b)
            integral[b] += g_tabs[b].value[cur.code] * rho;
          ++j;
          if (j + static_cast<std::size_t>(window) >
              static_cast<std::size_t>(horizon))
            raise(errc::horizon_too_short, "orbit outran the sampled word");
          cur.advance(word[j + static_cast<std::size_t>(window) - 1]);
        }
        const double partial = target - roof_sum.sum;
        double dist = 0.0;
        for (std::size_t b = 0; b < m; ++b) {
          const double avg =
              (integral[b] + g_tabs[b].value[cur.code] * partial - g0[b] * height) / t;
          dist += weights[b] * std::abs(avg - center[b]);
        }
        if (dist < radius) ++local;
      }
      return local;
    };
    decay.counts.push_back(parallel_count(workers, body));
  }
  finish_decay(decay);
  return decay;
}

std::vector<TemperedPoint> tempered_variation_profile(const SuspensionSystem& sys,
                                                      const FlowObservable& psi,
                                                      double delta,
                                                      const std::vector<double>& t_grid,
                                                      int n_pairs, std::uint64_t seed) {
  if (!(delta > 0.0)) raise(errc::non_positive_epsilon, "delta must be positive");
  if (n_pairs < 1) raise(errc::invalid_argument, "need at least one pair");
  if (t_grid.empty()) raise(errc::invalid_argument, "t grid must be nonempty");
  // Sample base orbits from the maximal-entropy chain.
  const MarkovMeasure parry = equilibrium_markov(
      sys.base(), LocallyConstantFunction::constant(sys.base(), 0.0));
  const int window = std::max(sys.roof().depth(), psi.fiber_profile.depth());
  const PackedTable rho_tab = PackedTable::build(sys.base(), sys.roof(), window);
  const PackedTable g_tab = PackedTable::build(sys.base(), psi.fiber_profile, window);
  const SuspensionSampler sampler(sys, parry);
  const int d = sys.base().alphabet_size();

  std::vector<TemperedPoint> profile;
  Word word;
  std::vector<double> roof_sums{0.0};   // S[m]
  std::vector<double> integral_sums{0.0};  // sum_{j<m} g_j rho_j
  std::vector<double> g_by_lap;

  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const double t = t_grid[ti];
    const int horizon =
        std::max(horizon_for(sys, t + delta, window), sampler.min_horizon());
    double gamma = 0.0;
    for (int pair = 0; pair < n_pairs; ++pair) {
      SplitStream stream = SplitStream::make(
          seed, static_cast<std::uint64_t>(ti) * static_cast<std::uint64_t>(n_pairs) +
                    static_cast<std::uint64_t>(pair));
      const double height = sampler.draw(horizon, stream, word);

      roof_sums.assign(1, 0.0);
      integral_sums.assign(1, 0.0);
      g_by_lap.clear();
      WindowCursor cur;
      cur.init(word, d, window);
      const double roof_at_start = rho_tab.value[cur.code];
      KahanSum rs, is;
      const double reach = height + t + 0.5 * delta;
      while (roof_sums.back() <= reach) {
        const double rho = rho_tab.value[cur.code];
        const double g = g_tab.value[cur.code];
        g_by_lap.push_back(g);
        rs.add(rho);
        is.add(g * rho);
        roof_sums.push_back(rs.sum);
        integral_sums.push_back(is.sum);
        const std::size_t j = g_by_lap.size();
        if (j + static_cast<std::size_t>(window) > static_cast<std::size_t>(horizon))
          raise(errc::horizon_too_short, "orbit outran the sampled word");
        cur.advance(word[j + static_cast<std::size_t>(window) - 1]);
      }
      const auto birkhoff = [&](double target) {
        const auto it =
            std::upper_bound(roof_sums.begin(), roof_sums.end(), target);
        const std::size_t lap = static_cast<std::size_t>(it - roof_sums.begin()) - 1;
        return integral_sums[lap] + g_by_lap[lap] * (target - roof_sums[lap]);
      };
      const double p_lo = std::max(-0.5 * delta, -height);
      const double p_hi = std::min(0.5 * delta, roof_at_start - height);
      std::vector<double> candidates{p_lo, p_hi};
      for (double base : {height, height + t}) {
        for (double s_m : roof_sums) {
          const double tau = s_m - base;
          if (tau > p_lo && tau < p_hi) candidates.push_back(tau);
        }
      }
      const double ref_front = birkhoff(height);
      const double ref_back = birkhoff(height + t);
      for (double tau : candidates) {
        const double diff = (birkhoff(height + tau) - ref_front) -
                            (birkhoff(height + t + tau) - ref_back);
        gamma = std::max(gamma, std::abs(diff));
      }
    }
    profile.push_back(TemperedPoint{t, gamma / t});
  }
  return profile;
}

}  // namespace orbitglue

#include "orbitglue/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace orbitglue {

namespace {

int measure_block_depth(int function_depth) { return std::max(1, function_depth - 1); }

// Least-squares slope of y against x; 0 when fewer than 2 points.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

BlockGraph BlockGraph::build(const TransitionSystem& sys, int block_depth) {
  if (block_depth < 1) raise(errc::invalid_argument, "block depth must be >= 1");
  BlockGraph g;
  g.block_depth = block_depth;
  g.states = enumerate_admissible_words(sys, block_depth);
  g.succ.resize(g.states.size());
  g.edge_words.resize(g.states.size());
  for (std::size_t v = 0; v < g.states.size(); ++v) {
    const Word& sv = g.states[v];
    for (int s : sys.successors(sv.back())) {
      Word ew = sv;
      ew.push_back(s);
      Word sw(ew.begin() + 1, ew.end());
      int w = g.find_state(sw);
      if (w < 0) continue;  // unreachable when states are total, kept defensive
      g.succ[v].push_back(w);
      g.edge_words[v].push_back(std::move(ew));
    }
  }
  return g;
}

int BlockGraph::find_state(const Word& w) const {
  auto it = std::lower_bound(states.begin(), states.end(), w);
  if (it == states.end() || *it != w) return -1;
  return static_cast<int>(it - states.begin());
}

PerronData perron_eigendata(const std::vector<std::vector<int>>& succ,
                            const std::vector<std::vector<double>>& weights,
                            double tol, int max_iterations) {
  const std::size_t n = succ.size();
  if (n == 0) raise(errc::invalid_argument, "empty matrix");

  // Shift by the max row sum: M + sI is primitive whenever M is
  // irreducible, and has the same eigenvectors with eigenvalue lambda + s.
  double shift_v = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    double row = 0.0;
    for (double w : weights[v]) row += w;
    shift_v = std::max(shift_v, row);
  }
  if (shift_v <= 0.0) raise(errc::invalid_argument, "matrix has no positive entry");

  auto iterate = [&](bool transpose) -> std::pair<double, std::vector<double>> {
    std::vector<double> v(n, 1.0 / static_cast<double>(n)), next(n);
    double lambda_prev = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t a = 0; a < n; ++a) {
        const auto& row = succ[a];
        const auto& ws = weights[a];
        for (std::size_t k = 0; k < row.size(); ++k) {
          std::size_t b = static_cast<std::size_t>(row[k]);
          if (transpose) {
            next[b] += ws[k] * v[a];
          } else {
            next[a] += ws[k] * v[b];
          }
        }
      }
      for (std::size_t a = 0; a < n; ++a) next[a] += shift_v * v[a];
      double norm = 0.0;
      for (double x : next) norm += x;
      for (double& x : next) x /= norm;
      double delta = 0.0;
      for (std::size_t a = 0; a < n; ++a) delta = std::max(delta, std::abs(next[a] - v[a]));
      v.swap(next);
      bool lambda_ok = std::abs(norm - lambda_prev) <= tol * std::abs(norm);
      lambda_prev = norm;
      if (lambda_ok && delta <= tol) {
        return {norm - shift_v, v};
      }
    }
    raise(errc::eigen_not_converged, "power iteration did not reach tolerance");
  };

  auto [lambda_r, right] = iterate(false);
  auto [lambda_l, left] = iterate(true);
  PerronData out;
  out.lambda = 0.5 * (lambda_r + lambda_l);
  out.right = std::move(right);
  out.left = std::move(left);
  double dot = 0.0;
  for (std::size_t a = 0; a < n; ++a) dot += out.left[a] * out.right[a];
  for (double& x : out.left) x /= dot;
  return out;
}

MarkovMeasure::MarkovMeasure(BlockGraph graph, std::vector<std::vector<double>> transition_probs,
                             std::vector<double> stationary, double log_perron,
                             std::vector<double> left, std::vector<double> right)
    : graph_(std::move(graph)),
      probs_(std::move(transition_probs)),
      pi_(std::move(stationary)),
      log_perron_(log_perron),
      left_(std::move(left)),
      right_(std::move(right)) {
  const std::size_t n = graph_.states.size();
  if (probs_.size() != n || pi_.size() != n) {
    raise(errc::invalid_argument, "measure shape mismatch");
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (probs_[v].size() != graph_.succ[v].size()) {
      raise(errc::invalid_argument, "row support mismatch");
    }
    double row = 0.0;
    for (double p : probs_[v]) {
      if (p < 0.0) raise(errc::invalid_argument, "negative transition probability");
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-12) {
      raise(errc::invalid_argument, "transition row does not sum to 1");
    }
  }
  std::vector<double> piP(n, 0.0);
  double total = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    total += pi_[v];
    for (std::size_t k = 0; k < probs_[v].size(); ++k) {
      piP[static_cast<std::size_t>(graph_.succ[v][k])] += pi_[v] * probs_[v][k];
    }
  }
  if (std::abs(total - 1.0) > 1e-12) raise(errc::invalid_argument, "stationary does not sum to 1");
  for (std::size_t v = 0; v < n; ++v) {
    if (std::abs(piP[v] - pi_[v]) > 1e-12) {
      raise(errc::invalid_argument, "distribution is not stationary");
    }
  }
}

double MarkovMeasure::cylinder_mass(const Word& w) const {
  const int m = graph_.block_depth;
  if (static_cast<int>(w.size()) < m) {
    double mass = 0.0;
    for (std::size_t v = 0; v < graph_.states.size(); ++v) {
      if (std::equal(w.begin(), w.end(), graph_.states[v].begin())) mass += pi_[v];
    }
    return mass;
  }
  Word head(w.begin(), w.begin() + m);
  int v = graph_.find_state(head);
  if (v < 0) return 0.0;
  double mass = pi_[static_cast<std::size_t>(v)];
  for (std::size_t j = 0; j + m < w.size(); ++j) {
    Word next(w.begin() + static_cast<long>(j) + 1, w.begin() + static_cast<long>(j) + 1 + m);
    int nxt = graph_.find_state(next);
    if (nxt < 0) return 0.0;
    const auto& row = graph_.succ[static_cast<std::size_t>(v)];
    auto it = std::find(row.begin(), row.end(), nxt);
    if (it == row.end()) return 0.0;
    mass *= probs_[static_cast<std::size_t>(v)][static_cast<std::size_t>(it - row.begin())];
    v = nxt;
  }
  return mass;
}

namespace {

struct WeightedBlock {
  BlockGraph graph;
  std::vector<std::vector<double>> weights;  // exp(u(edge word)), aligned with succ
};

WeightedBlock weighted_block(const TransitionSystem& sys, const LocallyConstantFunction& u) {
  WeightedBlock wb;
  wb.graph = BlockGraph::build(sys, measure_block_depth(u.depth()));
  wb.weights.resize(wb.graph.states.size());
  for (std::size_t v = 0; v < wb.graph.states.size(); ++v) {
    for (const Word& ew : wb.graph.edge_words[v]) {
      wb.weights[v].push_back(std::exp(u.value_word(ew)));
    }
  }
  return wb;
}

}  // namespace

double pressure(const TransitionSystem& sys, const LocallyConstantFunction& u) {
  WeightedBlock wb = weighted_block(sys, u);
  PerronData pd = perron_eigendata(wb.graph.succ, wb.weights);
  return std::log(pd.lambda);
}

MarkovMeasure equilibrium_markov(const TransitionSystem& sys, const LocallyConstantFunction& u) {
  WeightedBlock wb = weighted_block(sys, u);
  PerronData pd = perron_eigendata(wb.graph.succ, wb.weights);
  const std::size_t n = wb.graph.states.size();
  std::vector<std::vector<double>> probs(n);
  for (std::size_t v = 0; v < n; ++v) {
    double row = 0.0;
    probs[v].resize(wb.graph.succ[v].size());
    for (std::size_t k = 0; k < wb.graph.succ[v].size(); ++k) {
      std::size_t w = static_cast<std::size_t>(wb.graph.succ[v][k]);
      probs[v][k] = wb.weights[v][k] * pd.right[w] / (pd.lambda * pd.right[v]);
      row += probs[v][k];
    }
    // Remove the residual eigen-equation defect so downstream row sums are
    // exactly stochastic; the defect is within the iteration tolerance.
    for (double& p : probs[v]) p /= row;
  }
  std::vector<double> pi(n);
  double total = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    pi[v] = pd.left[v] * pd.right[v];
    total += pi[v];
  }
  for (double& p : pi) p /= total;
  return MarkovMeasure(std::move(wb.graph), std::move(probs), std::move(pi),
                       std::log(pd.lambda), std::move(pd.left), std::move(pd.right));
}

std::pair<double, double> measure_stats(const MarkovMeasure& measure,
                                        const LocallyConstantFunction& g) {
  const BlockGraph& graph = measure.graph();
  if (g.depth() > graph.block_depth + 1) {
    raise(errc::depth_mismatch, "observable depth exceeds block depth + 1");
  }
  double entropy = 0.0, integral = 0.0;
  for (std::size_t v = 0; v < graph.states.size(); ++v) {
    double pv = measure.stationary()[v];
    for (std::size_t k = 0; k < graph.succ[v].size(); ++k) {
      double p = measure.transition_probs()[v][k];
      if (p <= 0.0) continue;
      entropy -= pv * p * std::log(p);
      integral += pv * p * g.value_word(graph.edge_words[v][k]);
    }
  }
  return {entropy, integral};
}

GibbsReport verify_gibbs(const TransitionSystem& sys, const MarkovMeasure& measure,
                         const LocallyConstantFunction& u, double pressure_constant,
                         int n_max, std::size_t budget, double growth_tolerance) {
  if (n_max < 1) raise(errc::invalid_argument, "n_max must be >= 1");
  GibbsReport report;
  report.pressure_constant = pressure_constant;
  for (int n = 1; n <= n_max; ++n) {
    std::vector<Word> cylinders = enumerate_admissible_words(sys, n, budget);
    double kmin = std::numeric_limits<double>::infinity();
    double kmax = -std::numeric_limits<double>::infinity();
    for (const Word& w : cylinders) {
      SymbolicPoint rep = extend_prefix_periodically(sys, w);
      double birkhoff = 0.0;
      for (int j = 0; j < n; ++j) birkhoff += u.value_shifted(rep, static_cast<std::size_t>(j));
      double ratio = measure.cylinder_mass(w) /
                     std::exp(birkhoff - static_cast<double>(n) * pressure_constant);
      kmin = std::min(kmin, ratio);
      kmax = std::max(kmax, ratio);
    }
    report.per_length.push_back({n, kmin, kmax});
  }
  // Tail-half slope of log K against n estimates the exponential drift rate;
  // a correct pressure constant gives slopes ~ 0.
  std::size_t tail_start = report.per_length.size() / 2;
  std::vector<double> ns, log_max, log_min;
  for (std::size_t i = tail_start; i < report.per_length.size(); ++i) {
    ns.push_back(static_cast<double>(report.per_length[i].n));
    log_max.push_back(std::log(report.per_length[i].k_max));
    log_min.push_back(std::log(report.per_length[i].k_min));
  }
  report.growth_flag = std::abs(ls_slope(ns, log_max)) <= growth_tolerance &&
                       std::abs(ls_slope(ns, log_min)) <= growth_tolerance;
  return report;
}

std::uint64_t separated_count(const TransitionSystem& sys, int n, double eps) {
  if (n < 1) raise(errc::invalid_argument, "n must be >= 1");
  int length = n - 1 + depth_for(eps);
  if (length == 0) return 1;  // single cylinder: the whole space
  const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
  auto sat_add = [&](std::uint64_t a, std::uint64_t b) {
    return a > cap - b ? cap : a + b;
  };
  const int d = sys.alphabet_size();
  std::vector<std::uint64_t> count(static_cast<std::size_t>(d), 1);
  for (int step = 1; step < length; ++step) {
    std::vector<std::uint64_t> next(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i) {
      for (int j : sys.successors(i)) {
        next[static_cast<std::size_t>(i)] =
            sat_add(next[static_cast<std::size_t>(i)], count[static_cast<std::size_t>(j)]);
      }
    }
    count.swap(next);
  }
  std::uint64_t total = 0;
  for (std::uint64_t c : count) total = sat_add(total, c);
  return total;
}

}  // namespace orbitglue

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "orbitglue/function.hpp"

namespace orbitglue {

/*
 * Higher-block presentation of the SFT: states are admissible m-words,
 * v -> w allowed when v and w overlap in m-1 symbols and the combined
 * (m+1)-word is admissible. For m = 1 this is the original graph. A
 * depth-k function with k <= m+1 evaluates on the edge word v*last(w).
 * Transitivity of the base graph carries over to every block graph.
 */
struct BlockGraph {
  int block_depth = 1;
  std::vector<Word> states;               // lexicographically sorted
  std::vector<std::vector<int>> succ;     // successor state ids, ascending
  std::vector<std::vector<Word>> edge_words;  // (m+1)-word per edge, aligned with succ

  static BlockGraph build(const TransitionSystem& sys, int block_depth);
  int state_count() const { return static_cast<int>(states.size()); }
  int find_state(const Word& w) const;  // -1 if absent
};

struct PerronData {
  double lambda = 0.0;
  std::vector<double> right;  // normalized so sum = 1
  std::vector<double> left;   // normalized so <left, right> = 1
  int iterations = 0;
};

// Perron root and positive eigenvectors of an irreducible nonnegative
// matrix given by sparse rows (succ ids + weights). Power iteration on the
// diagonally shifted matrix (always primitive), relative tolerance `tol`,
// at most `max_iterations` steps; throws eigen_not_converged past the cap.
PerronData perron_eigendata(const std::vector<std::vector<int>>& succ,
                            const std::vector<std::vector<double>>& weights,
                            double tol = 1e-13, int max_iterations = 100000);

/*
 * Stationary Markov chain on a block graph together with the Perron data
 * of the weighted transition matrix it was built from. Rows of
 * transition_probs sum to 1 within 1e-12 and are supported on block edges;
 * stationary is the chain's invariant distribution.
 */
class MarkovMeasure {
 public:
  MarkovMeasure(BlockGraph graph, std::vector<std::vector<double>> transition_probs,
                std::vector<double> stationary, double log_perron,
                std::vector<double> left, std::vector<double> right);

  const BlockGraph& graph() const { return graph_; }
  int block_depth() const { return graph_.block_depth; }
  const std::vector<std::vector<double>>& transition_probs() const { return probs_; }
  const std::vector<double>& stationary() const { return pi_; }
  double log_perron() const { return log_perron_; }
  const std::vector<double>& left_vector() const { return left_; }
  const std::vector<double>& right_vector() const { return right_; }

  // Probability of the cylinder [w]. For |w| < block_depth this sums the
  // stationary mass of states extending w.
  double cylinder_mass(const Word& w) const;

 private:
  BlockGraph graph_;
  std::vector<std::vector<double>> probs_;
  std::vector<double> pi_;
  double log_perron_;
  std::vector<double> left_, right_;
};

// log of the spectral radius of the weighted block matrix
// M_{vw} = [v -> w] * exp(u(v * last(w))); equals the supremum of
// entropy + integral of u over invariant measures.
double pressure(const TransitionSystem& sys, const LocallyConstantFunction& u);

// Equilibrium chain of u: P_{vw} = M_{vw} r_w / (lambda r_v),
// pi_v = l_v r_v / <l, r>.
MarkovMeasure equilibrium_markov(const TransitionSystem& sys,
                                 const LocallyConstantFunction& u);

// (entropy, integral of g) of the chain; g must satisfy
// depth(g) <= block_depth + 1 after recoding.
std::pair<double, double> measure_stats(const MarkovMeasure& measure,
                                        const LocallyConstantFunction& g);

struct GibbsReport {
  double pressure_constant = 0.0;
  struct Row {
    int n;
    double k_min;
    double k_max;
  };
  std::vector<Row> per_length;
  // True iff log K_max(n)/n and log K_min(n)/n tend to 0 numerically:
  // the least-squares slopes of n -> log K over the tail half of the
  // range are both within `growth_tolerance` of 0.
  bool growth_flag = false;
};

GibbsReport verify_gibbs(const TransitionSystem& sys, const MarkovMeasure& measure,
                         const LocallyConstantFunction& u, double pressure_constant,
                         int n_max, std::size_t budget = 10'000'000,
                         double growth_tolerance = 0.01);

// Number of admissible words of length n - 1 + depth_for(eps): one
// representative per Bowen cylinder, i.e. a maximal (n, eps)-separated
// set. Saturates at UINT64_MAX instead of overflowing.
std::uint64_t separated_count(const TransitionSystem& sys, int n, double eps);

}  // namespace orbitglue

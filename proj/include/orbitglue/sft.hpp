#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "orbitglue/error.hpp"

namespace orbitglue {

// A finite word over the alphabet {0, ..., d-1}.
using Word = std::vector<int>;

/*
 * One-sided subshift of finite type over a boolean transition matrix A.
 * A sequence (x_j) is admissible when A[x_j][x_{j+1}] holds for every j.
 * Construction rejects matrices with an empty row or column and
 * non-strongly-connected matrices; connect_time(i, j) is the minimal
 * number n >= 1 of edges on a path i -> j, and max_connect_time() is its
 * maximum over all pairs.
 */
class TransitionSystem {
 public:
  explicit TransitionSystem(const std::vector<std::vector<int>>& rows);

  int alphabet_size() const { return d_; }
  bool allowed(int i, int j) const { return allowed_[static_cast<size_t>(i) * d_ + j] != 0; }
  int connect_time(int i, int j) const { return connect_[static_cast<size_t>(i) * d_ + j]; }
  int max_connect_time() const { return max_connect_; }
  const std::vector<int>& successors(int i) const { return succ_[i]; }

  bool word_admissible(const Word& w) const;
  // Vertex sequence of the lexicographically smallest shortest path i -> j,
  // including both endpoints; size() == connect_time(i, j) + 1.
  std::vector<int> shortest_path(int i, int j) const;
  // A fixed admissible cycle used as the deterministic periodic tail of
  // constructed points: the lexicographically smallest shortest cycle
  // through symbol 0.
  const Word& anchor_cycle() const { return anchor_cycle_; }

  bool operator==(const TransitionSystem& o) const {
    return d_ == o.d_ && allowed_ == o.allowed_;
  }

 private:
  int d_;
  std::vector<std::uint8_t> allowed_;
  std::vector<int> connect_;
  int max_connect_;
  std::vector<std::vector<int>> succ_;
  Word anchor_cycle_;
};

/*
 * Eventually periodic point of the shift: preperiod * cycle^infinity.
 * The stored form is canonical: the cycle has minimal period and the
 * preperiod has minimal length (its last symbol never equals the last
 * symbol of the phase-aligned cycle, otherwise it would be absorbed).
 * Canonical forms are unique, so equality of points is field equality.
 */
class SymbolicPoint {
 public:
  SymbolicPoint(Word preperiod, Word cycle);

  const Word& preperiod() const { return pre_; }
  const Word& cycle() const { return cyc_; }

  int at(std::size_t j) const {
    return j < pre_.size() ? pre_[j]
                           : cyc_[(j - pre_.size()) % cyc_.size()];
  }

  SymbolicPoint shifted() const;
  Word prefix(std::size_t n) const;

  bool operator==(const SymbolicPoint& o) const {
    return pre_ == o.pre_ && cyc_ == o.cyc_;
  }
  bool operator!=(const SymbolicPoint& o) const { return !(*this == o); }

 private:
  Word pre_, cyc_;
};

struct CylinderWord {
  Word symbols;
  std::size_t length() const { return symbols.size(); }
};

bool point_admissible(const TransitionSystem& sys, const SymbolicPoint& x);

SymbolicPoint shift(const TransitionSystem& sys, const SymbolicPoint& x);

// 2^{-N} with N the first index where the sequences disagree; 0 if equal.
double symbol_distance(const SymbolicPoint& x, const SymbolicPoint& y);

// Distance between shift^a(x) and shift^b(y) without materializing the
// shifted points. agreement_limit() bounds the scan: two eventually
// periodic sequences that agree that far agree everywhere.
std::size_t agreement_limit(const SymbolicPoint& x, std::size_t a,
                            const SymbolicPoint& y, std::size_t b);
double symbol_distance_shifted(const SymbolicPoint& x, std::size_t a,
                               const SymbolicPoint& y, std::size_t b);

// Smallest nonnegative N with 2^{-N} < eps (strict); d(x, y) < eps is
// equivalent to agreement on the first N symbols.
int depth_for(double eps);

// The (n - 1 + depth_for(eps))-prefix of x; the points sharing this prefix
// are exactly those y with d(shift^j x, shift^j y) < eps for 0 <= j <= n-1.
CylinderWord bowen_cylinder(const TransitionSystem& sys, const SymbolicPoint& x,
                            int n, double eps);

// All admissible words of the given length in lexicographic order.
// Throws budget_exceeded if the count would exceed `budget`.
std::vector<Word> enumerate_admissible_words(const TransitionSystem& sys,
                                             int length,
                                             std::size_t budget = 10'000'000);

// Extends an admissible prefix to an eventually periodic point by appending
// the shortest lexicographically-smallest path onto the system's anchor
// cycle. Deterministic; used for cylinder representatives and glue tails.
SymbolicPoint extend_prefix_periodically(const TransitionSystem& sys, const Word& prefix);

std::string word_to_string(const Word& w);

}  // namespace orbitglue

#include "orbitglue/sft.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace orbitglue {

namespace {

// Left-shift the cycle phase one step backwards: the last symbol becomes
// the head. Used when absorbing a preperiod symbol into the cycle.
void rotate_right(Word& w) {
  if (w.size() <= 1) return;
  int last = w.back();
  w.pop_back();
  w.insert(w.begin(), last);
}

Word primitive_cycle(const Word& c) {
  const std::size_t r = c.size();
  for (std::size_t p = 1; p < r; ++p) {
    if (r % p != 0) continue;
    bool periodic = true;
    for (std::size_t j = p; j < r && periodic; ++j) {
      periodic = c[j] == c[j - p];
    }
    if (periodic) return Word(c.begin(), c.begin() + static_cast<long>(p));
  }
  return c;
}

}  // namespace

TransitionSystem::TransitionSystem(const std::vector<std::vector<int>>& rows) {
  d_ = static_cast<int>(rows.size());
  if (d_ < 1) raise(errc::invalid_argument, "transition matrix must have at least one row");
  allowed_.assign(static_cast<size_t>(d_) * d_, 0);
  for (int i = 0; i < d_; ++i) {
    if (static_cast<int>(rows[i].size()) != d_) {
      raise(errc::invalid_argument, "transition matrix must be square");
    }
    for (int j = 0; j < d_; ++j) {
      if (rows[i][j] != 0 && rows[i][j] != 1) {
        raise(errc::invalid_argument, "transition matrix entries must be 0 or 1");
      }
      allowed_[static_cast<size_t>(i) * d_ + j] = static_cast<std::uint8_t>(rows[i][j]);
    }
  }
  for (int i = 0; i < d_; ++i) {
    bool any_row = false, any_col = false;
    for (int j = 0; j < d_; ++j) {
      any_row = any_row || allowed(i, j);
      any_col = any_col || allowed(j, i);
    }
    if (!any_row) raise(errc::zero_row, "symbol " + std::to_string(i) + " has no successor");
    if (!any_col) raise(errc::zero_column, "symbol " + std::to_string(i) + " has no predecessor");
  }

  succ_.resize(d_);
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) {
      if (allowed(i, j)) succ_[i].push_back(j);
    }
  }

  // connect_time(i, j): BFS over edges from each source; path length counts
  // edges, so a self-loop gives connect_time(i, i) = 1.
  connect_.assign(static_cast<size_t>(d_) * d_, -1);
  for (int src = 0; src < d_; ++src) {
    std::vector<int> dist(d_, -1);
    std::deque<int> queue;
    for (int j : succ_[src]) {
      if (dist[j] < 0) {
        dist[j] = 1;
        queue.push_back(j);
      }
    }
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (int w : succ_[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
      }
    }
    for (int j = 0; j < d_; ++j) {
      if (dist[j] < 0) {
        raise(errc::not_transitive,
              "no path from symbol " + std::to_string(src) + " to " + std::to_string(j));
      }
      connect_[static_cast<size_t>(src) * d_ + j] = dist[j];
    }
  }
  max_connect_ = *std::max_element(connect_.begin(), connect_.end());

  std::vector<int> loop = shortest_path(0, 0);
  anchor_cycle_.assign(loop.begin(), loop.end() - 1);
}

bool TransitionSystem::word_admissible(const Word& w) const {
  for (int s : w) {
    if (s < 0 || s >= d_) return false;
  }
  for (std::size_t j = 0; j + 1 < w.size(); ++j) {
    if (!allowed(w[j], w[j + 1])) return false;
  }
  return true;
}

std::vector<int> TransitionSystem::shortest_path(int i, int j) const {
  // Greedy over BFS distances: from v, step to the smallest successor that
  // still lies on some shortest path; yields the lexicographically smallest
  // shortest path deterministically.
  int remaining = connect_time(i, j);
  std::vector<int> path{i};
  int v = i;
  while (remaining > 0) {
    for (int w : succ_[v]) {
      if (remaining == 1 ? w == j : connect_time(w, j) == remaining - 1) {
        path.push_back(w);
        v = w;
        break;
      }
    }
    --remaining;
  }
  return path;
}

SymbolicPoint::SymbolicPoint(Word preperiod, Word cycle)
    : pre_(std::move(preperiod)), cyc_(std::move(cycle)) {
  if (cyc_.empty()) raise(errc::invalid_argument, "cycle word must be nonempty");
  cyc_ = primitive_cycle(cyc_);
  while (!pre_.empty() && pre_.back() == cyc_.back()) {
    pre_.pop_back();
    rotate_right(cyc_);
  }
}

SymbolicPoint SymbolicPoint::shifted() const {
  if (!pre_.empty()) {
    return SymbolicPoint(Word(pre_.begin() + 1, pre_.end()), cyc_);
  }
  Word rotated(cyc_.begin() + 1, cyc_.end());
  rotated.push_back(cyc_.front());
  return SymbolicPoint({}, rotated);
}

Word SymbolicPoint::prefix(std::size_t n) const {
  Word out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = at(j);
  return out;
}

bool point_admissible(const TransitionSystem& sys, const SymbolicPoint& x) {
  Word window = x.prefix(x.preperiod().size() + x.cycle().size() + 1);
  return sys.word_admissible(window);
}

SymbolicPoint shift(const TransitionSystem& sys, const SymbolicPoint& x) {
  if (!point_admissible(sys, x)) {
    raise(errc::invalid_argument, "point is not admissible in this system");
  }
  return x.shifted();
}

std::size_t agreement_limit(const SymbolicPoint& x, std::size_t a,
                            const SymbolicPoint& y, std::size_t b) {
  std::size_t px = x.preperiod().size() > a ? x.preperiod().size() - a : 0;
  std::size_t py = y.preperiod().size() > b ? y.preperiod().size() - b : 0;
  std::size_t l = std::lcm(x.cycle().size(), y.cycle().size());
  return std::max(px, py) + l;
}

double symbol_distance_shifted(const SymbolicPoint& x, std::size_t a,
                               const SymbolicPoint& y, std::size_t b) {
  std::size_t limit = agreement_limit(x, a, y, b);
  for (std::size_t j = 0; j < limit; ++j) {
    if (x.at(a + j) != y.at(b + j)) return std::ldexp(1.0, -static_cast<int>(j));
  }
  return 0.0;
}

double symbol_distance(const SymbolicPoint& x, const SymbolicPoint& y) {
  return symbol_distance_shifted(x, 0, y, 0);
}

int depth_for(double eps) {
  if (!(eps > 0.0)) raise(errc::non_positive_epsilon, "epsilon must be positive");
  int n = 0;
  while (std::ldexp(1.0, -n) >= eps) ++n;
  return n;
}

CylinderWord bowen_cylinder(const TransitionSystem& sys, const SymbolicPoint& x,
                            int n, double eps) {
  (void)sys;
  if (n < 1) raise(errc::invalid_argument, "cylinder order must be >= 1");
  int len = n - 1 + depth_for(eps);
  return CylinderWord{x.prefix(static_cast<std::size_t>(std::max(len, 0)))};
}

std::vector<Word> enumerate_admissible_words(const TransitionSystem& sys, int length,
                                             std::size_t budget) {
  std::vector<Word> out;
  if (length <= 0) {
    out.push_back({});
    return out;
  }
  Word current;
  current.reserve(static_cast<std::size_t>(length));
  // Depth-first in symbol order, so the output is lexicographically sorted.
  auto rec = [&](auto&& self, int depth) -> void {
    if (depth == length) {
      if (out.size() >= budget) {
        raise(errc::budget_exceeded, "admissible word enumeration exceeds budget");
      }
      out.push_back(current);
      return;
    }
    if (current.empty()) {
      for (int s = 0; s < sys.alphabet_size(); ++s) {
        current.push_back(s);
        self(self, depth + 1);
        current.pop_back();
      }
    } else {
      for (int s : sys.successors(current.back())) {
        current.push_back(s);
        self(self, depth + 1);
        current.pop_back();
      }
    }
  };
  rec(rec, 0);
  return out;
}

SymbolicPoint extend_prefix_periodically(const TransitionSystem& sys, const Word& prefix) {
  if (!sys.word_admissible(prefix)) {
    raise(errc::invalid_argument, "prefix is not admissible");
  }
  const Word& cycle = sys.anchor_cycle();
  if (prefix.empty()) return SymbolicPoint({}, cycle);
  std::vector<int> bridge = sys.shortest_path(prefix.back(), cycle.front());
  Word pre = prefix;
  pre.insert(pre.end(), bridge.begin() + 1, bridge.end() - 1);
  return SymbolicPoint(std::move(pre), cycle);
}

std::string word_to_string(const Word& w) {
  std::string s;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j) s.push_back(',');
    s += std::to_string(w[j]);
  }
  return s;
}

}  // namespace orbitglue

#pragma once

#include <map>
#include <vector>

#include "orbitglue/sft.hpp"

namespace orbitglue {

/*
 * Real-valued function on the shift space depending only on the first
 * `depth` symbols, stored as a total table over admissible depth-words.
 * Evaluation on a longer word or on a point reads the depth-prefix.
 * Functions do not hold a reference to their system; operations that need
 * word enumeration take the system explicitly.
 */
class LocallyConstantFunction {
 public:
  LocallyConstantFunction(const TransitionSystem& sys, int depth,
                          std::map<Word, double> table);

  static LocallyConstantFunction constant(const TransitionSystem& sys, double value);
  // Indicator of the length-1 cylinder [symbol].
  static LocallyConstantFunction cylinder_indicator(const TransitionSystem& sys, int symbol);

  int depth() const { return depth_; }
  const std::map<Word, double>& table() const { return table_; }
  double min_value() const { return min_; }
  double max_value() const { return max_; }

  // w must be admissible with size() >= depth; reads the depth-prefix.
  double value_word(const Word& w) const;
  double value_at(const SymbolicPoint& x) const { return value_shifted(x, 0); }
  // Value at shift^j(x) without materializing the shifted point.
  double value_shifted(const SymbolicPoint& x, std::size_t j) const;

  LocallyConstantFunction recoded(const TransitionSystem& sys, int new_depth) const;

 private:
  int depth_;
  std::map<Word, double> table_;
  double min_, max_;
};

// Pointwise linear combination sum coef_i * f_i at depth max(depth_i).
LocallyConstantFunction combine(
    const TransitionSystem& sys,
    const std::vector<std::pair<double, const LocallyConstantFunction*>>& terms);

}  // namespace orbitglue

#include "orbitglue/function.hpp"

#include <algorithm>
#include <limits>

namespace orbitglue {

LocallyConstantFunction::LocallyConstantFunction(const TransitionSystem& sys, int depth,
                                                 std::map<Word, double> table)
    : depth_(depth), table_(std::move(table)) {
  if (depth_ < 1) raise(errc::invalid_argument, "function depth must be >= 1");
  std::vector<Word> words = enumerate_admissible_words(sys, depth_);
  for (const Word& w : words) {
    if (table_.find(w) == table_.end()) {
      raise(errc::invalid_argument,
            "function table missing admissible word (" + word_to_string(w) + ")");
    }
  }
  for (const auto& [w, v] : table_) {
    if (!sys.word_admissible(w) || static_cast<int>(w.size()) != depth_) {
      raise(errc::invalid_argument,
            "function table key (" + word_to_string(w) + ") is not an admissible depth-word");
    }
    (void)v;
  }
  min_ = std::numeric_limits<double>::infinity();
  max_ = -std::numeric_limits<double>::infinity();
  for (const auto& [w, v] : table_) {
    min_ = std::min(min_, v);
    max_ = std::max(max_, v);
  }
}

LocallyConstantFunction LocallyConstantFunction::constant(const TransitionSystem& sys,
                                                          double value) {
  std::map<Word, double> table;
  for (int s = 0; s < sys.alphabet_size(); ++s) table[{s}] = value;
  return LocallyConstantFunction(sys, 1, std::move(table));
}

LocallyConstantFunction LocallyConstantFunction::cylinder_indicator(const TransitionSystem& sys,
                                                                    int symbol) {
  std::map<Word, double> table;
  for (int s = 0; s < sys.alphabet_size(); ++s) table[{s}] = s == symbol ? 1.0 : 0.0;
  return LocallyConstantFunction(sys, 1, std::move(table));
}

double LocallyConstantFunction::value_word(const Word& w) const {
  if (static_cast<int>(w.size()) == depth_) {
    auto it = table_.find(w);
    if (it == table_.end()) {
      raise(errc::invalid_argument, "word (" + word_to_string(w) + ") not in function table");
    }
    return it->second;
  }
  if (static_cast<int>(w.size()) < depth_) {
    raise(errc::depth_mismatch, "word shorter than function depth");
  }
  Word prefix(w.begin(), w.begin() + depth_);
  return value_word(prefix);
}

double LocallyConstantFunction::value_shifted(const SymbolicPoint& x, std::size_t j) const {
  Word w(static_cast<std::size_t>(depth_));
  for (int i = 0; i < depth_; ++i) w[static_cast<std::size_t>(i)] = x.at(j + i);
  auto it = table_.find(w);
  if (it == table_.end()) {
    raise(errc::invalid_argument, "point window (" + word_to_string(w) + ") not in function table");
  }
  return it->second;
}

LocallyConstantFunction LocallyConstantFunction::recoded(const TransitionSystem& sys,
                                                         int new_depth) const {
  if (new_depth < depth_) raise(errc::depth_mismatch, "cannot recode to smaller depth");
  if (new_depth == depth_) return *this;
  std::map<Word, double> table;
  for (const Word& w : enumerate_admissible_words(sys, new_depth)) {
    table[w] = value_word(w);
  }
  return LocallyConstantFunction(sys, new_depth, std::move(table));
}

LocallyConstantFunction combine(
    const TransitionSystem& sys,
    const std::vector<std::pair<double, const LocallyConstantFunction*>>& terms) {
  if (terms.empty()) raise(errc::invalid_argument, "combine requires at least one term");
  int depth = 1;
  for (const auto& [c, f] : terms) {
    (void)c;
    depth = std::max(depth, f->depth());
  }
  std::map<Word, double> table;
  for (const Word& w : enumerate_admissible_words(sys, depth)) {
    double v = 0.0;
    for (const auto& [c, f] : terms) v += c * f->value_word(w);
    table[w] = v;
  }
  return LocallyConstantFunction(sys, depth, std::move(table));
}

}  // namespace orbitglue

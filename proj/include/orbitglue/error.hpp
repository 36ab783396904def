#pragma once

#include <stdexcept>
#include <string>

namespace orbitglue {

// Every failure mode in the library maps to one code; the CLI turns the
// category into a process exit code (validation -> 2, numerical -> 3).
enum class errc {
  zero_row,
  zero_column,
  not_transitive,
  non_positive_epsilon,
  negative_time,
  depth_mismatch,
  scale_too_coarse,
  outside_feasible_range,
  horizon_too_short,
  invalid_argument,
  config_invalid,
  eigen_not_converged,
  bracket_not_found,
  budget_exceeded,
};

enum class error_category { validation, numerical };

constexpr error_category category_of(errc c) {
  switch (c) {
    case errc::eigen_not_converged:
    case errc::bracket_not_found:
    case errc::budget_exceeded:
      return error_category::numerical;
    default:
      return error_category::validation;
  }
}

const char* errc_name(errc c);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  errc code() const { return code_; }
  error_category category() const { return category_of(code_); }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace orbitglue

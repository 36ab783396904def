#pragma once

#include <cstddef>
#include <vector>

namespace orbitglue {

// Compensated accumulator; keeps long roof-sum and Birkhoff-sum loops
// accurate to a few ulps independently of length.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  // The sum this accumulator would hold after add(v), without committing.
  double with(double v) const {
    const double y = v - carry;
    return sum + y;
  }
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y ~ intercept + slope * x with the usual
// residual-based standard error for the slope (0 when points <= 2).
LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace orbitglue

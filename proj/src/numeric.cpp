#include "orbitglue/numeric.hpp"

#include <cmath>

#include "orbitglue/error.hpp"

namespace orbitglue {

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    raise(errc::invalid_argument, "line fit needs >= 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) raise(errc::invalid_argument, "line fit needs distinct x values");
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.points = xs.size();
  if (xs.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - out.intercept - out.slope * xs[i];
      rss += r * r;
    }
    out.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return out;
}

}  // namespace orbitglue

#include "pathxai/tdist.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <stdexcept>

namespace pathxai {

double t_distribution_sf(double t, double df) {
  if (!(df >= 1.0) || !std::isfinite(df)) {
    throw std::invalid_argument("t_distribution_sf: degrees of freedom must be >= 1");
  }
  if (std::isnan(t)) throw std::invalid_argument("t_distribution_sf: t is NaN");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  return boost::math::ibeta(df / 2.0, 0.5, x);
}

double f_distribution_sf(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) {
    throw std::invalid_argument("f_distribution_sf: degrees of freedom must be positive");
  }
  if (std::isnan(f)) throw std::invalid_argument("f_distribution_sf: F is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

}  // namespace pathxai

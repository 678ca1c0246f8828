#include "survscreen/normal.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "survscreen/errors.hpp"

namespace survscreen {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

double z_critical(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::complement(boost::math::normal(), alpha / 2.0));
}

}  // namespace survscreen

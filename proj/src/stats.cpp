#include "derrd/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

namespace derrd {

double student_t_two_sided_p(double t, double df) {
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

double chi_squared_upper_p(double x, double df) {
  const boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, x));
}

}  // namespace derrd

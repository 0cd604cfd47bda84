#pragma once

namespace derrd {

// Two-sided p-value of a Student-t statistic with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

// P(X >= x) for a chi-squared variable with `df` degrees of freedom.
double chi_squared_upper_p(double x, double df);

}  // namespace derrd

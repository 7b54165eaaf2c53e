#pragma once

namespace mhel::stats {

// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0, 1]. Continued
// fraction (modified Lentz) with relative tolerance ~1e-15.
double incomplete_beta(double a, double b, double x);

// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` > 0
// degrees of freedom. Infinite |t| gives 0.
double student_t_two_sided_p(double t, double df);

}  // namespace mhel::stats

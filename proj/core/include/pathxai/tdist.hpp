#pragma once

namespace pathxai {

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` degrees
/// of freedom (df >= 1, may be fractional for Welch), via the regularized
/// incomplete beta function I_{df/(df+t^2)}(df/2, 1/2).
double t_distribution_sf(double t, double df);

/// Upper tail P(F >= f) of the F distribution with (d1, d2) degrees of freedom.
double f_distribution_sf(double f, double d1, double d2);

}  // namespace pathxai

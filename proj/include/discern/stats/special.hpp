#pragma once

// Special functions behind every p-value in the project.
//
// The regularized incomplete beta function is evaluated by its continued
// fraction (modified Lentz), stopping when a step changes the value by less
// than kBetaTolerance relative. Student-t probabilities reduce to it:
//   P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2).

namespace discern::stats {

inline constexpr double kBetaTolerance = 1e-14;
inline constexpr int kBetaMaxIterations = 10'000;

// I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

double normal_cdf(double z);
// P(|Z| > |z|).
double normal_two_tailed_p(double z);

double student_t_cdf(double t, double df);
// P(|T| > |t|) with df degrees of freedom.
double student_t_two_tailed_p(double t, double df);

// Survival function of the Kolmogorov distribution,
//   Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2),
// truncated once a term drops below 1e-12. Below lambda = 1 the equivalent
// theta-function form is summed instead; it converges fast there.
double kolmogorov_sf(double lambda);

}  // namespace discern::stats

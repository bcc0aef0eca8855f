#pragma once

namespace threshova {

// Standard normal CDF, accurate to ~1e-15 absolute.
double std_normal_cdf(double x);

// Standard normal density.
double std_normal_pdf(double x);

// Inverse standard normal CDF on (0,1).
double std_normal_quantile(double p);

// Regularized lower incomplete gamma P(a, x).
double reg_lower_gamma(double a, double x);

// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

// Chi-square CDF with df degrees of freedom and noncentrality ncp >= 0.
// The noncentral case is a Poisson(ncp/2) mixture of central CDFs, truncated
// once the remaining Poisson weight drops below 1e-12.
double chi_square_cdf(double x, int df, double ncp = 0.0);

// Inverse central chi-square CDF.
double chi_square_quantile(double p, int df);

// Fisher F CDF and quantile with d1, d2 degrees of freedom.
double fisher_f_cdf(double x, int d1, int d2);
double fisher_f_quantile(double p, int d1, int d2);

}  // namespace threshova

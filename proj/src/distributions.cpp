#include "threshova/distributions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "threshova/errors.hpp"

namespace threshova {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

// Series expansion of P(a,x), converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x) = 1 - P(a,x), Lentz's algorithm; for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the incomplete beta (Lentz).
double betacf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

// Acklam's rational minimax approximation to the probit, ~1.15e-9 relative.
double probit_approx(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double chi_square_pdf(double x, int df) {
  if (x <= 0.0) return 0.0;
  double a = 0.5 * df;
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a));
}

}  // namespace

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) throw DomainError("std_normal_cdf: non-finite input");
  return 0.5 * std::erfc(-x / kSqrt2);
}

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("std_normal_quantile: p must lie in (0,1), got " + std::to_string(p));
  double x = probit_approx(p);
  // One Halley step against the high-precision CDF pushes the error to ~1e-15.
  double e = std_normal_cdf(x) - p;
  double u = e / std_normal_pdf(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double reg_lower_gamma(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw DomainError("reg_lower_gamma: invalid arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double reg_inc_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw DomainError("reg_inc_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double chi_square_cdf(double x, int df, double ncp) {
  if (df < 1) throw DomainError("chi_square_cdf: df must be >= 1");
  if (x < 0.0) throw DomainError("chi_square_cdf: x must be nonnegative");
  if (ncp < 0.0) throw DomainError("chi_square_cdf: ncp must be nonnegative");
  if (x == 0.0) return 0.0;
  if (ncp == 0.0) return reg_lower_gamma(0.5 * df, 0.5 * x);

  // Poisson(ncp/2) mixture over central chi-square CDFs.  Terms are taken
  // outward from the modal index until the residual weight is below 1e-12.
  const double half = 0.5 * ncp;
  const long mode = static_cast<long>(half);
  auto log_pois = [half](long j) {
    return -half + j * std::log(half) - std::lgamma(static_cast<double>(j) + 1.0);
  };
  double sum = 0.0;
  double weight = 0.0;
  long lo = mode;
  long hi = mode;
  double wlo = std::exp(log_pois(mode));
  double whi = wlo;
  sum += wlo * reg_lower_gamma(0.5 * (df + 2.0 * mode), 0.5 * x);
  weight += wlo;
  while (weight < 1.0 - 1e-12) {
    bool stepped = false;
    if (hi - mode < 100000) {
      ++hi;
      whi *= half / static_cast<double>(hi);
      sum += whi * reg_lower_gamma(0.5 * (df + 2.0 * hi), 0.5 * x);
      weight += whi;
      stepped = true;
    }
    if (lo > 0) {
      wlo *= static_cast<double>(lo) / half;
      --lo;
      sum += wlo * reg_lower_gamma(0.5 * (df + 2.0 * lo), 0.5 * x);
      weight += wlo;
      stepped = true;
    }
    if (!stepped) break;
  }
  return std::min(sum, 1.0);
}

double chi_square_quantile(double p, int df) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("chi_square_quantile: p must lie in (0,1)");
  // Wilson-Hilferty start, then safeguarded Newton on the CDF.
  double z = std_normal_quantile(p);
  double k = static_cast<double>(df);
  double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  double x = k * t * t * t;
  if (x <= 0.0) x = 0.5 / k;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    double f = chi_square_cdf(x, df) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    double dens = chi_square_pdf(x, df);
    double step = (dens > 0.0) ? f / dens : 0.0;
    double xn = x - step;
    if (!(xn > lo && (xn < hi))) xn = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * x + 1.0;
    if (std::abs(xn - x) < 1e-13 * (1.0 + x) && std::abs(f) < 1e-12) {
      x = xn;
      break;
    }
    x = xn;
  }
  return x;
}

double fisher_f_cdf(double x, int d1, int d2) {
  if (d1 < 1 || d2 < 1) throw DomainError("fisher_f_cdf: degrees of freedom must be >= 1");
  if (x <= 0.0) return 0.0;
  double a = 0.5 * d1;
  double b = 0.5 * d2;
  double u = d1 * x / (d1 * x + d2);
  return reg_inc_beta(a, b, u);
}

double fisher_f_quantile(double p, int d1, int d2) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("fisher_f_quantile: p must lie in (0,1)");
  if (d1 < 1 || d2 < 1) throw DomainError("fisher_f_quantile: degrees of freedom must be >= 1");
  // Bisection on the monotone CDF, then a few Newton polish steps.
  double lo = 0.0;
  double hi = 1.0;
  while (fisher_f_cdf(hi, d1, d2) < p) {
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double f = fisher_f_cdf(x, d1, d2) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    x = 0.5 * (lo + hi);
    if (hi - lo < 1e-14 * (1.0 + hi)) break;
  }
  return x;
}

}  // namespace threshova

#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace mixkin {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;       // absolute error estimate
  bool converged = true;
};

// Adaptive Simpson on [a,b] to abs+rel tolerance.  Error estimate is the
// accumulated |S2-S1|/15 of accepted panels.
QuadResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                            double abs_tol = 1e-10, double rel_tol = 1e-10,
                            int max_depth = 48);

// Gauss-Legendre nodes/weights on [-1,1], computed once per order by Newton
// iteration on the Legendre recurrence.
struct GaussRule {
  std::vector<double> node;
  std::vector<double> weight;
};
const GaussRule& gauss_legendre(int n);

// Integrate f over [a,b] with an n-point Gauss rule.
double gauss_panel(const std::function<double(double)>& f, double a, double b, int n);

// Geometrically graded panels covering [a,b] (a>0), finer toward a; each
// panel integrated with an n-point Gauss rule.  The error estimate compares
// against the embedded n/2-point evaluation.
QuadResult graded_gauss(const std::function<double(double)>& f, double a, double b,
                        int panels = 24, int n = 16);

// Plain composite trapezoid with n+1 equispaced nodes (oracle-grade).
double trapezoid(const std::function<double(double)>& f, double a, double b, int n);

// ---- log-Gamma based special values ----------------------------------------

// Euler Beta via log-Gamma, B(a,b) = Gamma(a)Gamma(b)/Gamma(a+b).
inline double beta_fn(double a, double b) {
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

// Binomial coefficient, exact through lgamma.
inline double binom(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

// Gamma-ratio weight u_{s,k} = Gamma(k+1)/Gamma(k+1-s/2).
inline double u_gamma_ratio(double s, double k) {
  return std::exp(std::lgamma(k + 1.0) - std::lgamma(k + 1.0 - 0.5 * s));
}

// Bessel J0, Abramowitz-Stegun rational fits (|err| < 2e-8).
double bessel_j0(double x);

}  // namespace mixkin

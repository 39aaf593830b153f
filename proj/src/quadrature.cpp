#include "mixkin/quadrature.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace mixkin {

namespace {

struct SimpsonState {
  const std::function<double(double)>* f;
  double abs_tol, rel_tol;
  double err_accum = 0.0;
  bool converged = true;
};

double simpson_rec(SimpsonState& st, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = (*st.f)(lm), frm = (*st.f)(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0) {
    st.converged = false;
    st.err_accum += std::fabs(delta);
    return left + right + delta / 15.0;
  }
  if (std::fabs(delta) <= 15.0 * tol) {
    st.err_accum += std::fabs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_rec(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

QuadResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                            double abs_tol, double rel_tol, int max_depth) {
  SimpsonState st{&f, abs_tol, rel_tol};
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double tol = std::max(abs_tol, rel_tol * std::fabs(whole));
  double v = simpson_rec(st, a, b, fa, fm, fb, whole, tol, max_depth);
  // one refinement pass if the relative target moved
  double tol2 = std::max(abs_tol, rel_tol * std::fabs(v));
  if (tol2 < 0.5 * tol) {
    st = SimpsonState{&f, abs_tol, rel_tol};
    v = simpson_rec(st, a, b, fa, fm, fb, whole, tol2, max_depth);
  }
  return {v, st.err_accum, st.converged};
}

const GaussRule& gauss_legendre(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lk(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  GaussRule r;
  r.node.resize(n);
  r.weight.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, Newton on P_n
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    r.node[i] = x;
    r.weight[i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

double gauss_panel(const std::function<double(double)>& f, double a, double b, int n) {
  const GaussRule& g = gauss_legendre(n);
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += g.weight[i] * f(c + h * g.node[i]);
  return h * s;
}

QuadResult graded_gauss(const std::function<double(double)>& f, double a, double b,
                        int panels, int n) {
  if (!(a > 0.0) || !(b > a)) throw std::invalid_argument("graded_gauss: need 0 < a < b");
  double ratio = std::pow(b / a, 1.0 / panels);
  double value = 0.0, coarse = 0.0;
  double lo = a;
  int nc = std::max(2, n / 2);
  for (int k = 0; k < panels; ++k) {
    double hi = (k + 1 == panels) ? b : lo * ratio;
    value += gauss_panel(f, lo, hi, n);
    coarse += gauss_panel(f, lo, hi, nc);
    lo = hi;
  }
  return {value, std::fabs(value - coarse), true};
}

double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
  double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return h * s;
}

double bessel_j0(double x) {
  double ax = std::fabs(x);
  if (ax < 8.0) {
    double y = x * x;
    double p1 = 57568490574.0 + y * (-13362590354.0 + y * (651619640.7 +
                 y * (-11214424.18 + y * (77392.33017 + y * (-184.9052456)))));
    double p2 = 57568490411.0 + y * (1029532985.0 + y * (9494680.718 +
                 y * (59272.64853 + y * (267.8532712 + y))));
    return p1 / p2;
  }
  double z = 8.0 / ax;
  double y = z * z;
  double xx = ax - 0.785398164;
  double p1 = 1.0 + y * (-0.1098628627e-2 + y * (0.2734510407e-4 +
               y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
  double p2 = -0.1562499995e-1 + y * (0.1430488765e-3 + y * (-0.6911147651e-5 +
               y * (0.7621095161e-6 + y * (-0.934935152e-7))));
  return std::sqrt(0.636619772 / ax) * (std::cos(xx) * p1 - z * std::sin(xx) * p2);
}

}  // namespace mixkin

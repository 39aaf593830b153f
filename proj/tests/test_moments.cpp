#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixkin/collision.hpp"
#include "mixkin/moments.hpp"
#include "mixkin/quadrature.hpp"
#include "mixkin/rng.hpp"

using namespace mixkin;

namespace {

// Independent dense-trapezoid oracle for the angular bracket-power exchange.
// Builds its own azimuth frame (cross products, not make_frame) and walks a
// uniform theta grid; the phi trapezoid is exact for the trig polynomial.
// Below theta_lo the phi-averaged exchange drops under the rounding floor of
// the bracket powers, so that piece comes from the even (theta^2, theta^4)
// expansion anchored at safely large angles.
double povzner_lhs_oracle(const Vec3& v, const Vec3& vs, double mi, double mj, int n,
                          double s, double kappa, int ntheta = 100000, int nphi = 256) {
  Vec3 u = v - vs;
  double r = norm(u);
  if (r == 0.0) return 0.0;
  Vec3 uhat = u * (1.0 / r);
  Vec3 helper = std::fabs(uhat.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 e1 = cross(uhat, helper);
  e1 = e1 * (1.0 / norm(e1));
  Vec3 e2 = cross(uhat, e1);
  const double msum = mi + mj;
  const double bi = 1.0 + mi * norm2(v);
  const double bj = 1.0 + mj * norm2(vs);
  auto avg = [&](double t) {
    double one_m_cos = 1.0 - std::cos(t);
    double st = std::sin(t);
    double acc = 0.0;
    for (int q = 0; q < nphi; ++q) {
      double phi = 2.0 * kPi * q / nphi;
      Vec3 G = r * (std::cos(phi) * e1 + std::sin(phi) * e2);
      Vec3 vp = v - (mj / msum) * one_m_cos * u + (mj / msum) * st * G;
      Vec3 vsp = vs + (mi / msum) * one_m_cos * u - (mi / msum) * st * G;
      acc += std::pow(1.0 + mi * norm2(vp), n) + std::pow(1.0 + mj * norm2(vsp), n) -
             std::pow(bi, n) - std::pow(bj, n);
    }
    return acc / nphi;
  };
  auto g = [&](double t) { return 2.0 * kPi * avg(t) * kappa * std::pow(t, -1.0 - s); };
  const double lo = 1e-4;
  const double hi = 0.5 * kPi;
  double h = (hi - lo) / ntheta;
  double acc = 0.5 * (g(lo) + g(hi));
  for (int k = 1; k < ntheta; ++k) acc += g(lo + k * h);
  double body = acc * h;
  // [0, lo] tail with anchors distinct from the implementation's
  double t1 = 4e-3, t2 = 2e-3;
  double a1 = avg(t1) / (t1 * t1);
  double a2 = avg(t2) / (t2 * t2);
  double c4 = (a1 - a2) / (t1 * t1 - t2 * t2);
  double c2 = a2 - c4 * t2 * t2;
  double tail = 2.0 * kPi * kappa *
                (c2 * std::pow(lo, 2.0 - s) / (2.0 - s) +
                 c4 * std::pow(lo, 4.0 - s) / (4.0 - s));
  return body + tail;
}

MomentTable constant_table(int nsp, const std::vector<double>& rho,
                           const std::vector<double>& orders, double t = 0.5) {
  // point masses at the origin: every bracket moment equals the density
  MomentTable tb;
  tb.n_species = nsp;
  tb.times = {t};
  tb.orders = orders;
  tb.values = {std::vector<std::vector<double>>(nsp)};
  for (int i = 0; i < nsp; ++i) tb.values[0][i].assign(orders.size(), rho[i]);
  return tb;
}

KernelMatrix uniform_kernel(int n, double lam, double s, double kap) {
  KernelMatrix k;
  k.size = n;
  k.lambda.assign(n * n, lam);
  k.s.assign(n * n, s);
  k.kappa.assign(n * n, kap);
  return k;
}

// table of bracket moments of a random atom ensemble
MomentTable atom_table(RngStream& rng, int nsp, const std::vector<double>& orders,
                       double spread) {
  MomentTable tb;
  tb.n_species = nsp;
  tb.times = {1.0};
  tb.orders = orders;
  tb.values = {std::vector<std::vector<double>>(nsp)};
  for (int i = 0; i < nsp; ++i) {
    int atoms = 3 + static_cast<int>(rng.u01() * 20);
    std::vector<double> w(atoms), b(atoms);
    for (int q = 0; q < atoms; ++q) {
      w[q] = rng.u01_open0();
      double rr = spread * rng.u01();
      b[q] = std::sqrt(1.0 + rr * rr);
    }
    for (double k : orders) {
      double acc = 0.0;
      for (int q = 0; q < atoms; ++q) acc += w[q] * std::pow(b[q], k);
      tb.values[0][i].push_back(acc);
    }
  }
  return tb;
}

}  // namespace

TEST_CASE("povzner_lhs trivial zeros") {
  PairKernel k{1.0, 1.0, 1.0};
  Vec3 v{1.2, -0.3, 0.5};
  QuadResult same = povzner_lhs(v, v, 0.4, 0.6, 3, k, 1e-3);
  CHECK(same.value == 0.0);

  // n = 1: the integrand vanishes identically by energy conservation
  QuadResult e = povzner_lhs(v, Vec3{-0.4, 0.8, 0.0}, 0.4, 0.6, 1, k, 1e-3);
  CHECK(std::fabs(e.value) < 1e-8);
}

TEST_CASE("povzner_lhs matches the dense trapezoid oracle") {
  PairKernel k{1.0, 1.0, 1.0};
  Vec3 v{1, 0, 0}, vs{0, 0, 0};
  double oracle = povzner_lhs_oracle(v, vs, 0.5, 0.5, 2, k.s, k.kappa);
  QuadResult got = povzner_lhs(v, vs, 0.5, 0.5, 2, k, 1e-3);
  CHECK(std::fabs(got.value - oracle) / std::fabs(oracle) < 1e-6);

  // a second, asymmetric configuration
  Vec3 v2{0.7, -1.1, 0.4}, vs2{-0.2, 0.5, 1.3};
  double oracle2 = povzner_lhs_oracle(v2, vs2, 0.25, 0.75, 4, k.s, k.kappa);
  QuadResult got2 = povzner_lhs(v2, vs2, 0.25, 0.75, 4, k, 1e-3);
  CHECK(std::fabs(got2.value - oracle2) / std::fabs(oracle2) < 1e-6);
}

TEST_CASE("povzner lambda1 closed form") {
  PairKernel k{1.0, 1.0, 1.0};
  CHECK(povzner_lambda1(0.5, 0.5, k) == doctest::Approx(0.1875).epsilon(1e-14));
  PairKernel k2{1.0, 0.5, 2.0};
  // kappa/(2-s) * m_i m_j (m_i^2+m_j^2+m_i m_j)/(m_i+m_j)^4
  double expect = 2.0 / 1.5 * (0.25 * 0.75) * (0.0625 + 0.5625 + 0.1875) / 1.0;
  CHECK(povzner_lambda1(0.25, 0.75, k2) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("povzner_rhs structure at the origin") {
  // brackets all equal 1: rhs = -2 lambda1 n^{s/2} + 2 sum_a W_{n,a}
  PairKernel k{1.0, 1.0, 1.0};
  const int n = 4;
  const double mi = 0.3, mj = 0.7;
  double rhs = povzner_rhs({0, 0, 0}, {0, 0, 0}, mi, mj, n, k);
  // independent reassembly
  double C = (mi + mj) * (mi + mj) / (mi * mj);
  double expect = -2.0 * povzner_lambda1(mi, mj, k) * std::pow(n, 0.5 * k.s);
  for (int a = 1; a <= n - 1; ++a) {
    double Z = 0.0;
    int rmax = std::min(a, n - a);
    for (int r = 0; r <= rmax; ++r)
      for (int t = 0; r + t <= rmax; ++t)
        Z += std::exp(std::lgamma(n + 1.0) - std::lgamma(a - r - t + 1.0) -
                      std::lgamma(n - a - r - t + 1.0) - std::lgamma(2.0 * r + 1.0) -
                      2.0 * std::lgamma(t + 1.0));
    expect += 2.0 * kSphereAzimuth * Z * k.kappa * std::pow(C, -0.5 * k.s) *
              std::exp(std::lgamma(a + 1.0) + std::lgamma(n - a - 0.5 * k.s) -
                       std::lgamma(n + 1.0 - 0.5 * k.s));
  }
  CHECK(rhs == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("majorizations behind the certified Povzner weight") {
  // the two quadratic bounds that collapse I_{p,q,k,l} into J_{n,a}
  RngStream rng{21};
  for (int trial = 0; trial < 5000; ++trial) {
    double mi = rng.u01_open0(), mj = rng.u01_open0();
    double t = 0.5 * kPi * rng.u01();
    double msum2 = (mi + mj) * (mi + mj);
    double X = (mi * mi + mj * mj + 2.0 * mi * mj * std::cos(t)) / msum2;
    double Y = 2.0 * mi * mj * (1.0 - std::cos(t)) / msum2;
    CHECK(X + Y == doctest::Approx(1.0).epsilon(1e-12));
    double q1 = (std::pow(mi, 1.5) * std::sqrt(mj) - std::sqrt(mi) * std::pow(mj, 1.5)) /
                msum2 * (1.0 - std::cos(t));
    CHECK(q1 * q1 <= X * Y + 1e-14);
    double q2 = std::sqrt(mi * mj) / (mi + mj) * std::sin(t);
    CHECK(q2 * q2 <= X * Y + 1e-14);
    // theta^{-1-s} <= 2 sin(t) (C Y)^{-s/2-1}
    double s = 0.2 + 1.6 * rng.u01();
    double C = msum2 / (mi * mj);
    CHECK(std::pow(t, -1.0 - s) <=
          2.0 * std::sin(t) * std::pow(C * Y, -0.5 * s - 1.0) * (1.0 + 1e-12));
  }
}

TEST_CASE("povzner inequality holds on random draws") {
  RngStream rng{31};
  const double eps = 1e-3;
  int violations = 0;
  for (int trial = 0; trial < 400; ++trial) {
    double m1 = 0.1 + 0.8 * rng.u01();
    double m2 = 1.0 - m1;
    int n = 2 + static_cast<int>(rng.u01() * 5);
    static const double svals[3] = {0.5, 1.0, 1.5};
    PairKernel k{1.0, svals[trial % 3], 1.0};
    double R = (trial % 7 == 0) ? 10.0 : 4.0;
    Vec3 v{R * (2 * rng.u01() - 1), R * (2 * rng.u01() - 1), R * (2 * rng.u01() - 1)};
    Vec3 vs{R * (2 * rng.u01() - 1), R * (2 * rng.u01() - 1), R * (2 * rng.u01() - 1)};
    QuadResult lhs = povzner_lhs(v, vs, m1, m2, n, k, eps);
    double rhs = povzner_rhs(v, vs, m1, m2, n, k);
    if (lhs.value > rhs + 3.0 * lhs.error) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("gamma_moment_weights closed forms") {
  CHECK(u_gamma_ratio(1.0, 4.0) == doctest::Approx(24.0 / 11.631728).epsilon(1e-6));
  CHECK(u_gamma_ratio(1.0, 4.0) == doctest::Approx(2.06335).epsilon(1e-5));
  CHECK(u_gamma_ratio(0.0, 7.0) == doctest::Approx(1.0).epsilon(1e-14));
  // would-be s=2 limit: Gamma(k+1)/Gamma(k) = k
  CHECK(u_gamma_ratio(2.0 - 1e-12, 6.0) == doctest::Approx(6.0).epsilon(1e-9));

  GammaMomentWeights w = gamma_moment_weights(1.0, 3, 1);
  CHECK(w.K == doctest::Approx(4.0 / 15.0).epsilon(1e-12));  // B(2, 3/2)
  CHECK(w.K == doctest::Approx(0.266667).epsilon(1e-5));
  // half-interval variant stays below the full Beta bound
  auto f = [](double x) { return x * std::sqrt(1.0 - x); };
  double half = adaptive_simpson(f, 0.5, 1.0, 1e-12, 1e-12).value;
  CHECK(half < w.K);
  CHECK(half > 0.0);
  // companion L bound
  CHECK(w.L == doctest::Approx(std::pow(2.0 / kPi, 1.0) * beta_fn(3.0, 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_moment_weights(1.0, 3, 3), std::invalid_argument);
}

TEST_CASE("momlem_rhs hand evaluation on point-mass populations") {
  auto kernel = uniform_kernel(2, 1.0, 1.0, 1.0);
  std::vector<double> orders = MomentTable::order_grid(kernel, 6);
  std::vector<double> rho = {0.4, 1.7};
  MomentTable tb = constant_table(2, rho, orders);

  for (int n : {2, 3, 4, 5}) {
    double got = momlem_rhs(tb, 0, n, 0, 1, 0.3, 1.2, kernel);
    double S = 0.0;
    for (int a = 1; a <= n / 2; ++a)
      S += binom(n, a) * std::pow(n, 0.5) / std::pow(a, 1.5) * (2.0 * rho[0] * rho[1]);
    double expect = -0.3 * std::pow(n, 0.5) * (rho[0] + rho[1]) + 1.2 * S;
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  }
  // n = 2: exactly one term a = 1 with coefficient binom(2,1) 2^{s/2}
  double s_only = momlem_rhs(tb, 0, 2, 0, 1, 0.0, 1.0, kernel);
  CHECK(s_only == doctest::Approx(2.0 * std::pow(2.0, 0.5) * 2.0 * rho[0] * rho[1])
                      .epsilon(1e-12));
  // zero populations
  MomentTable z = constant_table(2, {0.0, 0.0}, orders);
  CHECK(momlem_rhs(z, 0, 3, 0, 1, 1.0, 1.0, kernel) == 0.0);
  // missing order
  MomentTable bad = constant_table(2, rho, {0.0, 2.0});
  CHECK_THROWS_AS(momlem_rhs(bad, 0, 2, 0, 1, 1.0, 1.0, kernel), std::out_of_range);
}

TEST_CASE("interp_mixed factor and inequality") {
  CHECK(interp_mixed(3.0, 3.0, 1.5) == 1.0);
  CHECK(interp_mixed(2.0, 4.0, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(interp_mixed(4.0, 2.0, 1.0), std::invalid_argument);

  RngStream rng{41};
  int violations = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    auto measure = [&rng]() {
      int atoms = 3 + static_cast<int>(rng.u01() * 30);
      std::vector<double> w(atoms), b(atoms);
      for (int q = 0; q < atoms; ++q) {
        w[q] = rng.u01_open0();
        double r = 4.0 * rng.u01();
        b[q] = std::sqrt(1.0 + r * r);
      }
      return [w, b](double order) {
        double acc = 0.0;
        for (std::size_t q = 0; q < w.size(); ++q) acc += w[q] * std::pow(b[q], order);
        return acc;
      };
    };
    auto mf = measure();
    auto mg = measure();
    double a = 5.0 * rng.u01();
    double b = a + 5.0 * rng.u01();
    double beta = 0.05 + 1.95 * rng.u01();
    double slack = interp_mixed_slack(a, b, beta, mf, mg);
    if (slack < -1e-12 * (mf(b + beta) * mg(b + beta) + 1.0)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("super_solution closed forms") {
  BernoulliODE ode{1.0, 1.0, 1.0, 0.0};
  CHECK(super_solution(ode, 2.0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(super_solution(ode, 1e9) == doctest::Approx(1.0).epsilon(1e-8));
  BernoulliODE o2{4.0, 1.0, 1.0, 0.1};
  CHECK(propagation_bound(o2) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(propagation_bound(BernoulliODE{1, 1, 1, 0.0}) == 1.0);
  CHECK(propagation_bound(BernoulliODE{1, 1, 1, 1e9}) == 1e9);
}

TEST_CASE("integrate_bernoulli against closed forms") {
  // B = 0, c = 1: x(t) = x0/(1 + x0 t)
  BernoulliODE decay{1.0, 0.0, 1.0, 1.0};
  Trajectory tr = integrate_bernoulli(decay, 2.0, 1e-4);
  double max_err = 0.0;
  for (std::size_t k = 0; k < tr.t.size(); ++k)
    max_err = std::max(max_err, std::fabs(tr.x[k] - 1.0 / (1.0 + tr.t[k])));
  CHECK(max_err < 1e-8);

  // equilibrium initial condition stays put
  BernoulliODE eq{2.0, 3.0, 0.7, std::pow(1.5, 1.0 / 1.7)};
  Trajectory te = integrate_bernoulli(eq, 1.0, 1e-3);
  for (double x : te.x) CHECK(std::fabs(x - eq.x0) < 1e-10);

  // comparison with the super solution
  BernoulliODE big{1.0, 1.0, 1.0, 10.0};
  Trajectory tb = integrate_bernoulli(big, 3.0, 1e-4);
  for (std::size_t k = 0; k < tb.t.size(); ++k)
    if (tb.t[k] >= 1e-4) CHECK(tb.x[k] <= super_solution(big, tb.t[k]) + 1e-9);
}

TEST_CASE("exp_series degenerate and point-mass tables") {
  auto kernel = uniform_kernel(2, 1.0, 1.0, 1.0);
  std::vector<double> orders = MomentTable::order_grid(kernel, 10);

  // only m0 nonzero: E collapses to the mass
  MomentTable tb = constant_table(2, {0.7, 0.3}, orders);
  for (int i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < orders.size(); ++k)
      if (orders[k] > 0.0) tb.values[0][i][k] = 0.0;
  ExpSeries se = exp_series(tb, 0, 0.5, 1.0, 8, SeriesVariant::generation, kernel, 1.0);
  CHECK(se.E == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(se.H[0] == 0.0);

  // point masses at the origin: direct-summation oracle
  MomentTable pm = constant_table(2, {0.4, 0.6}, orders, 0.8);
  double sigma = 0.6, alpha = 1.3, lam_nat = 1.0, t = 0.8;
  ExpSeries sp = exp_series(pm, 0, sigma, alpha, 8, SeriesVariant::generation, kernel, lam_nat);
  double direct = 0.0;
  for (int n = 0; n <= 8; ++n)
    direct += std::pow(sigma * t, 2.0 * n / lam_nat) /
              std::pow(std::tgamma(n + 1.0), alpha);
  CHECK(sp.E == doctest::Approx(direct).epsilon(1e-12));

  // partial sums nondecreasing in p
  double prev = 0.0;
  for (int p = 1; p <= 10; ++p) {
    ExpSeries s2 = exp_series(pm, 0, sigma, alpha, p, SeriesVariant::generation, kernel, 1.0);
    CHECK(s2.E >= prev - 1e-15);
    prev = s2.E;
  }
}

TEST_CASE("prop2 lower bound holds on random atom tables") {
  auto kernel = uniform_kernel(2, 1.0, 1.0, 1.0);
  std::vector<double> orders = MomentTable::order_grid(kernel, 10);
  RngStream rng{55};
  int violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    MomentTable tb = atom_table(rng, 2, orders, trial % 3 == 0 ? 12.0 : 3.0);
    for (double sigma : {1.0, 0.5, 0.1, 0.02}) {
      for (double alpha : {1.0, 1.5}) {
        ExpSeries se =
            exp_series(tb, 0, sigma, alpha, 8, SeriesVariant::propagation, kernel, 1.0);
        Prop2Result pr =
            prop2_check(se, 0, 1, tb.at(0, 0, 0.0), tb.at(0, 1, 0.0), 1.0, 2);
        if (!pr.pass) ++violations;
      }
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("exp_equivalence_i on closed-form measures") {
  // all mass at v = 0: every moment equals m0
  double m0 = 1.3;
  auto momentFn = [m0](double, int) { return m0; };
  double sigma0 = 0.8, K = 2.0;
  ExpEquivalenceI r = exp_equivalence_i(momentFn, 1, sigma0, 1.0, K);
  CHECK(r.exp_integral == doctest::Approx(m0 * std::exp(0.5 * sigma0)).epsilon(1e-10));
  CHECK(r.bound == doctest::Approx(2.0 * K).epsilon(1e-14));
  CHECK(r.lhs_sup == doctest::Approx(m0).epsilon(1e-12));
  CHECK(r.premise);
  CHECK(r.implication_ok);

  // Monte Carlo Gaussian measure, alpha = 2
  RngStream rng{66};
  const int N = 20000;
  std::vector<double> b2(N);
  for (int k = 0; k < N; ++k) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    b2[k] = 1.0 + 0.5 * norm2(v);
  }
  auto mc = [&](double order, int) {
    double acc = 0.0;
    for (double b : b2) acc += std::pow(b, 0.5 * order);
    return acc / N;
  };
  double alpha = 2.0;
  double sup = 0.0;
  for (int n = 0; n <= 60; ++n)
    sup = std::max(sup, std::pow(0.2, n) * mc(2.0 * n, 0) /
                            std::pow(std::tgamma(n + 1.0), alpha));
  ExpEquivalenceI g = exp_equivalence_i(mc, 1, 0.2, alpha, sup * 1.001);
  CHECK(g.premise);
  CHECK(g.implication_ok);
}

TEST_CASE("exp_equivalence_ii sigma1 values") {
  // rho = 2: A = 1/2 at n = 1, so sigma1 = I sigma0^2/4 for K A <= 1
  double s1 = exp_equivalence_ii_sigma1(2.0, 0.5, 2.0, 1);
  CHECK(s1 == doctest::Approx(0.25 * 0.25).epsilon(1e-12));

  // independent direct minimization for rho = 1, sigma0 = 0.5, K = 2, I = 2
  double rho = 1.0, sigma0 = 0.5, K = 2.0;
  int I = 2;
  double A = 0.0;
  for (int n = 1; n <= 1000; ++n) {
    double kn = std::ceil(2.0 * n / rho);
    A = std::max(A, std::exp(std::lgamma(kn + 1.0) - (2.0 / rho) * std::lgamma(n + 1.0) -
                             (2.0 * n / rho) * std::log(4.0 / rho)));
  }
  double best = 1e300;
  for (int n = 1; n <= 1000; ++n)
    best = std::min(best, 0.5 * I * std::pow(sigma0, 2.0 / rho + 1.0) *
                              std::pow(rho / 4.0, 2.0 / rho) / std::pow(K * A, 1.0 / n));
  CHECK(exp_equivalence_ii_sigma1(rho, sigma0, K, I) == doctest::Approx(best).epsilon(1e-12));

  // monotone nonincreasing in K, positive n-th-root limit
  double prev = 1e300;
  for (double K2 : {1.0, 10.0, 1e4, 1e8}) {
    double v = exp_equivalence_ii_sigma1(1.0, 0.5, K2, 2);
    CHECK(v <= prev * (1.0 + 1e-12));
    prev = v;
  }
  CHECK(prev > 0.0);
}

TEST_CASE("sobolev interpolation exponents") {
  SobolevExponents e = sobolev_interp_exponents(3, 1.0, 1.0);
  CHECK(e.q == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK(e.theta == doctest::Approx(0.75).epsilon(1e-14));

  SobolevExponents b = sobolev_interp_exponents(3, 1.0, 2.0 / 3.0);
  CHECK(b.q == doctest::Approx(3.0).epsilon(1e-12));  // Sobolev endpoint 2/(1-s/d)

  RngStream rng{71};
  for (int trial = 0; trial < 200; ++trial) {
    int d = 2 + static_cast<int>(rng.u01() * 3);
    double s = 0.1 + 1.8 * rng.u01();
    double lo = 1.0 - s / d;
    double alpha = lo + (1.0 - lo) * rng.u01();
    SobolevExponents x = sobolev_interp_exponents(d, s, alpha);
    CHECK(x.theta * x.q * alpha == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(x.q > 2.0);
    CHECK(x.theta > 0.0);
    CHECK(x.theta <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(sobolev_interp_exponents(3, 1.0, 0.5), std::domain_error);
}

TEST_CASE("moment table csv roundtrip") {
  auto kernel = uniform_kernel(2, 1.0, 1.0, 1.0);
  std::vector<double> orders = MomentTable::order_grid(kernel, 3);
  RngStream rng{81};
  MomentTable tb = atom_table(rng, 2, orders, 3.0);
  tb.times = {0.25};
  tb.write_csv("roundtrip_test.csv");
  MomentTable rd = MomentTable::read_csv("roundtrip_test.csv");
  REQUIRE(rd.times.size() == tb.times.size());
  REQUIRE(rd.orders.size() == tb.orders.size());
  for (int i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < orders.size(); ++k)
      CHECK(rd.values[0][i][k] == tb.values[0][i][k]);
  std::remove("roundtrip_test.csv");
}

TEST_CASE("order grid covers series requirements") {
  auto kernel = uniform_kernel(2, 1.0, 1.0, 1.0);
  auto orders = MomentTable::order_grid(kernel, 10);
  MomentTable tb;
  tb.orders = orders;
  for (int n = 0; n <= 10; ++n) CHECK(tb.order_index(2.0 * n) >= 0);
  for (int n = 1; n <= 10; ++n) CHECK(tb.order_index(2.0 * n + 1.0) >= 0);
}

TEST_CASE("lower mass constant estimate is positive for spread ensembles") {
  RngStream rng{91};
  std::vector<Vec3> vel(5000);
  for (auto& v : vel) v = {rng.normal(), rng.normal(), rng.normal()};
  std::vector<Vec3> probes = {{0, 0, 0}, {5, 0, 0}, {0, -20, 0}, {40, 40, 40}};
  double c = estimate_lower_mass_constant(vel, 1e-3, 1.0, 0.5, probes);
  CHECK(c > 0.0);
  // at a far probe the ratio approaches the |v|/<v> limit
  double far = 0.0;
  for (const Vec3& z : vel) far += norm(Vec3{40, 40, 40} - z);
  far *= 1e-3 / std::pow(bracket({40, 40, 40}, 0.5), 1.0);
  CHECK(c <= far * (1.0 + 1e-12));
}

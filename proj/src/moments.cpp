#include "mixkin/moments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mixkin {

// ---- MomentTable -------------------------------------------------------------

int MomentTable::order_index(double k, double tol) const {
  auto it = std::lower_bound(orders.begin(), orders.end(), k - tol);
  if (it == orders.end() || std::fabs(*it - k) > tol) return -1;
  return static_cast<int>(it - orders.begin());
}

double MomentTable::at(std::size_t t, int i, double order) const {
  int idx = order_index(order);
  if (idx < 0)
    throw std::out_of_range("MomentTable: order " + std::to_string(order) + " not stored");
  return values.at(t).at(i).at(idx);
}

double MomentTable::cumulative(std::size_t t, double order) const {
  double s = 0.0;
  for (int i = 0; i < n_species; ++i) s += at(t, i, order);
  return s;
}

std::vector<double> MomentTable::order_grid(const KernelMatrix& k, int pmax) {
  std::set<double> grid;
  for (int n = 0; n <= pmax; ++n) grid.insert(2.0 * n);
  for (int i = 0; i < k.size; ++i)
    for (int j = 0; j < k.size; ++j)
      for (int n = 1; n <= pmax; ++n) grid.insert(2.0 * n + k.lam(i, j));
  return {grid.begin(), grid.end()};
}

void MomentTable::write_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fprintf(f, "time,species,order,value\n");
  for (std::size_t t = 0; t < times.size(); ++t)
    for (int i = 0; i < n_species; ++i)
      for (std::size_t k = 0; k < orders.size(); ++k)
        std::fprintf(f, "%.17g,%d,%.17g,%.17g\n", times[t], i + 1, orders[k],
                     values[t][i][k]);
  std::fclose(f);
}

MomentTable MomentTable::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  std::getline(in, line);  // header
  MomentTable tb;
  std::set<double> tset, oset;
  struct Row {
    double t, order, value;
    int sp;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r{};
    if (std::sscanf(line.c_str(), "%lg,%d,%lg,%lg", &r.t, &r.sp, &r.order, &r.value) != 4)
      throw std::runtime_error("bad moments.csv row: " + line);
    rows.push_back(r);
    tset.insert(r.t);
    oset.insert(r.order);
    tb.n_species = std::max(tb.n_species, r.sp);
  }
  tb.times.assign(tset.begin(), tset.end());
  tb.orders.assign(oset.begin(), oset.end());
  tb.values.assign(tb.times.size(),
                   std::vector<std::vector<double>>(
                       tb.n_species, std::vector<double>(tb.orders.size(), 0.0)));
  for (const Row& r : rows) {
    std::size_t ti = std::lower_bound(tb.times.begin(), tb.times.end(), r.t) - tb.times.begin();
    std::size_t oi =
        std::lower_bound(tb.orders.begin(), tb.orders.end(), r.order) - tb.orders.begin();
    tb.values[ti][r.sp - 1][oi] = r.value;
  }
  return tb;
}

// ---- Povzner -------------------------------------------------------------------

double povzner_lambda1(double m_i, double m_j, const PairKernel& k) {
  double msum = m_i + m_j;
  return k.kappa / (2.0 - k.s) * m_i * m_j * (m_i * m_i + m_j * m_j + m_i * m_j) /
         (msum * msum * msum * msum);
}

double povzner_multinomial_z(int n, int a) {
  double z = 0.0;
  int rmax = std::min(a, n - a);
  for (int r = 0; r <= rmax; ++r) {
    for (int t = 0; r + t <= rmax; ++t) {
      double lg = std::lgamma(n + 1.0) - std::lgamma(a - r - t + 1.0) -
                  std::lgamma(n - a - r - t + 1.0) - std::lgamma(2.0 * r + 1.0) -
                  2.0 * std::lgamma(t + 1.0);
      z += std::exp(lg);
    }
  }
  return z;
}

double povzner_pair_weight(int n, int a, double m_i, double m_j, const PairKernel& k) {
  double C = (m_i + m_j) * (m_i + m_j) / (m_i * m_j);
  return kSphereAzimuth * povzner_multinomial_z(n, a) * k.kappa *
         std::pow(C, -0.5 * k.s) * beta_fn(a + 1.0, n - a - 0.5 * k.s);
}

double povzner_lambda2(int n, double m_i, double m_j, const PairKernel& k) {
  double lam2 = 0.0;
  for (int a = 1; a <= n - 1; ++a) {
    double display = binom(n, a) * (std::pow(n, 0.5 * k.s) /
                                        std::pow(n - a, 0.5 * k.s + 1.0) +
                                    1.0 / a);
    lam2 = std::max(lam2, povzner_pair_weight(n, a, m_i, m_j, k) / display);
  }
  return lam2;
}

namespace {

// phi-average of the bracket-power exchange at angle t; the phi trapezoid is
// exact here (trig polynomial of degree <= 2n) once nodes > 2n.
double phi_average(const Vec3& v, const Vec3& vs, double m_i, double m_j, int n, double t,
                   const ScatteringFrame& fr, int nphi) {
  const double msum = m_i + m_j;
  const double ci = m_j / msum, cj = m_i / msum;
  const double one_m_cos = 1.0 - std::cos(t);
  const double sin_t = std::sin(t);
  const Vec3 u = v - vs;
  const double bi = 1.0 + m_i * norm2(v);
  const double bj = 1.0 + m_j * norm2(vs);
  double acc = 0.0;
  for (int kphi = 0; kphi < nphi; ++kphi) {
    double phi = 2.0 * kPi * kphi / nphi;
    Vec3 g = gamma(fr, phi);
    Vec3 vp = v - ci * one_m_cos * u + ci * sin_t * g;
    Vec3 vsp = vs + cj * one_m_cos * u - cj * sin_t * g;
    double bip = 1.0 + m_i * norm2(vp);
    double bjp = 1.0 + m_j * norm2(vsp);
    acc += std::pow(bip, n) + std::pow(bjp, n) - std::pow(bi, n) - std::pow(bj, n);
  }
  return acc / nphi;
}

}  // namespace

QuadResult povzner_lhs(const Vec3& v, const Vec3& v_star, double m_i, double m_j, int n,
                       const PairKernel& k, double eps) {
  if (n < 1) throw std::invalid_argument("povzner_lhs: n >= 1 required");
  if (!(eps > 0.0 && eps < 0.5 * kPi))
    throw std::invalid_argument("povzner_lhs: eps must lie in (0, pi/2)");
  Vec3 u = v - v_star;
  if (norm2(u) == 0.0) return {0.0, 0.0, true};  // v' = v, v*' = v* identically
  ScatteringFrame fr = make_frame(u);
  const int nphi = std::max(64, 4 * n + 8);

  auto integrand = [&](double t) {
    return kSphereAzimuth * phi_average(v, v_star, m_i, m_j, n, t, fr, nphi) * k.kappa *
           std::pow(t, -1.0 - k.s);
  };
  QuadResult body = graded_gauss(integrand, eps, 0.5 * kPi, 28, 12);

  // [0, eps] tail: phi-averaged exchange is even, c2 t^2 + c4 t^4 + ...
  double a1 = phi_average(v, v_star, m_i, m_j, n, eps, fr, nphi) / (eps * eps);
  double a2 =
      phi_average(v, v_star, m_i, m_j, n, 0.5 * eps, fr, nphi) / (0.25 * eps * eps);
  double c4 = (a1 - a2) / (0.75 * eps * eps);
  double c2 = a2 - 0.25 * c4 * eps * eps;
  double w2 = std::pow(eps, 2.0 - k.s) / (2.0 - k.s);
  double w4 = std::pow(eps, 4.0 - k.s) / (4.0 - k.s);
  double tail = kSphereAzimuth * k.kappa * (c2 * w2 + c4 * w4);
  double tail_one_term = kSphereAzimuth * k.kappa * a1 * w2;
  double tail_err = std::fabs(tail - tail_one_term) + std::fabs(kSphereAzimuth * k.kappa * c4 * w4);

  return {body.value + tail, body.error + tail_err, body.converged};
}

double povzner_rhs(const Vec3& v, const Vec3& v_star, double m_i, double m_j, int n,
                   const PairKernel& k) {
  if (n < 2) throw std::invalid_argument("povzner_rhs: n >= 2 required");
  double bi = bracket(v, m_i), bj = bracket(v_star, m_j);
  double bi2 = bi * bi, bj2 = bj * bj;
  double out = -povzner_lambda1(m_i, m_j, k) * std::pow(n, 0.5 * k.s) *
               (std::pow(bi2, n) + std::pow(bj2, n));
  for (int a = 1; a <= n - 1; ++a) {
    out += povzner_pair_weight(n, a, m_i, m_j, k) *
           (std::pow(bi2, a) * std::pow(bj2, n - a) +
            std::pow(bi2, n - a) * std::pow(bj2, a));
  }
  return out;
}

GammaMomentWeights gamma_moment_weights(double s, int n, int a) {
  if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("gamma_moment_weights: s in (0,2)");
  if (!(a >= 1 && a <= n - 1))
    throw std::invalid_argument("gamma_moment_weights: need 1 <= a <= n-1");
  GammaMomentWeights w;
  w.K = beta_fn(a + 1.0, n - a - 0.5 * s);
  w.L = std::pow(2.0 / kPi, s) * beta_fn(n - a + 1.0, a);
  return w;
}

// ---- moment ODE -----------------------------------------------------------------

double momlem_rhs(const MomentTable& table, std::size_t t_idx, int n, int i, int j,
                  double C1, double C2, const KernelMatrix& kernel) {
  const double lam = kernel.lam(i, j);
  const double s = kernel.sij(i, j);
  const double ns = std::pow(n, 0.5 * s);
  double S = 0.0;
  for (int a = 1; a <= n / 2; ++a) {
    double w = binom(n, a) * ns / std::pow(a, 0.5 * s + 1.0);
    S += w * (table.at(t_idx, j, 2.0 * a) * table.at(t_idx, i, 2.0 * (n - a) + lam) +
              table.at(t_idx, i, 2.0 * a) * table.at(t_idx, j, 2.0 * (n - a) + lam));
  }
  double coercive = table.at(t_idx, i, 2.0 * n + lam) + table.at(t_idx, j, 2.0 * n + lam);
  return -C1 * ns * coercive + C2 * S;
}

double interp_mixed(double a, double b, double beta) {
  if (!(b >= a && a >= 0.0 && beta > 0.0))
    throw std::invalid_argument("interp_mixed: need b >= a >= 0 and beta > 0");
  return beta / (b + beta - a);
}

double interp_mixed_slack(double a, double b, double beta,
                          const std::function<double(double)>& mf,
                          const std::function<double(double)>& mg) {
  double theta = interp_mixed(a, b, beta);
  double lhs = mf(a + beta) * mg(b);
  double rhs = theta * mf(b + beta) * mg(a) + (1.0 - theta) * mg(b + beta) * mf(a);
  return rhs - lhs;
}

double super_solution(const BernoulliODE& ode, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("super_solution: t > 0 required");
  return std::pow(ode.B / ode.A, 1.0 / (1.0 + ode.c)) +
         std::pow(1.0 / (ode.c * ode.A), 1.0 / ode.c) * std::pow(t, -1.0 / ode.c);
}

double propagation_bound(const BernoulliODE& ode) {
  return std::max(ode.x0, std::pow(ode.B / ode.A, 1.0 / (1.0 + ode.c)));
}

Trajectory integrate_bernoulli(const BernoulliODE& ode, double T, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_bernoulli: dt > 0 required");
  auto f = [&](double x) { return -ode.A * std::pow(x, 1.0 + ode.c) + ode.B; };
  Trajectory tr;
  std::size_t steps = static_cast<std::size_t>(std::ceil(T / dt));
  tr.t.reserve(steps + 1);
  tr.x.reserve(steps + 1);
  double x = ode.x0, t = 0.0;
  tr.t.push_back(t);
  tr.x.push_back(x);
  for (std::size_t k = 0; k < steps; ++k) {
    double h = std::min(dt, T - t);
    double k1 = f(x);
    double k2 = f(x + 0.5 * h * k1);
    double k3 = f(x + 0.5 * h * k2);
    double k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    if (!std::isfinite(x) || std::fabs(x) > 1e14)
      throw std::runtime_error("integrate_bernoulli: step-size blowup at t=" +
                               std::to_string(t));
    tr.t.push_back(t);
    tr.x.push_back(x);
  }
  return tr;
}

// ---- exponential series -----------------------------------------------------------

namespace {

// sum of exp(logw[k]) * m[k] in log space; flags overflow past double range
double logspace_sum(const std::vector<double>& logterm, bool& overflow) {
  double mx = -1e308;
  for (double lt : logterm) mx = std::max(mx, lt);
  if (mx == -1e308) return 0.0;
  double s = 0.0;
  for (double lt : logterm) s += std::exp(lt - mx);
  double lv = mx + std::log(s);
  if (lv > 708.0) {
    overflow = true;
    return std::numeric_limits<double>::infinity();
  }
  return std::exp(lv);
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : -1e308; }

}  // namespace

ExpSeries exp_series(const MomentTable& table, std::size_t t_idx, double sigma, double alpha,
                     int p, SeriesVariant variant, const KernelMatrix& kernel,
                     double lambda_natural) {
  if (!(sigma > 0.0 && sigma <= 1.0))
    throw std::invalid_argument("exp_series: sigma in (0,1] required");
  if (!(alpha >= 1.0)) throw std::invalid_argument("exp_series: alpha >= 1 required");
  const int I = table.n_species;
  const double t = table.times.at(t_idx);
  ExpSeries out;
  out.sigma = sigma;
  out.alpha = alpha;
  out.t = t;
  out.p = p;
  out.variant = variant;
  out.E_i.assign(I, 0.0);
  out.F.assign(I * I, 0.0);
  out.G.assign(I * I, 0.0);
  out.H.assign(I, 0.0);

  const double base = (variant == SeriesVariant::generation) ? sigma * t : sigma;
  if (base <= 0.0) {  // t = 0 in the generation variant: only n = 0 survives
    for (int i = 0; i < I; ++i) out.E_i[i] = table.at(t_idx, i, 0.0);
    for (int i = 0; i < I; ++i) out.E += out.E_i[i];
    return out;
  }
  const double logbase = std::log(base);
  auto logw = [&](int n) { return (2.0 * n / lambda_natural) * logbase; };
  auto logfact = [&](int n) { return alpha * std::lgamma(n + 1.0); };

  for (int i = 0; i < I; ++i) {
    std::vector<double> terms, hterms;
    for (int n = 0; n <= p; ++n) {
      double lm = safe_log(table.at(t_idx, i, 2.0 * n));
      terms.push_back(logw(n) + lm - logfact(n));
      if (n >= 1)
        hterms.push_back(std::log(static_cast<double>(n)) + logw(n) - logbase + lm -
                         logfact(n));
    }
    out.E_i[i] = logspace_sum(terms, out.overflow);
    out.H[i] = logspace_sum(hterms, out.overflow);
  }
  {
    std::vector<double> terms;
    for (int n = 0; n <= p; ++n)
      terms.push_back(logw(n) + safe_log(table.cumulative(t_idx, 2.0 * n)) - logfact(n));
    out.E = logspace_sum(terms, out.overflow);
  }
  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < I; ++j) {
      const double lam = kernel.lam(i, j);
      const double s = kernel.sij(i, j);
      std::vector<double> fterms, gterms;
      for (int n = 2; n <= p; ++n) {
        fterms.push_back(0.5 * s * std::log(static_cast<double>(n)) + logw(n) +
                         safe_log(table.at(t_idx, i, 2.0 * n + lam)) - logfact(n));
        double S = 0.0;
        for (int a = 1; a <= n / 2; ++a) {
          double w = binom(n, a) * std::pow(n, 0.5 * s) / std::pow(a, 0.5 * s + 1.0);
          S += w * (table.at(t_idx, j, 2.0 * a) * table.at(t_idx, i, 2.0 * (n - a) + lam) +
                    table.at(t_idx, i, 2.0 * a) * table.at(t_idx, j, 2.0 * (n - a) + lam));
        }
        gterms.push_back(logw(n) + safe_log(S) - logfact(n));
      }
      out.F[i * I + j] = logspace_sum(fterms, out.overflow);
      out.G[i * I + j] = logspace_sum(gterms, out.overflow);
    }
  }
  return out;
}

Prop2Result prop2_check(const ExpSeries& se, int i, int j, double m0_i, double m0_j,
                        double lambda_natural, int n_species) {
  if (se.variant != SeriesVariant::propagation)
    throw std::invalid_argument("prop2_check: propagation-variant series required");
  const double e = 2.718281828459045;
  Prop2Result r;
  r.lhs = se.f(i, j, n_species) + se.f(j, i, n_species);
  r.rhs = std::pow(se.sigma, -0.5 * lambda_natural) *
          (se.E_i[i] + se.E_i[j] - 2.0 * e * std::max(m0_i, m0_j));
  r.slack = r.lhs - r.rhs;
  r.pass = r.slack >= -1e-9 * (std::fabs(r.lhs) + std::fabs(r.rhs) + 1.0);
  return r;
}

// ---- equivalence lemmas -------------------------------------------------------------

ExpEquivalenceI exp_equivalence_i(const std::function<double(double, int)>& moment_of,
                                  int n_species, double sigma0, double alpha, double K) {
  ExpEquivalenceI r;
  double m0 = 0.0;
  for (int i = 0; i < n_species; ++i) m0 += moment_of(0.0, i);

  // sup_n sigma0^n m_2n/(n!)^alpha; terms eventually collapse under (n!)^alpha
  double prev = 0.0;
  int flat = 0;
  for (int n = 0; n <= 400; ++n) {
    double m2n = 0.0;
    for (int i = 0; i < n_species; ++i) m2n += moment_of(2.0 * n, i);
    double term =
        std::exp(n * std::log(sigma0) + safe_log(m2n) - alpha * std::lgamma(n + 1.0));
    r.lhs_sup = std::max(r.lhs_sup, term);
    if (term < prev && term < 1e-18 * (r.lhs_sup + 1e-300)) {
      if (++flat > 3) break;
    } else {
      flat = 0;
    }
    prev = term;
  }

  // sum_i int exp(sigma0^{1/alpha} <v>_i^{2/alpha}/2) f_i
  //   = sum_n (sigma0^{1/alpha}/2)^n m_{2n/alpha} / n!
  double coef = std::pow(sigma0, 1.0 / alpha) * 0.5;
  for (int i = 0; i < n_species; ++i) {
    double total = 0.0;
    for (int n = 0; n <= 600; ++n) {
      double term = std::exp(n * std::log(coef) - std::lgamma(n + 1.0)) *
                    moment_of(2.0 * n / alpha, i);
      total += term;
      if (n > 4 && term < 1e-14 * total) break;
    }
    r.exp_integral += total;
  }
  r.bound = 2.0 * std::pow(m0, 1.0 - 1.0 / alpha) * std::pow(K, 1.0 / alpha);
  r.premise = r.lhs_sup <= K * (1.0 + 1e-12);
  r.implication_ok = !r.premise || (r.exp_integral <= r.bound * (1.0 + 1e-12));
  return r;
}

double exp_equivalence_ii_sigma1(double rho, double sigma0, double K, int n_species) {
  if (!(rho > 0.0 && rho <= 2.0))
    throw std::invalid_argument("exp_equivalence_ii_sigma1: rho in (0,2] required");
  if (!(sigma0 > 0.0 && sigma0 <= 1.0))
    throw std::invalid_argument("exp_equivalence_ii_sigma1: sigma0 in (0,1] required");
  if (!(K >= 1.0)) throw std::invalid_argument("exp_equivalence_ii_sigma1: K >= 1 required");
  const int NMAX = 1000;
  double A = 0.0;
  for (int n = 1; n <= NMAX; ++n) {
    double kn = std::ceil(2.0 * n / rho);
    double lg = std::lgamma(kn + 1.0) - (2.0 / rho) * std::lgamma(n + 1.0) -
                (2.0 * n / rho) * std::log(4.0 / rho);
    A = std::max(A, std::exp(lg));
  }
  double front = 0.5 * n_species * std::pow(sigma0, 2.0 / rho + 1.0) *
                 std::pow(0.25 * rho, 2.0 / rho);
  double inf = 1e300;
  double logKA = std::log(K * A);
  for (int n = 1; n <= NMAX; ++n) inf = std::min(inf, std::exp(-logKA / n));
  return front * inf;
}

SobolevExponents sobolev_interp_exponents(int d, double s, double alpha) {
  if (d < 2) throw std::domain_error("sobolev_interp_exponents: d >= 2 required");
  if (!(s > 0.0 && s < 2.0))
    throw std::domain_error("sobolev_interp_exponents: s in (0,2) required");
  double lo = 1.0 - s / d;
  if (!(alpha >= lo - 1e-12 && alpha <= 1.0 + 1e-12))
    throw std::domain_error("sobolev_interp_exponents: alpha must lie in [1-s/d, 1]");
  SobolevExponents e;
  e.q = 2.0 * (1.0 + s / (d * alpha));
  e.theta = d / (s + d * alpha);
  return e;
}

double estimate_lower_mass_constant(const std::vector<Vec3>& velocities, double weight,
                                    double lambda, double bracket_mass,
                                    const std::vector<Vec3>& probes) {
  double cmin = 1e300;
  for (const Vec3& p : probes) {
    double integ = 0.0;
    for (const Vec3& z : velocities) integ += std::pow(norm(p - z), lambda);
    integ *= weight;
    double br = std::pow(bracket(p, bracket_mass), lambda);
    cmin = std::min(cmin, integ / br);
  }
  return cmin;
}

}  // namespace mixkin
